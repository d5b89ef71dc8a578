//! Line-delimited JSON records exchanged with an external forecaster.
//!
//! ```text
//! -> {"type":"init","L":48,"H":12,"N":8,"channels":2,"K":2.0,"epsilon":0.2,"adjacency":[[0,1,...],...]}
//! -> {"type":"predict","id":0,"context":[[...2N floats...], ...L rows]}
//! <- {"type":"prediction","id":0,"values":[[...2N floats...], ...H rows]}
//! ```
//!
//! Values are normalized. Floats are written as shortest round-trip decimals;
//! `null` in a response stands for a non-finite value.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Init(Init),
    Predict(Predict),
    Prediction(Prediction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Init {
    #[serde(rename = "L")]
    pub context_len: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub channels: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub epsilon: f64,
    pub adjacency: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predict {
    pub id: u64,
    pub context: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: u64,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Record {
    pub fn type_name(&self) -> &'static str {
        match self {
            Record::Init(_) => "init",
            Record::Predict(_) => "predict",
            Record::Prediction(_) => "prediction",
        }
    }

    /// One line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire records always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end())
    }
}

pub fn rows_of(a: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

impl Prediction {
    /// Dense `(rows, width)` array with `null` mapped to NaN. `Err` carries the
    /// observed `(rows, width)` when rows are ragged or empty.
    pub fn to_array(&self) -> Result<Array2<f64>, (usize, usize)> {
        let rows = self.values.len();
        let width = self.values.first().map_or(0, Vec::len);
        if rows == 0 || width == 0 || self.values.iter().any(|r| r.len() != width) {
            let widest = self.values.iter().map(Vec::len).max().unwrap_or(0);
            return Err((rows, widest));
        }
        let flat: Vec<f64> = self
            .values
            .iter()
            .flatten()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect();
        Ok(Array2::from_shape_vec((rows, width), flat).expect("shape checked above"))
    }
}
