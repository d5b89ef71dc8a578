use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::instance::{InstanceResult, InstanceSummary};
use crate::error::{Error, Result};

/// One `(model, instance, seed)` line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub model: String,
    pub seed: u64,
    pub mean_vpt: f64,
    pub test_mse: f64,
    pub valid: bool,
    pub n_degenerate: usize,
}

/// One trajectory of one `(model, instance, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    #[serde(rename = "K")]
    pub k: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub model: String,
    pub seed: u64,
    pub ic_index: usize,
    pub vpt: usize,
    pub test_mse: f64,
    pub valid: bool,
    pub degenerate_reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryRow {
    #[serde(rename = "K")]
    k: f64,
    rho: f64,
    #[serde(rename = "N")]
    n: usize,
    model: String,
    seeds: usize,
    mean_vpt: f64,
    test_mse: f64,
    valid: bool,
    n_degenerate: usize,
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_csv<W: Write>(out: W, results: &[InstanceResult]) -> Result<()> {
    write_rows(out, results.iter().map(InstanceResult::row))
}

pub fn write_detail_csv<W: Write>(out: W, results: &[InstanceResult]) -> Result<()> {
    let rows = results.iter().flat_map(|res| {
        res.rollouts.iter().map(move |(ic, r)| DetailRow {
            k: res.key.k,
            rho: res.key.rho,
            n: res.key.n,
            model: res.model.clone(),
            seed: res.seed,
            ic_index: *ic,
            vpt: r.vpt,
            test_mse: r.test_mse,
            valid: r.valid,
            degenerate_reason: r.degenerate_reason.clone().unwrap_or_default(),
        })
    });
    write_rows(out, rows)
}

pub fn write_summary_csv<W: Write>(out: W, summaries: &[InstanceSummary]) -> Result<()> {
    write_rows(
        out,
        summaries.iter().map(|s| SummaryRow {
            k: s.key.k,
            rho: s.key.rho,
            n: s.key.n,
            model: s.model.clone(),
            seeds: s.seeds,
            mean_vpt: s.mean_vpt,
            test_mse: s.test_mse,
            valid: s.valid,
            n_degenerate: s.n_degenerate,
        }),
    )
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected = [
        "K",
        "rho",
        "N",
        "model",
        "seed",
        "mean_vpt",
        "test_mse",
        "valid",
        "n_degenerate",
    ];
    if header.iter().ne(expected) {
        return Err(Error::config(
            "results header",
            format!(
                "expected `{}`, found `{}`",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
