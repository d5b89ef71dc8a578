//! The forecasting interface: given the ring graph and `L` normalized context
//! rows, predict the next `H` rows.
//!
//! Built-in baselines (persistence, climatology, ridge) and the exact-map
//! oracle live here, together with the adapter that drives an external
//! forecaster process over the line-delimited JSON protocol in [`wire`].

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use ndarray::Array2;

use crate::dataset::{NormStats, WindowSet};
use crate::dynamics::{RingAdjacency, SystemParams};
use crate::error::{Error, Result};

pub mod baselines;
pub mod external;
pub mod oracle;
pub mod wire;

pub use baselines::{Climatology, Persistence, Ridge, DEFAULT_RIDGE_PENALTY};
pub use external::{ExternalForecaster, DEFAULT_TIMEOUT};
pub use oracle::Oracle;

/// Everything a forecaster may look at during training.
pub struct TrainingData<'a> {
    /// Normalized train windows.
    pub windows: &'a WindowSet,
    pub params: SystemParams,
    pub stats: &'a NormStats,
    pub adjacency: Arc<RingAdjacency>,
}

#[derive(Debug, Clone)]
pub struct ForecastRequest {
    /// `L x 2N`, normalized.
    pub context: Array2<f64>,
    pub horizon: usize,
    pub params: SystemParams,
    pub adjacency: Arc<RingAdjacency>,
    /// Exact raw-coordinate state behind the last context row, when the
    /// harness knows it. Lets the oracle avoid a lossy denormalization.
    pub raw_anchor: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ForecastResponse {
    /// `H x 2N`, normalized.
    pub prediction: Array2<f64>,
    /// Exact raw state behind the last predicted row, if the forecaster has one.
    pub raw_anchor: Option<Vec<f64>>,
}

impl ForecastResponse {
    pub fn new(prediction: Array2<f64>) -> Self {
        ForecastResponse {
            prediction,
            raw_anchor: None,
        }
    }
}

/// Why a prediction could not be used. Any of these marks the rollout
/// degenerate.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastError {
    NonFinite,
    Shape {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    Protocol {
        id: Option<u64>,
        message: String,
    },
    Timeout {
        id: u64,
        after: Duration,
    },
    ProcessExit(String),
    Unfitted,
}

impl ForecastError {
    /// Short tag for CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            ForecastError::NonFinite => "non_finite",
            ForecastError::Shape { .. } => "shape",
            ForecastError::Protocol { .. } => "protocol",
            ForecastError::Timeout { .. } => "timeout",
            ForecastError::ProcessExit(_) => "process_exit",
            ForecastError::Unfitted => "unfitted",
        }
    }
}

impl fmt::Display for ForecastError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastError::NonFinite => write!(f, "prediction contains non-finite values"),
            ForecastError::Shape { expected, actual } => {
                write!(f, "prediction shape {actual:?}, expected {expected:?}")
            }
            ForecastError::Protocol {
                id: Some(id),
                message,
            } => {
                write!(f, "protocol error on request {id}: {message}")
            }
            ForecastError::Protocol { id: None, message } => write!(f, "protocol error: {message}"),
            ForecastError::Timeout { id, after } => {
                write!(f, "request {id} timed out after {after:?}")
            }
            ForecastError::ProcessExit(msg) => write!(f, "forecaster process exited: {msg}"),
            ForecastError::Unfitted => write!(f, "forecaster used before fit"),
        }
    }
}

impl std::error::Error for ForecastError {}

pub trait Forecaster: Send + Sync {
    fn name(&self) -> String;

    fn fit(&mut self, data: &TrainingData<'_>) -> Result<()>;

    fn predict(&self, request: &ForecastRequest) -> Result<ForecastResponse, ForecastError>;

    /// Whether `predict` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

/// Checks shape and finiteness of a response against its request.
pub fn validate_response(
    request: &ForecastRequest,
    response: &ForecastResponse,
) -> Result<(), ForecastError> {
    let expected = (request.horizon, request.context.ncols());
    let actual = response.prediction.dim();
    if actual != expected {
        return Err(ForecastError::Shape { expected, actual });
    }
    if response.prediction.iter().any(|x| !x.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    Ok(())
}

/// A model selector as written on the command line: a built-in name or
/// `extern:<command line>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Persistence,
    Climatology,
    Ridge,
    Oracle,
    External { command: String, timeout: Duration },
}

impl ModelSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "persistence" => Ok(ModelSpec::Persistence),
            "climatology" | "mean" => Ok(ModelSpec::Climatology),
            "ridge" => Ok(ModelSpec::Ridge),
            "oracle" => Ok(ModelSpec::Oracle),
            other => match other.strip_prefix("extern:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(ModelSpec::External {
                    command: cmd.trim().to_owned(),
                    timeout: DEFAULT_TIMEOUT,
                }),
                _ => Err(Error::config(
                    "model",
                    format!(
                        "unknown model `{other}` (persistence, climatology, ridge, oracle, extern:<cmd>)"
                    ),
                )),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelSpec::Persistence => "persistence".into(),
            ModelSpec::Climatology => "climatology".into(),
            ModelSpec::Ridge => "ridge".into(),
            ModelSpec::Oracle => "oracle".into(),
            ModelSpec::External { command, .. } => format!("extern:{command}"),
        }
    }

    pub fn build(&self) -> Box<dyn Forecaster> {
        match self {
            ModelSpec::Persistence => Box::new(Persistence),
            ModelSpec::Climatology => Box::new(Climatology::default()),
            ModelSpec::Ridge => Box::new(Ridge::default()),
            ModelSpec::Oracle => Box::new(Oracle::default()),
            ModelSpec::External { command, timeout } => {
                Box::new(ExternalForecaster::new(command, *timeout))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_specs() {
        assert_eq!(ModelSpec::parse("mean").unwrap(), ModelSpec::Climatology);
        assert_eq!(ModelSpec::parse("oracle").unwrap().name(), "oracle");
        match ModelSpec::parse("extern: python3 model.py --x").unwrap() {
            ModelSpec::External { command, .. } => assert_eq!(command, "python3 model.py --x"),
            other => panic!("{other:?}"),
        }
        assert!(ModelSpec::parse("extern:").is_err());
        assert!(ModelSpec::parse("lstm").is_err());
    }
}
