//! Autoregressive rollout, NRMSE and valid prediction time, validity
//! screening and per-instance aggregation.

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};

use crate::dataset::norm::STD_FLOOR;
use crate::dataset::windows::{DEFAULT_CONTEXT, DEFAULT_HORIZON};
use crate::dataset::NormStats;
use crate::dynamics::{RingAdjacency, SystemParams};
use crate::error::{Error, Result};
use crate::forecasters::{validate_response, ForecastRequest, Forecaster};

mod instance;
mod results;

pub use instance::{evaluate_instance, summarize, InstanceInput, InstanceResult, InstanceSummary};
pub use results::{
    read_results_csv, write_detail_csv, write_results_csv, write_summary_csv, DetailRow, ResultRow,
};

pub const DEFAULT_CAP: usize = 240;
pub const VPT_THRESHOLD: f64 = 1.0;
pub const VALIDITY_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    pub context_len: usize,
    pub horizon: usize,
    /// Rollout length in steps; a multiple of `horizon`.
    pub cap: usize,
    pub vpt_threshold: f64,
    pub validity_threshold: f64,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            context_len: DEFAULT_CONTEXT,
            horizon: DEFAULT_HORIZON,
            cap: DEFAULT_CAP,
            vpt_threshold: VPT_THRESHOLD,
            validity_threshold: VALIDITY_THRESHOLD,
        }
    }
}

impl RolloutConfig {
    pub fn with_cap(cap: usize) -> Self {
        RolloutConfig {
            cap,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_len == 0 || self.horizon == 0 {
            return Err(Error::param(
                "window",
                "context and horizon must be positive",
            ));
        }
        if self.cap == 0 || !self.cap.is_multiple_of(self.horizon) {
            return Err(Error::param(
                "cap",
                format!(
                    "{} is not a positive multiple of H={}",
                    self.cap, self.horizon
                ),
            ));
        }
        Ok(())
    }

    /// Rows a test trajectory must have.
    pub fn required_len(&self) -> usize {
        self.context_len + self.cap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    /// One value per completed step; shorter than the cap only when degenerate.
    pub nrmse_series: Vec<f64>,
    pub vpt: usize,
    /// NaN when degenerate.
    pub test_mse: f64,
    pub valid: bool,
    pub degenerate_reason: Option<String>,
}

impl RolloutResult {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_reason.is_some()
    }
}

/// RMSE over one row, divided by `scale`.
pub fn nrmse_at_step(pred: &[f64], truth: &[f64], scale: f64) -> f64 {
    assert_eq!(pred.len(), truth.len(), "row lengths differ");
    let sq: f64 = pred.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (sq / pred.len() as f64).sqrt() / scale
}

/// Leading steps at or below `threshold`.
pub fn vpt(series: &[f64], threshold: f64) -> usize {
    series.iter().take_while(|&&x| x <= threshold).count()
}

/// Population standard deviation of all entries.
pub fn pooled_std(values: ArrayView2<'_, f64>) -> f64 {
    let n = values.len() as f64;
    let mean = values.sum() / n;
    (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// What the rollout tells the forecaster about the instance.
#[derive(Debug, Clone)]
pub struct RolloutEnv<'a> {
    pub params: SystemParams,
    pub adjacency: Arc<RingAdjacency>,
    pub stats: &'a NormStats,
}

/// Seeds with the first `L` true states, then feeds predictions back in
/// blocks of `H` until `cap` steps exist, and scores them against the true
/// continuation. `raw` is the un-normalized trajectory.
pub fn rollout(
    forecaster: &dyn Forecaster,
    raw: ArrayView2<'_, f64>,
    env: &RolloutEnv<'_>,
    config: &RolloutConfig,
) -> Result<RolloutResult> {
    config.validate()?;
    let (l, h, cap) = (config.context_len, config.horizon, config.cap);
    if raw.nrows() < l + cap {
        return Err(Error::TooShort {
            needed: l + cap,
            available: raw.nrows(),
        });
    }
    let truth = env.stats.apply(raw.slice(s![..l + cap, ..]))?;
    let width = truth.ncols();
    let future = truth.slice(s![l.., ..]);
    let scale = pooled_std(future).max(STD_FLOOR);

    let mut seq = Array2::<f64>::zeros((l + cap, width));
    seq.slice_mut(s![..l, ..]).assign(&truth.slice(s![..l, ..]));
    let mut anchor = Some(raw.row(l - 1).to_vec());
    let mut series = Vec::with_capacity(cap);
    let mut failure = None;
    for start in (l..l + cap).step_by(h) {
        let request = ForecastRequest {
            context: seq.slice(s![start - l..start, ..]).to_owned(),
            horizon: h,
            params: env.params,
            adjacency: Arc::clone(&env.adjacency),
            raw_anchor: anchor.take(),
        };
        let response = forecaster
            .predict(&request)
            .and_then(|r| validate_response(&request, &r).map(|_| r));
        match response {
            Ok(r) => {
                seq.slice_mut(s![start..start + h, ..])
                    .assign(&r.prediction);
                for t in start..start + h {
                    let p = seq.row(t);
                    let q = truth.row(t);
                    series.push(nrmse_at_step(
                        p.as_slice().expect("standard layout"),
                        q.as_slice().expect("standard layout"),
                        scale,
                    ));
                }
                anchor = r.raw_anchor;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let vpt = vpt(&series, config.vpt_threshold);
    Ok(match failure {
        Some(e) => RolloutResult {
            nrmse_series: series,
            vpt,
            test_mse: f64::NAN,
            valid: false,
            degenerate_reason: Some(format!("{}: {e}", e.tag())),
        },
        None => {
            let err = &seq.slice(s![l.., ..]) - &future;
            let test_mse = err.mapv(|e| e * e).mean().expect("cap > 0");
            RolloutResult {
                nrmse_series: series,
                vpt,
                test_mse,
                valid: test_mse < config.validity_threshold,
                degenerate_reason: None,
            }
        }
    })
}
