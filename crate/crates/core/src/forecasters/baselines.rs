use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView2, Axis};

use super::{ForecastError, ForecastRequest, ForecastResponse, Forecaster, TrainingData};
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE_PENALTY: f64 = 1e-4;

/// Samples per block when accumulating the ridge normal equations.
const GRAM_BLOCK: usize = 1024;

fn require_width(request: &ForecastRequest, width: usize) -> Result<(), ForecastError> {
    let actual = request.context.dim();
    if actual.1 != width || actual.0 == 0 {
        return Err(ForecastError::Shape {
            expected: (actual.0.max(1), width),
            actual,
        });
    }
    Ok(())
}

fn repeat_row(row: &[f64], horizon: usize) -> Array2<f64> {
    Array2::from_shape_fn((horizon, row.len()), |(_, j)| row[j])
}

/// Repeats the last context row.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn name(&self) -> String {
        "persistence".into()
    }

    fn fit(&mut self, _data: &TrainingData<'_>) -> Result<()> {
        Ok(())
    }

    fn predict(&self, request: &ForecastRequest) -> Result<ForecastResponse, ForecastError> {
        let width = request.context.ncols();
        require_width(request, width)?;
        let last = request.context.row(request.context.nrows() - 1).to_vec();
        Ok(ForecastResponse::new(repeat_row(&last, request.horizon)))
    }
}

/// Repeats the per-column mean of the training trajectories.
#[derive(Debug, Clone, Default)]
pub struct Climatology {
    mean: Option<Vec<f64>>,
}

impl Climatology {
    pub fn mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }
}

impl Forecaster for Climatology {
    fn name(&self) -> String {
        "climatology".into()
    }

    fn fit(&mut self, data: &TrainingData<'_>) -> Result<()> {
        let trajs = data.windows.trajectories();
        let width = data.windows.width();
        let rows: usize = trajs.iter().map(|t| t.nrows()).sum();
        if rows == 0 {
            return Err(Error::Empty("climatology training data"));
        }
        let mut sum = Array1::<f64>::zeros(width);
        for t in trajs {
            sum += &t.sum_axis(Axis(0));
        }
        self.mean = Some((sum / rows as f64).to_vec());
        Ok(())
    }

    fn predict(&self, request: &ForecastRequest) -> Result<ForecastResponse, ForecastError> {
        let mean = self.mean.as_ref().ok_or(ForecastError::Unfitted)?;
        require_width(request, mean.len())?;
        Ok(ForecastResponse::new(repeat_row(mean, request.horizon)))
    }
}

/// One-step linear map from the flattened context (plus a bias) to the next
/// row, fitted in closed form with an L2 penalty and iterated within the
/// horizon.
#[derive(Debug, Clone)]
pub struct Ridge {
    pub penalty: f64,
    fitted: Option<RidgeWeights>,
}

#[derive(Debug, Clone)]
struct RidgeWeights {
    context_len: usize,
    width: usize,
    /// `(L * width) x width`, rows ordered oldest context row first.
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::new(DEFAULT_RIDGE_PENALTY)
    }
}

impl Ridge {
    pub fn new(penalty: f64) -> Self {
        Ridge {
            penalty,
            fitted: None,
        }
    }

    /// Fits on explicit `(features, targets)` pairs; a bias column is added
    /// internally and left unpenalized.
    pub fn fit_pairs(
        &mut self,
        features: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
        context_len: usize,
    ) -> Result<()> {
        if features.nrows() != targets.nrows() {
            return Err(Error::Dimension {
                expected: features.nrows(),
                actual: targets.nrows(),
            });
        }
        let width = targets.ncols();
        if features.ncols() != context_len * width {
            return Err(Error::Dimension {
                expected: context_len * width,
                actual: features.ncols(),
            });
        }
        let mut acc = NormalEquations::new(features.ncols(), width);
        acc.add_block(features, targets);
        self.fitted = Some(acc.solve(self.penalty, context_len)?);
        Ok(())
    }

    /// In-sample mean squared one-step error.
    pub fn training_mse(
        &self,
        features: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
    ) -> Result<f64> {
        let w = self
            .fitted
            .as_ref()
            .ok_or_else(|| Error::Unfitted("ridge".into()))?;
        let pred = features.dot(&w.weights) + &w.bias;
        let err = &pred - &targets;
        Ok(err.mapv(|e| e * e).mean().unwrap_or(0.0))
    }
}

struct NormalEquations {
    /// `(d + 1) x (d + 1)` with the bias as the last feature.
    gram: Array2<f64>,
    cross: Array2<f64>,
    samples: usize,
}

impl NormalEquations {
    fn new(features: usize, outputs: usize) -> Self {
        NormalEquations {
            gram: Array2::zeros((features + 1, features + 1)),
            cross: Array2::zeros((features + 1, outputs)),
            samples: 0,
        }
    }

    fn add_block(&mut self, features: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) {
        let d = features.ncols();
        let mut x = Array2::<f64>::ones((features.nrows(), d + 1));
        x.slice_mut(s![.., ..d]).assign(&features);
        general_mat_mul(1.0, &x.t(), &x, 1.0, &mut self.gram);
        general_mat_mul(1.0, &x.t(), &targets, 1.0, &mut self.cross);
        self.samples += features.nrows();
    }

    fn solve(mut self, penalty: f64, context_len: usize) -> Result<RidgeWeights> {
        if self.samples == 0 {
            return Err(Error::Empty("ridge training windows"));
        }
        let dim = self.gram.nrows();
        for i in 0..dim - 1 {
            self.gram[[i, i]] += penalty;
        }
        let outputs = self.cross.ncols();
        let gram = nalgebra::DMatrix::from_row_iterator(dim, dim, self.gram.iter().copied());
        let cross = nalgebra::DMatrix::from_row_iterator(dim, outputs, self.cross.iter().copied());
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Invariant("ridge normal equations are not positive definite".into())
        })?;
        let sol = chol.solve(&cross);
        let weights = Array2::from_shape_fn((dim - 1, outputs), |(i, j)| sol[(i, j)]);
        let bias = Array1::from_shape_fn(outputs, |j| sol[(dim - 1, j)]);
        Ok(RidgeWeights {
            context_len,
            width: outputs,
            weights,
            bias,
        })
    }
}

impl Forecaster for Ridge {
    fn name(&self) -> String {
        "ridge".into()
    }

    /// One sample per training window: its context against the first target row.
    fn fit(&mut self, data: &TrainingData<'_>) -> Result<()> {
        let windows = data.windows;
        if windows.is_empty() {
            return Err(Error::Empty("ridge training windows"));
        }
        let (l, w) = (windows.context_len, windows.width());
        let mut acc = NormalEquations::new(l * w, w);
        let mut start = 0;
        while start < windows.len() {
            let end = (start + GRAM_BLOCK).min(windows.len());
            let mut x = Array2::<f64>::zeros((end - start, l * w));
            let mut y = Array2::<f64>::zeros((end - start, w));
            for (r, i) in (start..end).enumerate() {
                let ctx = windows.context(i);
                for (t, row) in ctx.outer_iter().enumerate() {
                    x.slice_mut(s![r, t * w..(t + 1) * w]).assign(&row);
                }
                y.row_mut(r).assign(&windows.target(i).row(0));
            }
            acc.add_block(x.view(), y.view());
            start = end;
        }
        self.fitted = Some(acc.solve(self.penalty, l)?);
        Ok(())
    }

    fn predict(&self, request: &ForecastRequest) -> Result<ForecastResponse, ForecastError> {
        let fit = self.fitted.as_ref().ok_or(ForecastError::Unfitted)?;
        let (l, w) = (fit.context_len, fit.width);
        if request.context.dim() != (l, w) {
            return Err(ForecastError::Shape {
                expected: (l, w),
                actual: request.context.dim(),
            });
        }
        let mut x: Vec<f64> = request.context.iter().copied().collect();
        let mut out = Array2::<f64>::zeros((request.horizon, w));
        for h in 0..request.horizon {
            let next = Array1::from(x.clone()).dot(&fit.weights) + &fit.bias;
            out.row_mut(h).assign(&next);
            x.drain(..w);
            x.extend(next.iter());
        }
        Ok(ForecastResponse::new(out))
    }
}
