//! Per-column z-scoring fitted on train trajectories only.
//!
//! Every one of the `2N` columns gets its own mean and standard deviation.
//! Angles are scored as raw values in `[0, 2 pi)`, without circular
//! statistics.

use ndarray::{Array2, ArrayView2, ArrayViewMut1};

use crate::error::{Error, Result};

/// Lower bound on a fitted standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Population mean/std over all rows of all `train` arrays.
    pub fn fit<'a>(train: impl IntoIterator<Item = ArrayView2<'a, f64>> + Clone) -> Result<Self> {
        let mut arrays = train.clone().into_iter().peekable();
        let width = arrays.peek().map(|a| a.ncols()).ok_or(Error::Empty(
            "normalization needs at least one train trajectory",
        ))?;
        let mut count = 0usize;
        let mut sum = vec![0.0; width];
        for a in arrays {
            if a.ncols() != width {
                return Err(Error::Dimension {
                    expected: width,
                    actual: a.ncols(),
                });
            }
            for row in a.rows() {
                for (s, x) in sum.iter_mut().zip(row) {
                    *s += x;
                }
            }
            count += a.nrows();
        }
        if count == 0 {
            return Err(Error::Empty("train trajectories have no rows"));
        }
        let m = count as f64;
        let mut mean: Vec<f64> = sum.iter().map(|s| s / m).collect();

        // Second pass: corrected two-pass variance.
        let mut dev = vec![0.0; width];
        let mut sq = vec![0.0; width];
        for a in train {
            for row in a.rows() {
                for j in 0..width {
                    let d = row[j] - mean[j];
                    dev[j] += d;
                    sq[j] += d * d;
                }
            }
        }
        let mut std = Vec::with_capacity(width);
        for j in 0..width {
            let var = ((sq[j] - dev[j] * dev[j] / m) / m).max(0.0);
            mean[j] += dev[j] / m;
            std.push(var.sqrt().max(STD_FLOOR));
        }
        Ok(NormStats { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, width: usize) -> Result<()> {
        if width != self.width() {
            return Err(Error::Dimension {
                expected: self.width(),
                actual: width,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn normalize_value(&self, col: usize, x: f64) -> f64 {
        (x - self.mean[col]) / self.std[col]
    }

    #[inline]
    pub fn denormalize_value(&self, col: usize, z: f64) -> f64 {
        z * self.std[col] + self.mean[col]
    }

    pub fn normalize_row(&self, mut row: ArrayViewMut1<f64>) {
        for (j, x) in row.iter_mut().enumerate() {
            *x = self.normalize_value(j, *x);
        }
    }

    pub fn denormalize_row(&self, mut row: ArrayViewMut1<f64>) {
        for (j, z) in row.iter_mut().enumerate() {
            *z = self.denormalize_value(j, *z);
        }
    }

    pub fn apply(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        let mut out = data.to_owned();
        for row in out.rows_mut() {
            self.normalize_row(row);
        }
        Ok(out)
    }

    pub fn invert(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        let mut out = data.to_owned();
        for row in out.rows_mut() {
            self.denormalize_row(row);
        }
        Ok(out)
    }
}
