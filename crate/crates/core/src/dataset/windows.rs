//! Supervised `(context, target)` windows cut from individual trajectories.
//!
//! Windows never straddle two trajectories: each one references a single
//! array by index and an offset into it.

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};

pub const DEFAULT_CONTEXT: usize = 48;
pub const DEFAULT_HORIZON: usize = 12;
pub const TRAIN_STRIDE: usize = 12;
pub const EVAL_STRIDE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRef {
    pub trajectory: usize,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct WindowSet {
    pub context_len: usize,
    pub horizon: usize,
    pub stride: usize,
    trajectories: Vec<Arc<Array2<f64>>>,
    windows: Vec<WindowRef>,
}

/// Number of windows in a trajectory of `len` rows.
pub fn window_count(len: usize, context_len: usize, horizon: usize, stride: usize) -> usize {
    if len < context_len + horizon || stride == 0 {
        0
    } else {
        (len - context_len - horizon) / stride + 1
    }
}

impl WindowSet {
    /// Windows over several (normalized) trajectories.
    pub fn new(
        trajectories: Vec<Arc<Array2<f64>>>,
        context_len: usize,
        horizon: usize,
        stride: usize,
    ) -> Result<Self> {
        if context_len == 0 || horizon == 0 {
            return Err(Error::param(
                "window",
                "context and horizon must be positive",
            ));
        }
        if stride == 0 {
            return Err(Error::param("stride", "must be positive"));
        }
        let mut windows = Vec::new();
        for (t, traj) in trajectories.iter().enumerate() {
            if traj.nrows() < context_len + horizon {
                return Err(Error::TooShort {
                    needed: context_len + horizon,
                    available: traj.nrows(),
                });
            }
            let count = window_count(traj.nrows(), context_len, horizon, stride);
            windows.extend((0..count).map(|i| WindowRef {
                trajectory: t,
                offset: i * stride,
            }));
        }
        Ok(WindowSet {
            context_len,
            horizon,
            stride,
            trajectories,
            windows,
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.ncols())
    }

    pub fn refs(&self) -> &[WindowRef] {
        &self.windows
    }

    pub fn trajectories(&self) -> &[Arc<Array2<f64>>] {
        &self.trajectories
    }

    /// Rows `[t, t + L)`.
    pub fn context(&self, i: usize) -> ArrayView2<'_, f64> {
        let w = self.windows[i];
        self.trajectories[w.trajectory].slice(s![w.offset..w.offset + self.context_len, ..])
    }

    /// Rows `[t + L, t + L + H)`.
    pub fn target(&self, i: usize) -> ArrayView2<'_, f64> {
        let w = self.windows[i];
        let start = w.offset + self.context_len;
        self.trajectories[w.trajectory].slice(s![start..start + self.horizon, ..])
    }
}

/// Windows at offsets `0, stride, 2 stride, ...` over one trajectory.
pub fn make_windows(
    trajectory: Arc<Array2<f64>>,
    context_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<WindowSet> {
    WindowSet::new(vec![trajectory], context_len, horizon, stride)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize) -> Arc<Array2<f64>> {
        Arc::new(Array2::from_shape_fn((rows, 2), |(i, j)| {
            (i * 10 + j) as f64
        }))
    }

    #[test]
    fn boundary_length_gives_one_window() {
        let w = make_windows(ramp(60), 48, 12, 1).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.context(0)[[47, 0]], 470.0);
        assert_eq!(w.target(0)[[0, 0]], 480.0);
        assert_eq!(w.target(0)[[11, 1]], 591.0);
    }

    #[test]
    fn too_short_is_an_error() {
        assert!(matches!(
            make_windows(ramp(59), 48, 12, 1),
            Err(Error::TooShort {
                needed: 60,
                available: 59
            })
        ));
        assert!(make_windows(ramp(100), 48, 12, 0).is_err());
    }

    #[test]
    fn windows_stay_inside_their_trajectory() {
        let set = WindowSet::new(vec![ramp(100), ramp(75)], 10, 5, 7).unwrap();
        assert_eq!(
            set.len(),
            window_count(100, 10, 5, 7) + window_count(75, 10, 5, 7)
        );
        for (i, w) in set.refs().iter().enumerate() {
            let len = set.trajectories()[w.trajectory].nrows();
            assert!(w.offset + 15 <= len);
            assert_eq!(set.context(i).nrows(), 10);
            assert_eq!(set.target(i).nrows(), 5);
            assert_eq!(set.context(i)[[0, 0]], (w.offset * 10) as f64);
        }
    }
}
