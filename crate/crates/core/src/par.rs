//! Order-preserving fan-out over independent work items.
//!
//! With the `parallel` feature the work runs on the rayon pool; without it, or
//! with [`Execution::Sequential`], items run in order on the calling thread.
//! Results are always returned in input order, so outputs do not depend on
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Parallel when the crate was built with the `parallel` feature.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

pub fn map<T, R, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.into_par_iter().map(f).collect(),
        _ => items.into_iter().map(f).collect(),
    }
}

/// Like [`map`], for fallible work; the first error in input order wins.
pub fn try_map<T, R, E, F>(exec: Execution, items: Vec<T>, f: F) -> Result<Vec<R>, E>
where
    T: Send,
    R: Send,
    E: Send,
    F: Fn(T) -> Result<R, E> + Sync + Send,
{
    map(exec, items, f).into_iter().collect()
}

/// Configures the global pool. Returns false if it was already initialized.
#[cfg(feature = "parallel")]
pub fn init_workers(workers: usize) -> bool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .is_ok()
}

#[cfg(not(feature = "parallel"))]
pub fn init_workers(_workers: usize) -> bool {
    false
}
