pub mod comparison;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod evaluation;
pub mod forecasters;
pub mod indicators;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
