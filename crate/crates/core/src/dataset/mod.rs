//! Benchmark construction: design grid, generation, IC-based splitting,
//! normalization, windowing and persistence.

pub mod config;
pub mod generate;
pub mod grid;
pub mod norm;
pub mod split;
pub mod store;
pub mod windows;

pub use config::GridConfig;
pub use generate::{
    diagnose_instance, generate_ic, generate_instance, GeneratedTrajectory, GenerationConfig,
    InstanceData,
};
pub use grid::{build_grid, DesignGrid, InstanceFilter, InstanceKey};
pub use norm::NormStats;
pub use split::{split_ics, write_split_csv, Partition, SplitCounts, SplitSpec};
pub use store::{DatasetReader, DatasetWriter};
pub use windows::{make_windows, window_count, WindowSet};
