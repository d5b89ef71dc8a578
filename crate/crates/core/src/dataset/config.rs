//! Flat `key = value` grid configuration files.
//!
//! ```text
//! # desk profile
//! K_values = 0.5, 0.97, 2.0, 6.5
//! rho_values = 0.05, 0.075, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50
//! N_values = 8, 16, 32
//! ics_per_instance = 20
//! master_seed = 20240601
//! transient = 1000
//! record = 10000
//! ```
//!
//! Optional keys: `train_ics`, `val_ics`, `test_ics` (default 70/10/20 of
//! `ics_per_instance`) and `split_seed`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::generate::GenerationConfig;
use super::grid::DesignGrid;
use super::split::{split_ics, SplitCounts, SplitSpec};
use crate::error::{Error, Result};
use crate::indicators::DEFAULT_SALI_HORIZON;

pub const DEFAULT_TRANSIENT: usize = 1000;
pub const DEFAULT_RECORD: usize = 10_000;
pub const DEFAULT_SPLIT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub grid: DesignGrid,
    pub transient: usize,
    pub record: usize,
    pub split: SplitCounts,
    pub split_seed: u64,
}

impl GridConfig {
    pub fn from_grid(grid: DesignGrid) -> Self {
        let split = SplitCounts::proportional(grid.ics_per_instance);
        GridConfig {
            grid,
            transient: DEFAULT_TRANSIENT,
            record: DEFAULT_RECORD,
            split,
            split_seed: DEFAULT_SPLIT_SEED,
        }
    }

    pub fn desk() -> Self {
        Self::from_grid(DesignGrid::desk())
    }

    pub fn full() -> Self {
        Self::from_grid(DesignGrid::full())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Missing(format!("grid config {}: {e}", path.display())))?;
        text.parse()
    }

    /// The IC partition shared by every instance of this grid.
    pub fn split_spec(&self) -> Result<SplitSpec> {
        split_ics(self.grid.ics_per_instance, self.split, self.split_seed)
    }

    pub fn generation(&self, diagnose: bool) -> GenerationConfig {
        GenerationConfig {
            master_seed: self.grid.master_seed,
            transient: self.transient,
            record: self.record,
            diagnose,
            sali_horizon: DEFAULT_SALI_HORIZON,
        }
    }

    pub fn to_text(&self) -> String {
        fn join<T: std::fmt::Debug>(values: &[T]) -> String {
            values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        }
        let mut s = String::new();
        let g = &self.grid;
        writeln!(s, "K_values = {}", join(&g.k_values)).unwrap();
        writeln!(s, "rho_values = {}", join(&g.rho_values)).unwrap();
        writeln!(s, "N_values = {}", join(&g.n_values)).unwrap();
        writeln!(s, "ics_per_instance = {}", g.ics_per_instance).unwrap();
        writeln!(s, "master_seed = {}", g.master_seed).unwrap();
        writeln!(s, "transient = {}", self.transient).unwrap();
        writeln!(s, "record = {}", self.record).unwrap();
        writeln!(s, "train_ics = {}", self.split.train).unwrap();
        writeln!(s, "val_ics = {}", self.split.val).unwrap();
        writeln!(s, "test_ics = {}", self.split.test).unwrap();
        writeln!(s, "split_seed = {}", self.split_seed).unwrap();
        s
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.k_values.is_empty() {
            return Err(Error::config("K_values", "must list at least one value"));
        }
        if let Some(k) = g.k_values.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::config(
                "K_values",
                format!("{k} is not a finite value >= 0"),
            ));
        }
        if g.rho_values.is_empty() {
            return Err(Error::config("rho_values", "must list at least one value"));
        }
        if let Some(r) = g.rho_values.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::config(
                "rho_values",
                format!("{r} is not a finite value >= 0"),
            ));
        }
        if g.n_values.is_empty() {
            return Err(Error::config("N_values", "must list at least one value"));
        }
        if let Some(n) = g.n_values.iter().find(|n| **n < 3) {
            return Err(Error::config("N_values", format!("{n} < 3")));
        }
        if g.ics_per_instance == 0 {
            return Err(Error::config("ics_per_instance", "must be at least 1"));
        }
        if self.record == 0 {
            return Err(Error::config("record", "must be at least 1"));
        }
        if self.split.total() != g.ics_per_instance {
            return Err(Error::config(
                "train_ics",
                format!(
                    "train/val/test = {}/{}/{} does not sum to ics_per_instance = {}",
                    self.split.train, self.split.val, self.split.test, g.ics_per_instance
                ),
            ));
        }
        Ok(())
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::desk()
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::config(key, format!("`{}`: {e}", value.trim())))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_scalar(key, v))
        .collect()
}

impl FromStr for GridConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut grid = DesignGrid::desk();
        let mut transient = DEFAULT_TRANSIENT;
        let mut record = DEFAULT_RECORD;
        let mut split_seed = DEFAULT_SPLIT_SEED;
        let (mut train, mut val, mut test) = (None, None, None);

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected key = value, got `{line}`"),
                )
            })?;
            let key = key.trim();
            match key {
                "K_values" => grid.k_values = parse_list(key, value)?,
                "rho_values" => grid.rho_values = parse_list(key, value)?,
                "N_values" => grid.n_values = parse_list(key, value)?,
                "ics_per_instance" => grid.ics_per_instance = parse_scalar(key, value)?,
                "master_seed" => grid.master_seed = parse_scalar(key, value)?,
                "transient" => transient = parse_scalar(key, value)?,
                "record" => record = parse_scalar(key, value)?,
                "train_ics" => train = Some(parse_scalar(key, value)?),
                "val_ics" => val = Some(parse_scalar(key, value)?),
                "test_ics" => test = Some(parse_scalar(key, value)?),
                "split_seed" => split_seed = parse_scalar(key, value)?,
                other => return Err(Error::config(other, "unknown key")),
            }
        }

        let split = match (train, val, test) {
            (None, None, None) => SplitCounts::proportional(grid.ics_per_instance),
            (Some(train), Some(val), Some(test)) => SplitCounts { train, val, test },
            _ => {
                return Err(Error::config(
                    "train_ics",
                    "train_ics, val_ics and test_ics must be given together",
                ))
            }
        };
        let config = GridConfig {
            grid,
            transient,
            record,
            split,
            split_seed,
        };
        config.validate()?;
        Ok(config)
    }
}
