use crate::dynamics::sample_ic;
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::indicators::{
    diagnose_orbit, DiagnosticsConfig, OrbitDiagnostics, MIN_LYAPUNOV_HORIZON,
};
use crate::par::{self, Execution};
use crate::rng::ic_seed;

use super::grid::InstanceKey;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrajectory {
    pub trajectory: Trajectory,
    pub diagnostics: Option<OrbitDiagnostics>,
}

/// Trajectories of one instance, ordered by IC index.
#[derive(Debug, Clone)]
pub struct InstanceData {
    pub key: InstanceKey,
    pub trajectories: Vec<GeneratedTrajectory>,
}

impl InstanceData {
    pub fn get(&self, ic_index: usize) -> Option<&GeneratedTrajectory> {
        self.trajectories
            .binary_search_by_key(&ic_index, |g| g.trajectory.ic_index)
            .ok()
            .map(|i| &self.trajectories[i])
    }

    pub fn diagnostics(&self) -> Vec<OrbitDiagnostics> {
        self.trajectories
            .iter()
            .filter_map(|g| g.diagnostics)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    pub master_seed: u64,
    pub transient: usize,
    pub record: usize,
    /// Diagnose each orbit; `lyapunov_horizon` is taken from `record`.
    pub diagnose: bool,
    pub sali_horizon: usize,
}

impl GenerationConfig {
    pub fn diagnostics(&self) -> DiagnosticsConfig {
        DiagnosticsConfig {
            transient: self.transient,
            lyapunov_horizon: self.record.max(MIN_LYAPUNOV_HORIZON),
            sali_horizon: self.sali_horizon,
        }
    }
}

/// One trajectory with its seed derived from `(master_seed, K, rho, N, ic)`.
pub fn generate_ic(
    key: &InstanceKey,
    ic_index: usize,
    config: &GenerationConfig,
) -> Result<GeneratedTrajectory> {
    let params = key.params()?;
    let seed = ic_seed(config.master_seed, key.k, key.rho, key.n, ic_index);
    let trajectory =
        Trajectory::generate(&params, seed, ic_index, config.transient, config.record)?;
    let diagnostics = if config.diagnose {
        let ic = sample_ic(seed, params.n)?;
        Some(diagnose_orbit(&ic, &params, &config.diagnostics(), seed)?)
    } else {
        None
    };
    Ok(GeneratedTrajectory {
        trajectory,
        diagnostics,
    })
}

/// Generates the listed ICs of one instance, fanned out over `exec`.
pub fn generate_instance(
    key: &InstanceKey,
    ics: &[usize],
    config: &GenerationConfig,
    exec: Execution,
) -> Result<InstanceData> {
    let mut ics = ics.to_vec();
    ics.sort_unstable();
    ics.dedup();
    let trajectories = par::try_map(exec, ics, |ic| generate_ic(key, ic, config))?;
    Ok(InstanceData {
        key: *key,
        trajectories,
    })
}

/// Diagnostics only, without keeping trajectories.
pub fn diagnose_instance(
    key: &InstanceKey,
    ics: &[usize],
    config: &GenerationConfig,
    exec: Execution,
) -> Result<Vec<(usize, OrbitDiagnostics)>> {
    let params = key.params()?;
    let diag = config.diagnostics();
    par::try_map(exec, ics.to_vec(), |ic| {
        let seed = ic_seed(config.master_seed, key.k, key.rho, key.n, ic);
        let state = sample_ic(seed, params.n)?;
        Ok((ic, diagnose_orbit(&state, &params, &diag, seed)?))
    })
}
