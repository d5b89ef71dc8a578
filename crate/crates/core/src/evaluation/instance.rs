use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;

use super::results::ResultRow;
use super::{rollout, RolloutConfig, RolloutEnv, RolloutResult};
use crate::dataset::windows::TRAIN_STRIDE;
use crate::dataset::{DatasetReader, InstanceData, InstanceKey, NormStats, SplitSpec, WindowSet};
use crate::dynamics::ring_adjacency;
use crate::error::{Error, Result};
use crate::forecasters::{Forecaster, TrainingData};
use crate::par::{self, Execution};

/// Raw train and test trajectories of one instance.
#[derive(Debug, Clone)]
pub struct InstanceInput {
    pub key: InstanceKey,
    pub train: Vec<Array2<f64>>,
    /// `(ic_index, states)`, ascending by IC.
    pub test: Vec<(usize, Array2<f64>)>,
}

impl InstanceInput {
    pub fn from_data(data: &InstanceData, split: &SplitSpec) -> Result<Self> {
        let fetch = |ic: usize| {
            data.get(ic)
                .map(|g| g.trajectory.states.clone())
                .ok_or_else(|| Error::Missing(format!("trajectory {} ic{ic}", data.key)))
        };
        Ok(InstanceInput {
            key: data.key,
            train: split
                .train
                .iter()
                .map(|&ic| fetch(ic))
                .collect::<Result<_>>()?,
            test: split
                .test
                .iter()
                .map(|&ic| Ok((ic, fetch(ic)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn load(reader: &DatasetReader, key: &InstanceKey, split: &SplitSpec) -> Result<Self> {
        Ok(InstanceInput {
            key: *key,
            train: split
                .train
                .iter()
                .map(|&ic| reader.read_states(key, ic))
                .collect::<Result<_>>()?,
            test: split
                .test
                .iter()
                .map(|&ic| Ok((ic, reader.read_states(key, ic)?)))
                .collect::<Result<_>>()?,
        })
    }
}

/// One model, one instance, one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub key: InstanceKey,
    pub model: String,
    pub seed: u64,
    /// Mean over non-degenerate trajectories; NaN if there are none.
    pub mean_vpt: f64,
    /// Mean over non-degenerate trajectories; NaN if there are none.
    pub test_mse: f64,
    pub valid: bool,
    pub n_degenerate: usize,
    pub rollouts: Vec<(usize, RolloutResult)>,
}

impl InstanceResult {
    fn from_rollouts(
        key: InstanceKey,
        model: String,
        seed: u64,
        rollouts: Vec<(usize, RolloutResult)>,
        config: &RolloutConfig,
    ) -> Self {
        let healthy: Vec<&RolloutResult> = rollouts
            .iter()
            .map(|(_, r)| r)
            .filter(|r| !r.is_degenerate())
            .collect();
        let n_degenerate = rollouts.len() - healthy.len();
        let mean = |f: fn(&RolloutResult) -> f64| {
            if healthy.is_empty() {
                f64::NAN
            } else {
                healthy.iter().map(|r| f(r)).sum::<f64>() / healthy.len() as f64
            }
        };
        let mean_vpt = mean(|r| r.vpt as f64);
        let test_mse = mean(|r| r.test_mse);
        InstanceResult {
            key,
            model,
            seed,
            mean_vpt,
            test_mse,
            valid: n_degenerate == 0 && test_mse < config.validity_threshold,
            n_degenerate,
            rollouts,
        }
    }

    pub fn row(&self) -> ResultRow {
        ResultRow {
            k: self.key.k,
            rho: self.key.rho,
            n: self.key.n,
            model: self.model.clone(),
            seed: self.seed,
            mean_vpt: self.mean_vpt,
            test_mse: self.test_mse,
            valid: self.valid,
            n_degenerate: self.n_degenerate,
        }
    }
}

/// Fits a fresh model per seed and rolls it out over every test trajectory.
/// Trajectories fan out over `exec` when the model allows concurrent calls.
pub fn evaluate_instance(
    make: &dyn Fn() -> Box<dyn Forecaster>,
    input: &InstanceInput,
    seeds: &[u64],
    config: &RolloutConfig,
    exec: Execution,
) -> Result<Vec<InstanceResult>> {
    config.validate()?;
    if input.train.is_empty() {
        return Err(Error::Empty("train trajectories"));
    }
    if input.test.is_empty() {
        return Err(Error::Empty("test trajectories"));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let params = input.key.params()?;
    let stats = NormStats::fit(input.train.iter().map(|t| t.view()))?;
    let normalized = input
        .train
        .iter()
        .map(|t| Ok(Arc::new(stats.apply(t.view())?)))
        .collect::<Result<Vec<_>>>()?;
    let windows = WindowSet::new(normalized, config.context_len, config.horizon, TRAIN_STRIDE)?;
    let adjacency = Arc::new(ring_adjacency(params.n)?);
    let env = RolloutEnv {
        params,
        adjacency: Arc::clone(&adjacency),
        stats: &stats,
    };

    let mut out = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut model = make();
        model.fit(&TrainingData {
            windows: &windows,
            params,
            stats: &stats,
            adjacency: Arc::clone(&adjacency),
        })?;
        let model = &*model;
        let exec = if model.concurrent() {
            exec
        } else {
            Execution::Sequential
        };
        let rollouts = par::try_map(exec, input.test.iter().collect(), |(ic, states)| {
            Ok::<_, Error>((*ic, rollout(model, states.view(), &env, config)?))
        })?;
        out.push(InstanceResult::from_rollouts(
            input.key,
            model.name(),
            seed,
            rollouts,
            config,
        ));
    }
    Ok(out)
}

/// Seed-averaged view of one model on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSummary {
    pub key: InstanceKey,
    pub model: String,
    pub seeds: usize,
    pub mean_vpt: f64,
    pub test_mse: f64,
    pub valid: bool,
    pub n_degenerate: usize,
}

/// Groups per-seed rows by `(model, instance)` and averages over seeds.
/// A group is valid when its seed-mean test MSE is below `threshold` and no
/// seed had a degenerate trajectory. Output is sorted by model then instance.
pub fn summarize(rows: &[ResultRow], threshold: f64) -> Vec<InstanceSummary> {
    let mut groups: BTreeMap<(String, [u64; 3]), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = InstanceKey::new(r.k, r.rho, r.n);
        groups
            .entry((r.model.clone(), key.sort_bits()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<InstanceSummary> = groups
        .into_iter()
        .map(|((model, _), rs)| {
            let first = rs[0];
            let n = rs.len() as f64;
            let mean_vpt = rs.iter().map(|r| r.mean_vpt).sum::<f64>() / n;
            let test_mse = rs.iter().map(|r| r.test_mse).sum::<f64>() / n;
            let n_degenerate = rs.iter().map(|r| r.n_degenerate).sum();
            InstanceSummary {
                key: InstanceKey::new(first.k, first.rho, first.n),
                model,
                seeds: rs.len(),
                mean_vpt,
                test_mse,
                valid: n_degenerate == 0 && test_mse < threshold,
                n_degenerate,
            }
        })
        .collect();
    out.sort_by(|a, b| a.model.cmp(&b.model).then(a.key.cmp_key(&b.key)));
    out
}
