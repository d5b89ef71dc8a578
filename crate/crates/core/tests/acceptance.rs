//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs at the desk profile (20 ICs per instance).

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use csmbench::comparison::mcnemar_exact;
use csmbench::dataset::config::DEFAULT_TRANSIENT;
use csmbench::dataset::{
    build_grid, diagnose_instance, generate_instance, window_count, DatasetReader, DatasetWriter,
    GeneratedTrajectory, GridConfig, InstanceKey, WindowSet,
};
use csmbench::dynamics::{sample_ic, simulate, LatticeState, SystemParams};
use csmbench::evaluation::{evaluate_instance, InstanceInput, InstanceResult, RolloutConfig};
use csmbench::forecasters::ModelSpec;
use csmbench::indicators::{regime_stats, sali_classify, OrbitClass, DEFAULT_SALI_HORIZON};
use csmbench::par::Execution;
use csmbench::rng::ic_seed;
use ndarray::Array2;

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Regime statistics at N=8 over every rho of the grid.
fn regime_characterization() -> Verdict {
    let config = GridConfig::desk();
    let gen = config.generation(true);
    let ics: Vec<usize> = (0..config.grid.ics_per_instance).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [2.0, 6.5, 0.5] {
        let (mut frac_lo, mut frac_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lam_lo, mut lam_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &rho in &config.grid.rho_values {
            let key = InstanceKey::new(k, rho, 8);
            let diags: Vec<_> = diagnose_instance(&key, &ics, &gen, Execution::available())
                .map_err(err)?
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            let s = regime_stats(&diags).map_err(err)?;
            frac_lo = frac_lo.min(s.chaos_fraction);
            frac_hi = frac_hi.max(s.chaos_fraction);
            lam_lo = lam_lo.min(s.mean_lambda_max);
            lam_hi = lam_hi.max(s.mean_lambda_max);
            let cell_ok = match k {
                2.0 => s.chaos_fraction == 1.0 && (0.5..=1.0).contains(&s.mean_lambda_max),
                6.5 => s.chaos_fraction >= 0.95 && (1.25..=2.0).contains(&s.mean_lambda_max),
                _ => (0.65..=1.0).contains(&s.chaos_fraction),
            };
            if !cell_ok {
                ok = false;
                lines.push(format!(
                    "K={k} rho={rho}: chaos {:.2}, lambda {:.3}",
                    s.chaos_fraction, s.mean_lambda_max
                ));
            }
        }
        lines.push(format!(
            "K={k}: chaos {:.0}-{:.0}%, lambda {lam_lo:.2}-{lam_hi:.2}",
            100.0 * frac_lo,
            100.0 * frac_hi
        ));
    }
    ensure(ok, lines.join("; "))
}

fn exact_statistics() -> Verdict {
    let p19 = mcnemar_exact(0, 19);
    let p12 = mcnemar_exact(0, 12);
    let (checked, worst) = common::exhaustive_wilcoxon(12, 5);
    ensure(
        (p19 - 3.8147e-6).abs() <= 1e-10 && (p12 - 4.8828e-4).abs() <= 1e-8 && worst <= 1e-12,
        format!(
            "mcnemar(0,19)={p19:.6e}, mcnemar(0,12)={p12:.6e}, wilcoxon {checked} datasets n<=12, worst |dp|={worst:.1e}"
        ),
    )
}

fn dynamics_correctness() -> Verdict {
    let fd = common::worst_jacobian_error(101, 100);
    let det = common::worst_determinant_error(202, 1000);
    let mut scalar: f64 = 0.0;
    for (seed, k) in [(1u64, 0.5), (2, 0.97), (3, 2.0), (4, 6.5)] {
        let n = 5;
        let params = SystemParams::new(k, 0.0, n).map_err(err)?;
        let ic = sample_ic(seed, n).map_err(err)?;
        let traj = simulate(&ic, &params, 0, 3000).map_err(err)?;
        for i in 0..n {
            for (t, (q, p)) in common::scalar_standard_map(ic.q[i], ic.p[i], k, 3000)
                .iter()
                .enumerate()
            {
                scalar = scalar
                    .max((traj.states[[t, i]] - q).abs())
                    .max((traj.states[[t, n + i]] - p).abs());
            }
        }
    }
    ensure(
        fd < 1e-6 && det < 1e-9 && scalar <= 1e-15,
        format!("jacobian vs FD {fd:.1e}, |det-1| {det:.1e}, eps=0 vs scalar map {scalar:.1e}"),
    )
}

/// Every desk instance evaluated once and shared by the model criteria.
struct DeskRun {
    oracle: Vec<InstanceResult>,
    climatology: Vec<InstanceResult>,
    persistence: Vec<InstanceResult>,
    ridge: Vec<InstanceResult>,
    cap: usize,
}

fn desk_run() -> Result<DeskRun, String> {
    let config = GridConfig::desk();
    let split = config.split_spec().map_err(err)?;
    let gen = config.generation(false);
    let rollout = RolloutConfig::default();
    let ics: Vec<usize> = (0..config.grid.ics_per_instance).collect();
    let mut run = DeskRun {
        oracle: Vec::new(),
        climatology: Vec::new(),
        persistence: Vec::new(),
        ridge: Vec::new(),
        cap: rollout.cap,
    };
    let exec = Execution::available();
    for key in build_grid(&config.grid).map_err(err)? {
        let data = generate_instance(&key, &ics, &gen, exec).map_err(err)?;
        let input = InstanceInput::from_data(&data, &split).map_err(err)?;
        drop(data);
        let eval = |spec: ModelSpec| {
            evaluate_instance(&|| spec.build(), &input, &[0], &rollout, exec)
                .map(|mut rows| rows.remove(0))
                .map_err(err)
        };
        run.oracle.push(eval(ModelSpec::Oracle)?);
        if key.k == 6.5 {
            run.climatology.push(eval(ModelSpec::Climatology)?);
            run.persistence.push(eval(ModelSpec::Persistence)?);
        }
        if key.n == 8 && key.k != 0.97 {
            run.ridge.push(eval(ModelSpec::Ridge)?);
        }
    }
    Ok(run)
}

fn perfect_model_ceiling(run: &DeskRun) -> Verdict {
    let at_cap = |r: &InstanceResult| r.valid && r.rollouts.iter().all(|(_, x)| x.vpt == run.cap);
    let good = run.oracle.iter().filter(|r| at_cap(r)).count();
    let rollouts: usize = run.oracle.iter().map(|r| r.rollouts.len()).sum();
    ensure(
        good == 96 && run.oracle.len() == 96,
        format!(
            "oracle valid with VPT={} on {good}/{} instances ({rollouts} test rollouts)",
            run.cap,
            run.oracle.len()
        ),
    )
}

fn validity_screen(run: &DeskRun) -> Verdict {
    let mse =
        |f: fn(f64, f64) -> f64, init| run.climatology.iter().map(|r| r.test_mse).fold(init, f);
    let (lo, hi) = (
        mse(f64::min, f64::INFINITY),
        mse(f64::max, f64::NEG_INFINITY),
    );
    let valid = run.climatology.iter().filter(|r| r.valid).count();
    ensure(
        run.climatology.len() == 24
            && (0.9..=1.1).contains(&lo)
            && (0.9..=1.1).contains(&hi)
            && valid == 0,
        format!(
            "climatology on {} K=6.5 instances: test MSE {lo:.3}-{hi:.3}, {valid} valid",
            run.climatology.len()
        ),
    )
}

fn sali_exemplars() -> Verdict {
    let regular_params = SystemParams::new(0.5, 0.0, 8).map_err(err)?;
    let regular_ic = LatticeState::new(vec![PI + 0.1; 8], vec![0.1; 8]).map_err(err)?;
    let regular = sali_classify(
        &regular_ic,
        &regular_params,
        DEFAULT_TRANSIENT,
        DEFAULT_SALI_HORIZON,
        1,
    )
    .map_err(err)?;

    let config = GridConfig::desk();
    let params = SystemParams::from_ratio(6.5, 0.5, 8).map_err(err)?;
    let draws = 20;
    let outcomes = (0..draws)
        .map(|ic| {
            let seed = ic_seed(config.grid.master_seed, 6.5, 0.5, 8, ic);
            let state = sample_ic(seed, 8)?;
            sali_classify(
                &state,
                &params,
                DEFAULT_TRANSIENT,
                DEFAULT_SALI_HORIZON,
                seed,
            )
        })
        .collect::<csmbench::Result<Vec<_>>>()
        .map_err(err)?;
    let chaotic: Vec<_> = outcomes
        .iter()
        .filter(|o| o.class == OrbitClass::Chaotic)
        .collect();
    let early = chaotic
        .iter()
        .filter(|o| o.steps < DEFAULT_SALI_HORIZON)
        .count();
    let max_steps = chaotic.iter().map(|o| o.steps).max().unwrap_or(0);
    ensure(
        regular.class == OrbitClass::Regular
            && chaotic.len() * 100 >= 95 * draws
            && early * 100 >= 90 * chaotic.len().max(1),
        format!(
            "regular exemplar {} (SALI {:.2e}); K=6.5 rho=0.5: {}/{draws} chaotic, {early} stopped early (max {max_steps} steps)",
            regular.class.as_str(),
            regular.sali_final,
            chaotic.len()
        ),
    )
}

fn crossover_shadow(run: &DeskRun) -> Verdict {
    let mut by_k: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for r in &run.ridge {
        by_k.entry(r.key.k.to_bits())
            .or_insert((r.key.k, Vec::new()))
            .1
            .push(r.mean_vpt);
    }
    let mut means: Vec<(f64, f64)> = by_k
        .into_values()
        .map(|(k, v)| (k, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    means.sort_by(|a, b| a.0.total_cmp(&b.0));
    let decreasing = means.len() == 3 && means.windows(2).all(|w| w[1].1 < w[0].1);
    let worst_persistence = run
        .persistence
        .iter()
        .map(|r| r.mean_vpt)
        .fold(f64::NEG_INFINITY, f64::max);
    let listed: Vec<String> = means
        .iter()
        .map(|(k, v)| format!("K={k}: {v:.1}"))
        .collect();
    ensure(
        decreasing && worst_persistence <= 5.0,
        format!(
            "ridge mean VPT at N=8 {}; persistence VPT at K=6.5 at most {worst_persistence:.2}",
            listed.join(", ")
        ),
    )
}

fn same_payload(a: &GeneratedTrajectory, b: &GeneratedTrajectory) -> bool {
    let bits = |x: &Array2<f64>| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let (da, db) = (a.diagnostics, b.diagnostics);
    bits(&a.trajectory.states) == bits(&b.trajectory.states)
        && a.trajectory.params.k.to_bits() == b.trajectory.params.k.to_bits()
        && a.trajectory.params.epsilon.to_bits() == b.trajectory.params.epsilon.to_bits()
        && a.trajectory.params.n == b.trajectory.params.n
        && (
            a.trajectory.ic_index,
            a.trajectory.seed,
            a.trajectory.transient_discarded,
        ) == (
            b.trajectory.ic_index,
            b.trajectory.seed,
            b.trajectory.transient_discarded,
        )
        && match (da, db) {
            (Some(x), Some(y)) => {
                x.lambda_max.to_bits() == y.lambda_max.to_bits()
                    && x.sali_final.to_bits() == y.sali_final.to_bits()
                    && (x.sali_steps, x.orbit_class) == (y.sali_steps, y.orbit_class)
            }
            (None, None) => true,
            _ => false,
        }
}

fn determinism_and_persistence() -> Verdict {
    let mut config = GridConfig::desk();
    config.record = 2000;
    let gen = config.generation(true);
    let keys = [
        InstanceKey::new(0.5, 0.05, 8),
        InstanceKey::new(6.5, 0.5, 32),
    ];
    let ics = [0, 7, 19];
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("acceptance.h5");
    let mut regenerated = true;
    let mut generated = Vec::new();
    {
        let writer = DatasetWriter::create(&path, &config).map_err(err)?;
        for key in &keys {
            let a = generate_instance(key, &ics, &gen, Execution::available()).map_err(err)?;
            let b = generate_instance(key, &ics, &gen, Execution::Sequential).map_err(err)?;
            regenerated &= a
                .trajectories
                .iter()
                .zip(&b.trajectories)
                .all(|(x, y)| same_payload(x, y));
            for t in &a.trajectories {
                writer.write(key, t).map_err(err)?;
            }
            generated.push(a);
        }
        writer.flush().map_err(err)?;
    }
    let reader = DatasetReader::open(&path).map_err(err)?;
    let mut round_trip = reader.config() == &config && reader.instances().map_err(err)? == keys;
    let mut compared = 0;
    for data in &generated {
        for t in &data.trajectories {
            let back = reader.read(&data.key, t.trajectory.ic_index).map_err(err)?;
            round_trip &= same_payload(t, &back);
            compared += 1;
        }
    }
    ensure(
        regenerated && round_trip,
        format!(
            "regeneration identical: {regenerated}; HDF5 round trip of {compared} trajectories with attributes bit-exact: {round_trip}"
        ),
    )
}

fn window_count_check() -> Verdict {
    let formula = window_count(10_000, 48, 12, 12);
    let enumerated = common::enumerate_windows(10_000, 48, 12, 12);
    let set = WindowSet::new(vec![Arc::new(Array2::zeros((10_000, 16)))], 48, 12, 12)
        .map_err(err)?
        .len();
    ensure(
        formula == 829 && enumerated == 829 && set == 829,
        format!("formula {formula}, enumeration {enumerated}, window set {set}"),
    )
}

fn report(id: usize, name: &str, verdict: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(verdict)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = started.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} {id} {name} [{secs:.1}s]: {detail}");
    outcome.is_ok()
}

fn main() {
    let mut passed = Vec::new();
    passed.push(report(
        1,
        "regime characterization",
        regime_characterization,
    ));
    passed.push(report(2, "exact statistics", exact_statistics));
    passed.push(report(3, "dynamics correctness", dynamics_correctness));

    let started = Instant::now();
    let run = desk_run();
    eprintln!(
        "desk grid evaluated in {:.1}s",
        started.elapsed().as_secs_f64()
    );
    let run = &run;
    let shared = |f: fn(&DeskRun) -> Verdict| {
        move || match run {
            Ok(r) => f(r),
            Err(e) => Err(format!("desk evaluation failed: {e}")),
        }
    };
    passed.push(report(
        4,
        "perfect-model ceiling",
        shared(perfect_model_ceiling),
    ));
    passed.push(report(5, "validity screen", shared(validity_screen)));
    passed.push(report(6, "SALI exemplars", sali_exemplars));
    passed.push(report(7, "crossover shadow", shared(crossover_shadow)));
    passed.push(report(
        8,
        "determinism and persistence",
        determinism_and_persistence,
    ));
    passed.push(report(9, "window count", window_count_check));

    let failed = passed.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        passed.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
