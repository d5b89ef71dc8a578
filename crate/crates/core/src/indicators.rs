//! Per-orbit chaos diagnostics: the Benettin estimate of the maximal Lyapunov
//! exponent and SALI screening, plus per-instance regime summaries.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{step_in_place, LatticeState, Linearization, SystemParams};
use crate::error::{Error, Result};
use crate::rng::{stream_seed, Stream, StreamTag};

/// SALI below this marks an orbit chaotic (and stops the screen).
pub const SALI_CHAOTIC: f64 = 1e-8;
/// SALI above this marks an orbit regular.
pub const SALI_REGULAR: f64 = 1e-4;
/// Shortest accepted Benettin horizon.
pub const MIN_LYAPUNOV_HORIZON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Regular,
    Sticky,
    Chaotic,
}

impl OrbitClass {
    /// Chaotic below `1e-8`, regular above `1e-4`, sticky on the closed
    /// interval between.
    pub fn from_sali(sali: f64) -> Self {
        if sali < SALI_CHAOTIC {
            OrbitClass::Chaotic
        } else if sali > SALI_REGULAR {
            OrbitClass::Regular
        } else {
            OrbitClass::Sticky
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OrbitClass::Regular => "regular",
            OrbitClass::Sticky => "sticky",
            OrbitClass::Chaotic => "chaotic",
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrbitClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(OrbitClass::Regular),
            "sticky" => Ok(OrbitClass::Sticky),
            "chaotic" => Ok(OrbitClass::Chaotic),
            other => Err(Error::param(
                "orbit_class",
                format!("unknown class `{other}`"),
            )),
        }
    }
}

/// Steps of the SALI screen.
pub const DEFAULT_SALI_HORIZON: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsConfig {
    /// Steps discarded before any tangent propagation.
    pub transient: usize,
    pub lyapunov_horizon: usize,
    pub sali_horizon: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            transient: 1000,
            lyapunov_horizon: 10_000,
            sali_horizon: DEFAULT_SALI_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaliOutcome {
    pub sali_final: f64,
    /// Iterations executed; below the horizon when the screen stopped early.
    pub steps: usize,
    pub class: OrbitClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitDiagnostics {
    pub lambda_max: f64,
    pub sali_final: f64,
    pub sali_steps: usize,
    pub orbit_class: OrbitClass,
}

struct Orbit {
    q: Vec<f64>,
    p: Vec<f64>,
    k: f64,
    eps: f64,
    lin: Linearization,
}

impl Orbit {
    fn after_transient(ic: &LatticeState, params: &SystemParams, transient: usize) -> Result<Self> {
        if ic.n() != params.n || ic.p.len() != params.n {
            return Err(Error::Dimension {
                expected: params.n,
                actual: ic.n(),
            });
        }
        let mut orbit = Orbit {
            q: ic.q.clone(),
            p: ic.p.clone(),
            k: params.k,
            eps: params.epsilon,
            lin: Linearization::new(params.n),
        };
        for _ in 0..transient {
            step_in_place(&mut orbit.q, &mut orbit.p, orbit.k, orbit.eps);
        }
        Ok(orbit)
    }

    /// Linearizes at the current state, then advances the state.
    fn linearize_and_step(&mut self) -> &Linearization {
        self.lin.update(&self.q, self.k, self.eps);
        step_in_place(&mut self.q, &mut self.p, self.k, self.eps);
        &self.lin
    }
}

/// A deviation vector split into its position and momentum halves.
#[derive(Clone)]
struct Deviation {
    dq: Vec<f64>,
    dp: Vec<f64>,
}

impl Deviation {
    fn random(n: usize, rng: &mut Stream) -> Self {
        let mut d = Deviation {
            dq: (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect(),
            dp: (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        };
        d.normalize();
        d
    }

    fn norm(&self) -> f64 {
        self.dq
            .iter()
            .chain(&self.dp)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Scales to unit length and returns the previous norm.
    fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        let inv = 1.0 / norm;
        self.dq
            .iter_mut()
            .chain(self.dp.iter_mut())
            .for_each(|x| *x *= inv);
        norm
    }

    fn dot(&self, other: &Deviation) -> f64 {
        self.dq
            .iter()
            .chain(&self.dp)
            .zip(other.dq.iter().chain(&other.dp))
            .map(|(a, b)| a * b)
            .sum()
    }

    fn subtract_scaled(&mut self, other: &Deviation, scale: f64) {
        for (a, b) in self
            .dq
            .iter_mut()
            .chain(self.dp.iter_mut())
            .zip(other.dq.iter().chain(&other.dp))
        {
            *a -= scale * b;
        }
    }

    fn apply(&mut self, lin: &Linearization) {
        lin.apply(&mut self.dq, &mut self.dp);
    }
}

/// `min(|a + b|, |a - b|)` for unit vectors `a`, `b`.
fn alignment_index(a: &Deviation, b: &Deviation) -> f64 {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (x, y) in a.dq.iter().chain(&a.dp).zip(b.dq.iter().chain(&b.dp)) {
        plus += (x + y) * (x + y);
        minus += (x - y) * (x - y);
    }
    plus.min(minus).sqrt()
}

/// Running Benettin estimate: entry `n - 1` is the mean log growth over the
/// first `n` post-transient steps.
pub fn lyapunov_running(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    horizon: usize,
    deviation_seed: u64,
) -> Result<Vec<f64>> {
    let mut orbit = Orbit::after_transient(ic, params, transient)?;
    let mut rng = Stream::new(deviation_seed);
    let mut w = Deviation::random(params.n, &mut rng);
    let mut log_sum = 0.0;
    let mut running = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        w.apply(orbit.linearize_and_step());
        log_sum += w.normalize().ln();
        running.push(log_sum / n as f64);
    }
    Ok(running)
}

/// Finite-time maximal Lyapunov exponent (per map iteration) by deviation
/// vector renormalization after every step.
pub fn lyapunov_max(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    horizon: usize,
    deviation_seed: u64,
) -> Result<f64> {
    if horizon < MIN_LYAPUNOV_HORIZON {
        return Err(Error::param(
            "horizon",
            format!("need at least {MIN_LYAPUNOV_HORIZON} steps, got {horizon}"),
        ));
    }
    let mut orbit = Orbit::after_transient(ic, params, transient)?;
    let mut rng = Stream::new(deviation_seed);
    let mut w = Deviation::random(params.n, &mut rng);
    let mut log_sum = 0.0;
    for _ in 0..horizon {
        w.apply(orbit.linearize_and_step());
        log_sum += w.normalize().ln();
    }
    let lambda = log_sum / horizon as f64;
    if !lambda.is_finite() {
        return Err(Error::Invariant(format!("non-finite lambda_max {lambda}")));
    }
    Ok(lambda)
}

fn sali_run(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    horizon: usize,
    deviation_seed: u64,
    mut visit: impl FnMut(f64),
) -> Result<SaliOutcome> {
    let mut orbit = Orbit::after_transient(ic, params, transient)?;
    let mut rng = Stream::new(deviation_seed);
    let mut a = Deviation::random(params.n, &mut rng);
    let mut b = Deviation::random(params.n, &mut rng);
    let overlap = b.dot(&a);
    b.subtract_scaled(&a, overlap);
    b.normalize();

    let mut sali = alignment_index(&a, &b);
    let mut steps = 0;
    while steps < horizon {
        let lin = orbit.linearize_and_step();
        a.apply(lin);
        b.apply(lin);
        a.normalize();
        b.normalize();
        sali = alignment_index(&a, &b);
        steps += 1;
        visit(sali);
        if sali < SALI_CHAOTIC {
            break;
        }
    }
    Ok(SaliOutcome {
        sali_final: sali,
        steps,
        class: OrbitClass::from_sali(sali),
    })
}

/// SALI screen over at most `horizon` post-transient steps, stopping early
/// once the index drops below [`SALI_CHAOTIC`].
pub fn sali_classify(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    horizon: usize,
    deviation_seed: u64,
) -> Result<SaliOutcome> {
    if horizon == 0 {
        return Err(Error::param("screen_horizon", "must be at least 1"));
    }
    sali_run(ic, params, transient, horizon, deviation_seed, |_| {})
}

/// SALI value after every step, without early termination.
pub fn sali_series(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    horizon: usize,
    deviation_seed: u64,
) -> Result<Vec<f64>> {
    let mut series = Vec::with_capacity(horizon);
    let mut orbit = Orbit::after_transient(ic, params, transient)?;
    let mut rng = Stream::new(deviation_seed);
    let mut a = Deviation::random(params.n, &mut rng);
    let mut b = Deviation::random(params.n, &mut rng);
    let overlap = b.dot(&a);
    b.subtract_scaled(&a, overlap);
    b.normalize();
    for _ in 0..horizon {
        let lin = orbit.linearize_and_step();
        a.apply(lin);
        b.apply(lin);
        a.normalize();
        b.normalize();
        series.push(alignment_index(&a, &b));
    }
    Ok(series)
}

/// Both diagnostics for one orbit. Deviation vectors are seeded from the
/// trajectory seed with separate tags, independent of the IC stream.
pub fn diagnose_orbit(
    ic: &LatticeState,
    params: &SystemParams,
    config: &DiagnosticsConfig,
    trajectory_seed: u64,
) -> Result<OrbitDiagnostics> {
    let lambda_max = lyapunov_max(
        ic,
        params,
        config.transient,
        config.lyapunov_horizon,
        stream_seed(trajectory_seed, StreamTag::LyapunovDeviation),
    )?;
    let sali = sali_classify(
        ic,
        params,
        config.transient,
        config.sali_horizon,
        stream_seed(trajectory_seed, StreamTag::SaliDeviation),
    )?;
    Ok(OrbitDiagnostics {
        lambda_max,
        sali_final: sali.sali_final,
        sali_steps: sali.steps,
        orbit_class: sali.class,
    })
}

/// Aggregate over the orbits of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSummary {
    pub mean_lambda_max: f64,
    pub lambda_max_range: (f64, f64),
    pub chaos_fraction: f64,
    /// `1 / mean_lambda_max`, infinite when the mean is not positive.
    pub lyapunov_time: f64,
    pub orbits: usize,
}

pub fn lyapunov_time(mean_lambda_max: f64) -> f64 {
    if mean_lambda_max > 0.0 {
        1.0 / mean_lambda_max
    } else {
        f64::INFINITY
    }
}

pub fn regime_stats(diagnostics: &[OrbitDiagnostics]) -> Result<RegimeSummary> {
    if diagnostics.is_empty() {
        return Err(Error::Empty("regime_stats needs at least one orbit"));
    }
    let m = diagnostics.len() as f64;
    let mean = diagnostics.iter().map(|d| d.lambda_max).sum::<f64>() / m;
    let lo = diagnostics
        .iter()
        .map(|d| d.lambda_max)
        .fold(f64::INFINITY, f64::min);
    let hi = diagnostics
        .iter()
        .map(|d| d.lambda_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let chaotic = diagnostics
        .iter()
        .filter(|d| d.orbit_class == OrbitClass::Chaotic)
        .count();
    Ok(RegimeSummary {
        mean_lambda_max: mean,
        lambda_max_range: (lo, hi),
        chaos_fraction: chaotic as f64 / m,
        lyapunov_time: lyapunov_time(mean),
        orbits: diagnostics.len(),
    })
}

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    #[serde(rename = "K")]
    pub k: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub ic_index: usize,
    pub lambda_max: f64,
    pub sali_final: f64,
    pub orbit_class: OrbitClass,
}

impl DiagnosticsRecord {
    pub fn diagnostics(&self) -> OrbitDiagnostics {
        OrbitDiagnostics {
            lambda_max: self.lambda_max,
            sali_final: self.sali_final,
            sali_steps: 0,
            orbit_class: self.orbit_class,
        }
    }
}

pub fn write_diagnostics_csv<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics_csv<R: std::io::Read>(input: R) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}
