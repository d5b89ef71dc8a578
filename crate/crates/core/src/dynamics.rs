//! The coupled standard map on an `N`-site ring.
//!
//! One iteration updates every momentum from the old positions, then moves
//! every position by its new momentum:
//!
//! ```text
//! p'_i = p_i + K sin(q_i) - eps [ sin(q_{i+1} - q_i) + sin(q_{i-1} - q_i) ]
//! q'_i = q_i + p'_i                          (mod 2 pi)
//! ```
//!
//! Positions live in `[0, 2 pi)` and momenta in `[-pi, pi)`. The map is
//! 2 pi-periodic in both coordinates, so the reduction changes only the chart,
//! never the dynamics or its tangent map.

use std::f64::consts::{PI, TAU};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Controlled factors of one system instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Local nonlinearity strength.
    pub k: f64,
    /// Nearest-neighbour coupling strength.
    pub epsilon: f64,
    /// Number of ring sites.
    pub n: usize,
}

impl SystemParams {
    pub fn new(k: f64, epsilon: f64, n: usize) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::param(
                "K",
                format!("must be finite and >= 0, got {k}"),
            ));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::param(
                "epsilon",
                format!("must be finite and >= 0, got {epsilon}"),
            ));
        }
        if n < 3 {
            return Err(Error::param(
                "N",
                format!("ring needs at least 3 sites, got {n}"),
            ));
        }
        Ok(SystemParams { k, epsilon, n })
    }

    /// Builds params from the coupling-to-chaos ratio, `epsilon = rho * K`.
    pub fn from_ratio(k: f64, rho: f64, n: usize) -> Result<Self> {
        Self::new(k, rho * k, n)
    }

    /// `epsilon / K`; `None` when `K == 0`.
    pub fn rho(&self) -> Option<f64> {
        (self.k > 0.0).then(|| self.epsilon / self.k)
    }

    /// Width of a state row, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }
}

/// One time-slice of the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl LatticeState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Dimension {
                expected: q.len(),
                actual: p.len(),
            });
        }
        Ok(LatticeState { q, p })
    }

    /// Splits a `(q_1..q_N, p_1..p_N)` row.
    pub fn from_row(row: &[f64]) -> Result<Self> {
        if !row.len().is_multiple_of(2) {
            return Err(Error::Dimension {
                expected: row.len() + 1,
                actual: row.len(),
            });
        }
        let (q, p) = row.split_at(row.len() / 2);
        Ok(LatticeState {
            q: q.to_vec(),
            p: p.to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(2 * self.n());
        row.extend_from_slice(&self.q);
        row.extend_from_slice(&self.p);
        row
    }

    fn check(&self, params: &SystemParams) -> Result<()> {
        if self.q.len() != params.n || self.p.len() != params.n {
            return Err(Error::Dimension {
                expected: params.n,
                actual: self.q.len().min(self.p.len()),
            });
        }
        Ok(())
    }
}

/// Floored reduction to `[0, 2 pi)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (0.0..TAU).contains(&x) {
        return x;
    }
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduction to `[-pi, pi)`; values already in range are returned unchanged.
#[inline]
pub fn wrap_momentum(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// Signed difference `a - b` reduced to `[-pi, pi)`.
#[inline]
pub fn periodic_diff(a: f64, b: f64) -> f64 {
    wrap_momentum(a - b)
}

/// Advances `(q, p)` one iteration in place.
pub(crate) fn step_in_place(q: &mut [f64], p: &mut [f64], k: f64, eps: f64) {
    let n = q.len();
    for i in 0..n {
        let right = q[(i + 1) % n];
        let left = q[(i + n - 1) % n];
        let qi = q[i];
        let coupling = (right - qi).sin() + (left - qi).sin();
        p[i] = wrap_momentum(p[i] + k * qi.sin() - eps * coupling);
    }
    for i in 0..n {
        q[i] = wrap_angle(q[i] + p[i]);
    }
}

/// One iteration of the map. The input is left untouched.
pub fn step(state: &LatticeState, params: &SystemParams) -> Result<LatticeState> {
    state.check(params)?;
    let mut next = state.clone();
    step_in_place(&mut next.q, &mut next.p, params.k, params.epsilon);
    Ok(next)
}

/// Coefficients of the linearized map at one state.
///
/// With `e_i = eps cos(q_{i+1} - q_i)` and
/// `a_i = K cos(q_i) + e_i + e_{i-1}`, the momentum row of the Jacobian is
/// `(M dq)_i = a_i dq_i - e_i dq_{i+1} - e_{i-1} dq_{i-1}`, and the full
/// tangent update is `dp' = dp + M dq`, `dq' = dq + dp'`.
#[derive(Debug, Clone)]
pub struct Linearization {
    diag: Vec<f64>,
    edge: Vec<f64>,
}

impl Linearization {
    pub fn new(n: usize) -> Self {
        Linearization {
            diag: vec![0.0; n],
            edge: vec![0.0; n],
        }
    }

    /// Recomputes the coefficients at positions `q`.
    pub fn update(&mut self, q: &[f64], k: f64, eps: f64) {
        let n = q.len();
        debug_assert_eq!(n, self.diag.len());
        for (i, e) in self.edge.iter_mut().enumerate() {
            *e = eps * (q[(i + 1) % n] - q[i]).cos();
        }
        for (i, d) in self.diag.iter_mut().enumerate() {
            *d = k * q[i].cos() + self.edge[i] + self.edge[(i + n - 1) % n];
        }
    }

    pub fn at(state: &LatticeState, params: &SystemParams) -> Self {
        let mut lin = Linearization::new(state.n());
        lin.update(&state.q, params.k, params.epsilon);
        lin
    }

    /// Pushes a deviation vector `(dq, dp)` through the tangent map in place.
    pub fn apply(&self, dq: &mut [f64], dp: &mut [f64]) {
        let n = dq.len();
        for i in 0..n {
            let m_dq = self.diag[i] * dq[i]
                - self.edge[i] * dq[(i + 1) % n]
                - self.edge[(i + n - 1) % n] * dq[(i + n - 1) % n];
            dp[i] += m_dq;
        }
        for i in 0..n {
            dq[i] += dp[i];
        }
    }
}

/// Exact derivative of [`step`] as a dense `2N x 2N` matrix, rows and columns
/// ordered `(q_1..q_N, p_1..p_N)`.
pub fn jacobian(state: &LatticeState, params: &SystemParams) -> Result<Array2<f64>> {
    state.check(params)?;
    let n = params.n;
    let lin = Linearization::at(state, params);
    let mut j = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        let right = (i + 1) % n;
        let left = (i + n - 1) % n;
        // dp'_i / dq
        j[[n + i, i]] += lin.diag[i];
        j[[n + i, right]] -= lin.edge[i];
        j[[n + i, left]] -= lin.edge[left];
        // dp'_i / dp
        j[[n + i, n + i]] = 1.0;
    }
    for i in 0..n {
        // dq'_i = dq_i + dp'_i
        for c in 0..2 * n {
            j[[i, c]] = j[[n + i, c]];
        }
        j[[i, i]] += 1.0;
    }
    Ok(j)
}

/// Uniform initial condition: `q ~ U[0, 2 pi)`, `p ~ U[-pi, pi)`, positions
/// drawn first.
pub fn sample_ic(seed: u64, n: usize) -> Result<LatticeState> {
    if n < 3 {
        return Err(Error::param(
            "N",
            format!("ring needs at least 3 sites, got {n}"),
        ));
    }
    let mut rng = Stream::new(seed);
    let q = (0..n).map(|_| rng.uniform(0.0, TAU)).collect();
    let p = (0..n).map(|_| rng.uniform(-PI, PI)).collect();
    Ok(LatticeState { q, p })
}

/// A recorded orbit with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `T x 2N`, columns `(q_1..q_N, p_1..p_N)`.
    pub states: Array2<f64>,
    pub params: SystemParams,
    pub ic_index: usize,
    pub seed: u64,
    pub transient_discarded: usize,
}

impl Trajectory {
    /// Samples the initial condition from `seed` and simulates it.
    pub fn generate(
        params: &SystemParams,
        seed: u64,
        ic_index: usize,
        transient: usize,
        record: usize,
    ) -> Result<Self> {
        let ic = sample_ic(seed, params.n)?;
        let mut traj = simulate(&ic, params, transient, record)?;
        traj.seed = seed;
        traj.ic_index = ic_index;
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }
}

/// Iterates `transient` discarded steps, then records `record` states.
/// The initial condition itself is not recorded.
pub fn simulate(
    ic: &LatticeState,
    params: &SystemParams,
    transient: usize,
    record: usize,
) -> Result<Trajectory> {
    ic.check(params)?;
    if record == 0 {
        return Err(Error::param("record", "must be at least 1"));
    }
    let n = params.n;
    let (k, eps) = (params.k, params.epsilon);
    let mut q = ic.q.clone();
    let mut p = ic.p.clone();
    for _ in 0..transient {
        step_in_place(&mut q, &mut p, k, eps);
    }
    let mut states = Array2::<f64>::zeros((record, 2 * n));
    for mut row in states.rows_mut() {
        step_in_place(&mut q, &mut p, k, eps);
        let row = row.as_slice_mut().expect("standard layout");
        row[..n].copy_from_slice(&q);
        row[n..].copy_from_slice(&p);
    }
    if let Some(bad) = states.iter().find(|x| !x.is_finite()) {
        return Err(Error::Invariant(format!(
            "non-finite state {bad} for K={k}, epsilon={eps}"
        )));
    }
    Ok(Trajectory {
        states,
        params: *params,
        ic_index: 0,
        seed: 0,
        transient_discarded: transient,
    })
}

/// Binary ring adjacency, `A[i][j] = 1` iff `j = i +- 1 mod N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingAdjacency {
    pub matrix: Array2<u8>,
}

impl RingAdjacency {
    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.matrix.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

pub fn ring_adjacency(n: usize) -> Result<RingAdjacency> {
    if n < 3 {
        return Err(Error::param(
            "N",
            format!("ring needs at least 3 sites, got {n}"),
        ));
    }
    let mut matrix = Array2::<u8>::zeros((n, n));
    for i in 0..n {
        matrix[[i, (i + 1) % n]] = 1;
        matrix[[i, (i + n - 1) % n]] = 1;
    }
    Ok(RingAdjacency { matrix })
}
