//! Independent oracles shared by the integration suites. None of these call
//! into the code paths they check.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use csmbench::comparison::{wilcoxon_signed_rank, WilcoxonMethod};
use csmbench::dynamics::{jacobian, periodic_diff, sample_ic, step, LatticeState, SystemParams};
use csmbench::rng::Stream;
use nalgebra::DMatrix;

pub fn random_case(rng: &mut Stream) -> (LatticeState, SystemParams) {
    let n = 3 + rng.below(10) as usize;
    let k = rng.uniform(0.0, 8.0);
    let rho = rng.uniform(0.0, 0.6);
    let params = SystemParams::from_ratio(k, rho, n).unwrap();
    (sample_ic(rng.next_u64(), n).unwrap(), params)
}

/// Central differences of `step`, with outputs compared on the torus so a
/// wrap inside the stencil does not register as a jump.
pub fn finite_difference_jacobian(
    state: &LatticeState,
    params: &SystemParams,
    h: f64,
) -> DMatrix<f64> {
    let dim = 2 * params.n;
    let base = state.to_row();
    let mut j = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let shifted = |delta: f64| {
            let mut row = base.clone();
            row[c] += delta;
            step(&LatticeState::from_row(&row).unwrap(), params)
                .unwrap()
                .to_row()
        };
        let (plus, minus) = (shifted(h), shifted(-h));
        for r in 0..dim {
            j[(r, c)] = periodic_diff(plus[r], minus[r]) / (2.0 * h);
        }
    }
    j
}

pub fn analytic_jacobian(state: &LatticeState, params: &SystemParams) -> DMatrix<f64> {
    let a = jacobian(state, params).unwrap();
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[[r, c]])
}

/// Worst `max|J - J_fd| / max(max|J|, 1)` over `cases` random states.
pub fn worst_jacobian_error(seed: u64, cases: usize) -> f64 {
    let mut rng = Stream::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (state, params) = random_case(&mut rng);
        let analytic = analytic_jacobian(&state, &params);
        let numeric = finite_difference_jacobian(&state, &params, 1e-5);
        let scale = analytic.amax().max(1.0);
        worst = worst.max((&analytic - &numeric).amax() / scale);
    }
    worst
}

/// Worst `|det J - 1|` over `cases` random states.
pub fn worst_determinant_error(seed: u64, cases: usize) -> f64 {
    let mut rng = Stream::new(seed);
    (0..cases)
        .map(|_| {
            let (state, params) = random_case(&mut rng);
            (analytic_jacobian(&state, &params).determinant() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Chirikov map on one site: kick, reduce p to [-pi, pi), drift, reduce q.
pub fn scalar_standard_map(mut q: f64, mut p: f64, k: f64, steps: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        p += k * q.sin();
        if !(-PI..PI).contains(&p) {
            p = (p + PI).rem_euclid(TAU) - PI;
        }
        q += p;
        if !(0.0..TAU).contains(&q) {
            q = q.rem_euclid(TAU);
        }
        out.push((q, p));
    }
    out
}

/// Two-sided sign-flip p-value by enumeration: the share of all `2^n` sign
/// assignments of ranks `1..=n` whose `W+` is at least as far from its
/// null mean as the observed one.
pub fn enumerated_p(observed_w_plus: u64, n: usize) -> f64 {
    let total: u64 = (n * (n + 1) / 2) as u64;
    // Compare 2 W+ against the doubled mean to stay in integers.
    let dev = |w: u64| (2 * w).abs_diff(total);
    let observed = dev(observed_w_plus);
    let mut hits = 0u64;
    for mask in 0u32..(1 << n) {
        let w: u64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| i as u64 + 1)
            .sum();
        hits += u64::from(dev(w) >= observed);
    }
    hits as f64 / (1u64 << n) as f64
}

/// Runs the exact Wilcoxon path on every sign pattern for every `n` up to
/// `max_n` (distinct magnitudes in shuffled order, padded with zero
/// differences) and returns `(datasets checked, worst |p - oracle|)`.
/// Panics on a wrong method, sample size or `W+`.
pub fn exhaustive_wilcoxon(max_n: usize, seed: u64) -> (usize, f64) {
    let mut rng = Stream::new(seed);
    let (mut checked, mut worst) = (0, 0.0f64);
    for n in 1..=max_n {
        for signs in 0u32..(1 << n) {
            let mut magnitudes: Vec<f64> = (1..=n)
                .map(|r| r as f64 * 0.37 + rng.unit() * 0.1)
                .collect();
            rng.shuffle(&mut magnitudes);
            let mut pairs: Vec<(f64, f64)> = magnitudes
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let base = 10.0 + rng.unit();
                    if signs >> i & 1 == 1 {
                        (base + m, base)
                    } else {
                        (base, base + m)
                    }
                })
                .collect();
            for _ in 0..rng.below(3) {
                pairs.push((4.0, 4.0));
            }
            let result = wilcoxon_signed_rank(&pairs);
            assert_eq!(result.method, WilcoxonMethod::Exact);
            assert_eq!(result.n, n);

            let mut sorted = magnitudes.clone();
            sorted.sort_by(f64::total_cmp);
            let w_plus: u64 = (0..n)
                .filter(|i| signs >> i & 1 == 1)
                .map(|i| sorted.iter().position(|&m| m == magnitudes[i]).unwrap() as u64 + 1)
                .sum();
            assert_eq!(result.w_plus, w_plus as f64, "n={n} signs={signs:b}");
            worst = worst.max((result.p_value - enumerated_p(w_plus, n)).abs());
            checked += 1;
        }
    }
    (checked, worst)
}

/// Windows enumerated one start at a time.
pub fn enumerate_windows(len: usize, context: usize, horizon: usize, stride: usize) -> usize {
    let mut count = 0;
    let mut start = 0;
    while start + context + horizon <= len {
        count += 1;
        start += stride;
    }
    count
}
