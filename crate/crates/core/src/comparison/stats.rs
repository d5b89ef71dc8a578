//! Paired tests: Wilcoxon signed-rank on matched VPTs and McNemar's exact
//! test on validity discordance.

use std::fmt;

use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

/// Largest sample for which the exact null distribution is used.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    Normal,
    /// Every difference was zero; `p = 1`.
    AllZero,
    /// No pairs at all; `p` is NaN.
    Empty,
}

impl WilcoxonMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::Normal => "normal",
            WilcoxonMethod::AllZero => "all_zero",
            WilcoxonMethod::Empty => "empty",
        }
    }
}

impl fmt::Display for WilcoxonMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Nonzero differences used.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Average ranks (1-based) of `values`, and whether any ties occurred.
pub fn midranks(values: &[f64]) -> (Vec<f64>, bool) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tied = false;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        tied |= j - i > 1;
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    (ranks, tied)
}

/// Number of sign assignments of ranks `1..=n` giving each rank sum `0..=n(n+1)/2`.
fn signed_rank_counts(n: usize) -> Vec<f64> {
    let total = n * (n + 1) / 2;
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    for r in 1..=n {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// Two-sided test on `a - b` over matched pairs.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        let method = if pairs.is_empty() {
            WilcoxonMethod::Empty
        } else {
            WilcoxonMethod::AllZero
        };
        return WilcoxonResult {
            n,
            w_plus: 0.0,
            w_minus: 0.0,
            statistic: 0.0,
            p_value: if pairs.is_empty() { f64::NAN } else { 1.0 },
            method,
        };
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, tied) = midranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    if n <= WILCOXON_EXACT_MAX_N && !tied {
        let counts = signed_rank_counts(n);
        // Without ties every rank is an integer, so the statistic is too.
        let t = statistic.round() as usize;
        let tail: f64 = counts[..=t].iter().sum();
        let p = (2.0 * tail / 2f64.powi(n as i32)).min(1.0);
        return WilcoxonResult {
            n,
            w_plus,
            w_minus,
            statistic,
            p_value: p,
            method: WilcoxonMethod::Exact,
        };
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes(&abs).map(|t| t * t * t - t).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    WilcoxonResult {
        n,
        w_plus,
        w_minus,
        statistic,
        p_value: p,
        method: WilcoxonMethod::Normal,
    }
}

fn tie_sizes(values: &[f64]) -> impl Iterator<Item = f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = i + sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        sizes.push((j - i) as f64);
        i = j;
    }
    sizes.into_iter()
}

/// Two-sided exact binomial test on the discordant counts.
pub fn mcnemar_exact(a_only: u64, b_only: u64) -> f64 {
    let n = a_only + b_only;
    if n == 0 {
        return 1.0;
    }
    let binom = Binomial::new(0.5, n).expect("p = 0.5 is valid");
    (2.0 * binom.cdf(a_only.min(b_only))).min(1.0)
}
