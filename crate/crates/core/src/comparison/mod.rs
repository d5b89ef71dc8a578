//! Two complementary views of model quality: conditional accuracy on the
//! instances both models get right (Wilcoxon on VPT) and robustness across
//! all instances (McNemar on validity), plus win counts, the graph/non-graph
//! crossover threshold and the design-space summary.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::dataset::InstanceKey;
use crate::error::Result;
use crate::evaluation::InstanceSummary;
use crate::indicators::{regime_stats, DiagnosticsRecord};

pub mod stats;
pub mod svg;

pub use stats::{mcnemar_exact, midranks, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};

type KeyBits = [u64; 3];

fn by_instance(summaries: &[InstanceSummary]) -> BTreeMap<KeyBits, Vec<&InstanceSummary>> {
    let mut map: BTreeMap<KeyBits, Vec<&InstanceSummary>> = BTreeMap::new();
    for s in summaries {
        map.entry(s.key.sort_bits()).or_default().push(s);
    }
    map
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub model_a: String,
    pub model_b: String,
    /// Instances where both are valid: `(key, vpt_a, vpt_b)`.
    pub matched: Vec<(InstanceKey, f64, f64)>,
    pub both_valid: usize,
    pub a_only: usize,
    pub b_only: usize,
    pub neither: usize,
}

impl PairedComparison {
    /// Over instances where both models have a result.
    pub fn new(summaries: &[InstanceSummary], model_a: &str, model_b: &str) -> Self {
        let mut cmp = PairedComparison {
            model_a: model_a.to_owned(),
            model_b: model_b.to_owned(),
            matched: Vec::new(),
            both_valid: 0,
            a_only: 0,
            b_only: 0,
            neither: 0,
        };
        for rows in by_instance(summaries).values() {
            let a = rows.iter().find(|s| s.model == model_a);
            let b = rows.iter().find(|s| s.model == model_b);
            let (Some(a), Some(b)) = (a, b) else { continue };
            match (a.valid, b.valid) {
                (true, true) => {
                    cmp.both_valid += 1;
                    cmp.matched.push((a.key, a.mean_vpt, b.mean_vpt));
                }
                (true, false) => cmp.a_only += 1,
                (false, true) => cmp.b_only += 1,
                (false, false) => cmp.neither += 1,
            }
        }
        cmp
    }

    pub fn total(&self) -> usize {
        self.both_valid + self.a_only + self.b_only + self.neither
    }

    pub fn report(&self) -> ComparisonRow {
        let pairs: Vec<(f64, f64)> = self.matched.iter().map(|&(_, a, b)| (a, b)).collect();
        let w = wilcoxon_signed_rank(&pairs);
        ComparisonRow {
            models: format!("{} vs {}", self.model_a, self.model_b),
            n_pairs: pairs.len(),
            wins_a: pairs.iter().filter(|(a, b)| a > b).count(),
            wins_b: pairs.iter().filter(|(a, b)| a < b).count(),
            ties: pairs.iter().filter(|(a, b)| a == b).count(),
            wilcoxon_p: w.p_value,
            a_only: self.a_only,
            b_only: self.b_only,
            mcnemar_p: mcnemar_exact(self.a_only as u64, self.b_only as u64),
            wilcoxon_method: w.method.as_str(),
        }
    }
}

/// One line of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub models: String,
    pub n_pairs: usize,
    #[serde(rename = "wins_A")]
    pub wins_a: usize,
    #[serde(rename = "wins_B")]
    pub wins_b: usize,
    pub ties: usize,
    pub wilcoxon_p: f64,
    pub a_only: usize,
    pub b_only: usize,
    pub mcnemar_p: f64,
    pub wilcoxon_method: &'static str,
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Every unordered pair of distinct models, in name order.
pub fn all_pairs(summaries: &[InstanceSummary]) -> Vec<(String, String)> {
    let models: BTreeSet<&str> = summaries.iter().map(|s| s.model.as_str()).collect();
    let models: Vec<&str> = models.into_iter().collect();
    let mut out = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            out.push((a.to_string(), b.to_string()));
        }
    }
    out
}

/// Win counts in integer units of `1 / denominator`, so conservation holds
/// exactly: a scored instance always contributes `denominator` units.
#[derive(Debug, Clone, PartialEq)]
pub struct WinCounts {
    pub scored: usize,
    pub units: BTreeMap<String, u128>,
}

impl WinCounts {
    fn new(models: &BTreeSet<String>) -> Self {
        WinCounts {
            scored: 0,
            units: models.iter().map(|m| (m.clone(), 0)).collect(),
        }
    }

    pub fn get(&self, model: &str, denominator: u128) -> f64 {
        self.units
            .get(model)
            .map_or(0.0, |&u| u as f64 / denominator as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinTable {
    /// `lcm(1..=models)`: every tie split is a whole number of units.
    pub denominator: u128,
    /// Every model seen, including those without wins.
    pub overall: WinCounts,
    /// Ascending K.
    pub by_k: Vec<(f64, WinCounts)>,
}

impl WinTable {
    pub fn wins(&self, model: &str) -> f64 {
        self.overall.get(model, self.denominator)
    }

    pub fn scored(&self) -> usize {
        self.overall.scored
    }
}

fn lcm_up_to(m: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=m.max(1) as u128).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

/// Each instance with at least two valid models awards one win, split
/// equally among the valid models with the highest mean VPT.
///
/// # Panics
/// With more than 64 distinct models, where unit counts could overflow.
pub fn fractional_wins(summaries: &[InstanceSummary]) -> WinTable {
    let models: BTreeSet<String> = summaries.iter().map(|s| s.model.clone()).collect();
    assert!(
        models.len() <= 64,
        "too many models for exact win accounting"
    );
    let denominator = lcm_up_to(models.len());
    let mut table = WinTable {
        denominator,
        overall: WinCounts::new(&models),
        by_k: Vec::new(),
    };
    for rows in by_instance(summaries).values() {
        let valid: Vec<&&InstanceSummary> = rows.iter().filter(|s| s.valid).collect();
        if valid.len() < 2 {
            continue;
        }
        let best = valid
            .iter()
            .map(|s| s.mean_vpt)
            .fold(f64::NEG_INFINITY, f64::max);
        let top: Vec<&str> = valid
            .iter()
            .filter(|s| s.mean_vpt == best)
            .map(|s| s.model.as_str())
            .collect();
        let share = denominator / top.len() as u128;
        let k = rows[0].key.k;
        let idx = match table.by_k.iter().position(|(rk, _)| *rk == k) {
            Some(i) => i,
            None => {
                table.by_k.push((k, WinCounts::new(&models)));
                table.by_k.len() - 1
            }
        };
        for counts in [&mut table.overall, &mut table.by_k[idx].1] {
            counts.scored += 1;
            for m in &top {
                *counts.units.get_mut(*m).expect("model seen") += share;
            }
        }
    }
    table.by_k.sort_by(|a, b| a.0.total_cmp(&b.0));
    table
}

#[derive(Serialize)]
struct WinRow<'a> {
    regime: String,
    model: &'a str,
    wins: f64,
    scored: usize,
}

/// One row per model overall (`regime = all`) and per K (`regime = K=...`).
pub fn write_wins_csv<W: Write>(out: W, table: &WinTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let groups = std::iter::once(("all".to_owned(), &table.overall))
        .chain(table.by_k.iter().map(|(k, c)| (format!("K={k:?}"), c)));
    for (regime, counts) in groups {
        for model in counts.units.keys() {
            w.serialize(WinRow {
                regime: regime.clone(),
                model,
                wins: counts.get(model, table.denominator),
                scored: counts.scored,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub k: f64,
    /// `None` when undefined; see `reason`.
    pub rho_c: Option<f64>,
    pub reason: Option<String>,
    /// Per compared rho: `(rho, best graph VPT, best non-graph VPT)`, NaN
    /// where a group has no valid result.
    pub profile: Vec<(f64, f64, f64)>,
}

/// Best group score at one `(K, rho)`: for each model, valid mean VPTs
/// averaged over N; then the maximum over the group's models.
fn group_best(rows: &[&InstanceSummary], in_group: &dyn Fn(&str) -> bool) -> f64 {
    let mut per_model: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for s in rows.iter().filter(|s| s.valid && in_group(&s.model)) {
        let e = per_model.entry(&s.model).or_insert((0.0, 0));
        e.0 += s.mean_vpt;
        e.1 += 1;
    }
    per_model
        .values()
        .map(|(sum, n)| sum / *n as f64)
        .fold(f64::NAN, f64::max)
}

/// Smallest grid rho from which the graph group leads at every larger rho.
///
/// A group leads at a rho if its best mean VPT is at least the other's; a
/// group with no valid result loses to one that has any. Rho values where
/// neither group is valid are skipped. Undefined when fewer than two rho
/// values have valid results for both groups, or when the graph group does
/// not lead at the largest compared rho.
pub fn crossover_threshold(
    summaries: &[InstanceSummary],
    graph_models: &BTreeSet<String>,
) -> Vec<Crossover> {
    let is_graph = |m: &str| graph_models.contains(m);
    let not_graph = |m: &str| !graph_models.contains(m);
    let mut cells: BTreeMap<u64, BTreeMap<u64, Vec<&InstanceSummary>>> = BTreeMap::new();
    for s in summaries {
        let bits = s.key.sort_bits();
        cells
            .entry(bits[0])
            .or_default()
            .entry(bits[1])
            .or_default()
            .push(s);
    }
    let mut out = Vec::new();
    for rhos in cells.values() {
        let k = rhos.values().next().expect("non-empty")[0].key.k;
        let mut profile = Vec::new();
        let mut both = 0;
        for rows in rhos.values() {
            let g = group_best(rows, &is_graph);
            let o = group_best(rows, &not_graph);
            if g.is_nan() && o.is_nan() {
                continue;
            }
            both += usize::from(!g.is_nan() && !o.is_nan());
            profile.push((rows[0].key.rho, g, o));
        }
        let leads = |&(_, g, o): &(f64, f64, f64)| !g.is_nan() && (o.is_nan() || g >= o);
        let (rho_c, reason) = if both < 2 {
            (
                None,
                Some(format!(
                    "only {both} rho values with valid results in both groups"
                )),
            )
        } else {
            let tail = profile.iter().rev().take_while(|p| leads(p)).count();
            if tail == 0 {
                (
                    None,
                    Some("graph group does not lead at the largest rho".to_owned()),
                )
            } else {
                (Some(profile[profile.len() - tail].0), None)
            }
        };
        out.push(Crossover {
            k,
            rho_c,
            reason,
            profile,
        });
    }
    out
}

#[derive(Serialize)]
struct CrossoverRow<'a> {
    #[serde(rename = "K")]
    k: f64,
    rho_c: Option<f64>,
    note: &'a str,
}

pub fn write_crossover_csv<W: Write>(out: W, rows: &[Crossover]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in rows {
        w.serialize(CrossoverRow {
            k: c.k,
            rho_c: c.rho_c,
            note: c.reason.as_deref().unwrap_or(""),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One `(K, rho, N)` cell of the design-space summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T_L")]
    pub lyapunov_time: f64,
    pub chaos_fraction: f64,
    /// Highest valid mean VPT; tied models joined with `|`. Empty when no
    /// model is valid or no results were supplied.
    pub winner: String,
    /// Lead over the runner-up; 0 on ties, empty with fewer than two valid models.
    pub margin: Option<f64>,
}

impl CellReport {
    pub fn key(&self) -> InstanceKey {
        InstanceKey::new(self.k, self.rho, self.n)
    }
}

/// Lyapunov time and chaos fraction from the diagnostics, and the winning
/// model from the results, for every instance that has diagnostics.
pub fn regime_report(
    diagnostics: &[DiagnosticsRecord],
    summaries: &[InstanceSummary],
) -> Result<Vec<CellReport>> {
    let mut diag: BTreeMap<KeyBits, Vec<&DiagnosticsRecord>> = BTreeMap::new();
    for d in diagnostics {
        diag.entry(InstanceKey::new(d.k, d.rho, d.n).sort_bits())
            .or_default()
            .push(d);
    }
    let results = by_instance(summaries);
    let mut out = Vec::with_capacity(diag.len());
    for (bits, records) in &diag {
        let orbits: Vec<_> = records.iter().map(|r| r.diagnostics()).collect();
        let regime = regime_stats(&orbits)?;
        let first = records[0];
        let (winner, margin) = match results.get(bits) {
            Some(rows) => winner_of(rows),
            None => (String::new(), None),
        };
        out.push(CellReport {
            k: first.k,
            rho: first.rho,
            n: first.n,
            lyapunov_time: regime.lyapunov_time,
            chaos_fraction: regime.chaos_fraction,
            winner,
            margin,
        });
    }
    Ok(out)
}

fn winner_of(rows: &[&InstanceSummary]) -> (String, Option<f64>) {
    let mut valid: Vec<&&InstanceSummary> = rows.iter().filter(|s| s.valid).collect();
    if valid.is_empty() {
        return (String::new(), None);
    }
    valid.sort_by(|a, b| {
        b.mean_vpt
            .total_cmp(&a.mean_vpt)
            .then(a.model.cmp(&b.model))
    });
    let best = valid[0].mean_vpt;
    let top: Vec<&str> = valid
        .iter()
        .take_while(|s| s.mean_vpt == best)
        .map(|s| s.model.as_str())
        .collect();
    let margin = if top.len() > 1 {
        Some(0.0)
    } else {
        valid.get(1).map(|s| best - s.mean_vpt)
    };
    (top.join("|"), margin)
}

pub fn write_design_space_csv<W: Write>(out: W, cells: &[CellReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::OrbitClass;

    fn s(model: &str, k: f64, rho: f64, n: usize, vpt: f64, valid: bool) -> InstanceSummary {
        InstanceSummary {
            key: InstanceKey::new(k, rho, n),
            model: model.into(),
            seeds: 1,
            mean_vpt: vpt,
            test_mse: if valid { 0.5 } else { 1.0 },
            valid,
            n_degenerate: 0,
        }
    }

    #[test]
    fn contingency_and_report() {
        let mut rows = Vec::new();
        for i in 0..62 {
            rows.push(s("a", 2.0, 0.01 * i as f64, 8, 5.0, true));
            rows.push(s(
                "b",
                2.0,
                0.01 * i as f64,
                8,
                if i < 31 { 4.0 } else { 6.0 },
                true,
            ));
        }
        for i in 62..81 {
            rows.push(s("a", 2.0, 0.01 * i as f64, 8, 0.0, false));
            rows.push(s("b", 2.0, 0.01 * i as f64, 8, 3.0, true));
        }
        for i in 81..96 {
            rows.push(s("a", 2.0, 0.01 * i as f64, 8, 0.0, false));
            rows.push(s("b", 2.0, 0.01 * i as f64, 8, 0.0, false));
        }
        let cmp = PairedComparison::new(&rows, "a", "b");
        assert_eq!(
            (cmp.both_valid, cmp.a_only, cmp.b_only, cmp.neither),
            (62, 0, 19, 15)
        );
        assert_eq!(cmp.total(), 96);
        assert_eq!(cmp.matched.len(), cmp.both_valid);
        let r = cmp.report();
        assert_eq!((r.wins_a, r.wins_b, r.ties), (31, 31, 0));
        assert!((r.mcnemar_p - 3.8147e-6).abs() < 1e-10);
        assert!(r.wilcoxon_p > 0.99);
    }

    #[test]
    fn wins_split_ties_and_conserve() {
        let rows = vec![
            s("a", 0.5, 0.1, 8, 9.0, true),
            s("b", 0.5, 0.1, 8, 3.0, true),
            s("a", 2.0, 0.1, 8, 4.0, true),
            s("b", 2.0, 0.1, 8, 4.0, true),
            s("c", 2.0, 0.1, 8, 4.0, true),
            // Only one valid model: unscored.
            s("a", 6.5, 0.1, 8, 2.0, true),
            s("b", 6.5, 0.1, 8, 5.0, false),
        ];
        let t = fractional_wins(&rows);
        assert_eq!(t.scored(), 2);
        assert_eq!(t.denominator, 6);
        assert_eq!(t.overall.units.values().sum::<u128>(), 2 * t.denominator);
        assert_eq!(t.overall.units["a"], 8);
        assert!((t.wins("a") - (1.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert!((t.wins("c") - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.by_k.len(), 2);
        assert_eq!(
            (t.by_k[0].0, t.by_k[0].1.get("a", t.denominator)),
            (0.5, 1.0)
        );
    }

    #[test]
    fn crossover_examples() {
        let grid = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
        let graph: BTreeSet<String> = ["g".to_string()].into();
        let build = |lead: &dyn Fn(f64) -> bool| {
            let mut rows = Vec::new();
            for &rho in &grid {
                for n in [8, 16] {
                    rows.push(s("g", 2.0, rho, n, if lead(rho) { 6.0 } else { 4.0 }, true));
                    rows.push(s("x", 2.0, rho, n, 5.0, true));
                }
            }
            rows
        };
        assert_eq!(
            crossover_threshold(&build(&|_| true), &graph)[0].rho_c,
            Some(0.05)
        );
        let never = crossover_threshold(&build(&|_| false), &graph);
        assert_eq!(never[0].rho_c, None);
        assert!(never[0].reason.is_some());
        let flip = crossover_threshold(&build(&|rho| rho >= 0.35), &graph);
        assert_eq!(flip[0].rho_c, Some(0.4));
        // An early lead that is lost again does not count.
        let blip = crossover_threshold(&build(&|rho| !(0.15..=0.35).contains(&rho)), &graph);
        assert_eq!(blip[0].rho_c, Some(0.4));
        let thin = crossover_threshold(
            &[
                s("g", 1.0, 0.1, 8, 1.0, true),
                s("x", 1.0, 0.1, 8, 0.5, true),
            ],
            &graph,
        );
        assert_eq!(thin[0].rho_c, None);
    }

    fn d(k: f64, rho: f64, ic: usize, lambda: f64, class: OrbitClass) -> DiagnosticsRecord {
        DiagnosticsRecord {
            k,
            rho,
            n: 8,
            ic_index: ic,
            lambda_max: lambda,
            sali_final: 0.0,
            orbit_class: class,
        }
    }

    #[test]
    fn regime_cells() {
        let diags = vec![
            d(2.0, 0.1, 0, 0.4, OrbitClass::Chaotic),
            d(2.0, 0.1, 1, 0.6, OrbitClass::Chaotic),
            d(0.5, 0.1, 0, 0.1, OrbitClass::Regular),
            d(0.5, 0.1, 1, 0.3, OrbitClass::Chaotic),
        ];
        let results = vec![
            s("a", 2.0, 0.1, 8, 3.0, true),
            s("b", 2.0, 0.1, 8, 3.0, true),
            s("c", 2.0, 0.1, 8, 1.0, true),
            s("a", 0.5, 0.1, 8, 9.0, true),
            s("b", 0.5, 0.1, 8, 7.5, true),
        ];
        let cells = regime_report(&diags, &results).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].k, 0.5);
        assert_eq!(
            (
                cells[0].chaos_fraction,
                cells[0].winner.as_str(),
                cells[0].margin
            ),
            (0.5, "a", Some(1.5))
        );
        assert!((cells[1].lyapunov_time - 2.0).abs() < 1e-12);
        assert_eq!(
            (
                cells[1].chaos_fraction,
                cells[1].winner.as_str(),
                cells[1].margin
            ),
            (1.0, "a|b", Some(0.0))
        );
        let bare = regime_report(&diags, &[]).unwrap();
        assert!(bare
            .iter()
            .all(|c| c.winner.is_empty() && c.margin.is_none()));
    }
}
