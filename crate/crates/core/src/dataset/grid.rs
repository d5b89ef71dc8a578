use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::SystemParams;
use crate::error::{Error, Result};

pub const DEFAULT_K_VALUES: [f64; 4] = [0.5, 0.97, 2.0, 6.5];
pub const DEFAULT_RHO_VALUES: [f64; 8] = [0.05, 0.075, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50];
pub const DEFAULT_N_VALUES: [usize; 3] = [8, 16, 32];
pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

/// The controlled `(K, rho, N)` design space.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    pub k_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub n_values: Vec<usize>,
    pub ics_per_instance: usize,
    pub master_seed: u64,
}

impl DesignGrid {
    /// Full benchmark: 96 instances with 100 ICs each.
    pub fn full() -> Self {
        DesignGrid {
            k_values: DEFAULT_K_VALUES.to_vec(),
            rho_values: DEFAULT_RHO_VALUES.to_vec(),
            n_values: DEFAULT_N_VALUES.to_vec(),
            ics_per_instance: 100,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    /// Same grid with 20 ICs per instance.
    pub fn desk() -> Self {
        DesignGrid {
            ics_per_instance: 20,
            ..Self::full()
        }
    }

    pub fn instance_count(&self) -> usize {
        self.k_values.len() * self.rho_values.len() * self.n_values.len()
    }
}

impl Default for DesignGrid {
    fn default() -> Self {
        Self::desk()
    }
}

/// Identifies one system instance. `epsilon` is derived as `rho * K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceKey {
    #[serde(rename = "K")]
    pub k: f64,
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl InstanceKey {
    pub fn new(k: f64, rho: f64, n: usize) -> Self {
        InstanceKey { k, rho, n }
    }

    pub fn params(&self) -> Result<SystemParams> {
        SystemParams::from_ratio(self.k, self.rho, self.n)
    }

    pub fn epsilon(&self) -> f64 {
        self.rho * self.k
    }

    /// HDF5 group path, e.g. `/K2.0/rho0.1/N8`.
    pub fn group_path(&self) -> String {
        format!("/K{:?}/rho{:?}/N{}", self.k, self.rho, self.n)
    }

    /// Total order: K, then rho, then N.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.k
            .total_cmp(&other.k)
            .then(self.rho.total_cmp(&other.rho))
            .then(self.n.cmp(&other.n))
    }

    pub fn same(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }

    /// Integer key whose lexicographic order agrees with [`Self::cmp_key`],
    /// for use in ordered maps.
    pub fn sort_bits(&self) -> [u64; 3] {
        fn ordered(x: f64) -> u64 {
            let b = x.to_bits();
            if b >> 63 == 1 {
                !b
            } else {
                b | 1 << 63
            }
        }
        [ordered(self.k), ordered(self.rho), self.n as u64]
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={:?},rho={:?},N={}", self.k, self.rho, self.n)
    }
}

/// Cartesian product in K-major, then rho, then N order.
pub fn build_grid(grid: &DesignGrid) -> Result<Vec<InstanceKey>> {
    if grid.k_values.is_empty() {
        return Err(Error::Empty("K_values"));
    }
    if grid.rho_values.is_empty() {
        return Err(Error::Empty("rho_values"));
    }
    if grid.n_values.is_empty() {
        return Err(Error::Empty("N_values"));
    }
    let mut keys = Vec::with_capacity(grid.instance_count());
    for &k in &grid.k_values {
        for &rho in &grid.rho_values {
            for &n in &grid.n_values {
                let key = InstanceKey::new(k, rho, n);
                key.params()?;
                keys.push(key);
            }
        }
    }
    Ok(keys)
}

/// Instance selector, e.g. `K=2.0,rho=*,N=8`. Missing fields and `*` match
/// anything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstanceFilter {
    pub k: Option<f64>,
    pub rho: Option<f64>,
    pub n: Option<usize>,
}

impl InstanceFilter {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut filter = InstanceFilter::default();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(part, "expected name=value"))?;
            let (name, value) = (name.trim(), value.trim());
            if value == "*" {
                continue;
            }
            let bad = |e: &dyn fmt::Display| Error::config(name, format!("`{value}`: {e}"));
            match name {
                "K" => filter.k = Some(value.parse().map_err(|e| bad(&e))?),
                "rho" => filter.rho = Some(value.parse().map_err(|e| bad(&e))?),
                "N" => filter.n = Some(value.parse().map_err(|e| bad(&e))?),
                other => return Err(Error::config(other, "unknown filter field (use K, rho, N)")),
            }
        }
        Ok(filter)
    }

    pub fn matches(&self, key: &InstanceKey) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        self.k.is_none_or(|k| close(k, key.k))
            && self.rho.is_none_or(|r| close(r, key.rho))
            && self.n.is_none_or(|n| n == key.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_96_instances() {
        let keys = build_grid(&DesignGrid::full()).unwrap();
        assert_eq!(keys.len(), 96);
        assert_eq!(keys.len() * DesignGrid::full().ics_per_instance, 9600);
        assert_eq!(keys[0], InstanceKey::new(0.5, 0.05, 8));
        assert_eq!(keys[1], InstanceKey::new(0.5, 0.05, 16));
        assert_eq!(keys[3], InstanceKey::new(0.5, 0.075, 8));
        assert_eq!(keys[95], InstanceKey::new(6.5, 0.5, 32));
        assert!(keys
            .windows(2)
            .all(|w| w[0].cmp_key(&w[1]) == Ordering::Less));
    }

    #[test]
    fn single_value_grid() {
        let grid = DesignGrid {
            k_values: vec![2.0],
            rho_values: vec![0.10],
            n_values: vec![8],
            ics_per_instance: 1,
            master_seed: 0,
        };
        let keys = build_grid(&grid).unwrap();
        assert_eq!(keys.len(), 1);
        assert!((keys[0].params().unwrap().epsilon - 0.20).abs() < 1e-15);
        assert!(build_grid(&DesignGrid {
            n_values: vec![],
            ..grid
        })
        .is_err());
    }

    #[test]
    fn group_path_format() {
        assert_eq!(
            InstanceKey::new(2.0, 0.1, 8).group_path(),
            "/K2.0/rho0.1/N8"
        );
        assert_eq!(
            InstanceKey::new(0.97, 0.075, 32).group_path(),
            "/K0.97/rho0.075/N32"
        );
    }

    #[test]
    fn filters() {
        let f = InstanceFilter::parse("K=2.0,rho=*,N=8").unwrap();
        assert!(f.matches(&InstanceKey::new(2.0, 0.3, 8)));
        assert!(!f.matches(&InstanceKey::new(2.0, 0.3, 16)));
        assert!(!f.matches(&InstanceKey::new(6.5, 0.3, 8)));
        assert!(InstanceFilter::parse("")
            .unwrap()
            .matches(&InstanceKey::new(1.0, 1.0, 3)));
        assert!(InstanceFilter::parse("Q=1").is_err());
        assert!(InstanceFilter::parse("K=abc").is_err());
        assert!(InstanceFilter::parse("K").is_err());
    }

    proptest::proptest! {
        #[test]
        fn sort_bits_agree_with_cmp_key(
            a in (-10.0f64..10.0, -1.0f64..1.0, 3usize..64),
            b in (-10.0f64..10.0, -1.0f64..1.0, 3usize..64),
        ) {
            let (x, y) = (InstanceKey::new(a.0, a.1, a.2), InstanceKey::new(b.0, b.1, b.2));
            proptest::prop_assert_eq!(x.sort_bits().cmp(&y.sort_bits()), x.cmp_key(&y));
        }
    }
}
