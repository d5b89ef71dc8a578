//! Prints lambda_max and SALI chaos fraction per (K, rho) at N = 8.

use csmbench::dynamics::{sample_ic, SystemParams};
use csmbench::indicators::{diagnose_orbit, regime_stats, DiagnosticsConfig};
use csmbench::rng::ic_seed;

fn main() -> csmbench::Result<()> {
    let rhos = [0.05, 0.075, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50];
    let ics: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let config = DiagnosticsConfig::default();
    println!("K\trho\tmean_lambda\tmin\tmax\tchaos_fraction");
    for k in [0.5, 0.97, 2.0, 6.5] {
        for rho in rhos {
            let params = SystemParams::from_ratio(k, rho, 8)?;
            let diags = (0..ics)
                .map(|i| {
                    let seed = ic_seed(2024, k, rho, 8, i);
                    diagnose_orbit(&sample_ic(seed, 8)?, &params, &config, seed)
                })
                .collect::<csmbench::Result<Vec<_>>>()?;
            let s = regime_stats(&diags)?;
            println!(
                "{k}\t{rho}\t{:.3}\t{:.3}\t{:.3}\t{:.2}",
                s.mean_lambda_max, s.lambda_max_range.0, s.lambda_max_range.1, s.chaos_fraction
            );
        }
    }
    Ok(())
}
