//! Function system built from mixed data and its conditioning on (0, a).

use std::f64::consts::PI;

use bessel_inverse::potential::Exponent;
use bessel_inverse::solver::Beta;
use bessel_inverse::uniqueness::system::gram_trend;
use bessel_inverse::uniqueness::{build_system, closedness_diagnostic, MixedDataset};

fn main() -> bessel_inverse::Result<()> {
    let spectrum: Vec<f64> = (1..=30).map(|n| (n as f64 * PI).powi(2)).collect();
    let data = MixedDataset::from_values(0.0, 0.5, Beta::Infinite, &spectrum, &spectrum[..15])?;
    let system = build_system(&data)?;
    for line in system.describe().iter().take(6) {
        println!("  {line}");
    }
    println!("  … {} members", system.len());
    let d = closedness_diagnostic(&system, 0.5, Exponent::new(2.0)?, system.len())?;
    println!("Gram σ ∈ [{:.2e}, {:.2e}]", d.gram_sigma_min, d.gram_sigma_max);
    for (w, r) in d.probe_residuals.iter().take(6) {
        println!("  probe cos({w:.3}x): relative residual {r:.2e}");
    }
    for (m, s) in gram_trend(&system, 0.5, &[10, 20, 30, system.len()])? {
        println!("  first {m:>2} members: σ_min {s:.3e}");
    }
    Ok(())
}
