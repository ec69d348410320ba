//! λ^{ℓ+1} H(λ) tends to ½∫(q - q̂); a mean-zero difference gives 0.

use bessel_inverse::hfield::mean_perturbation_limit;
use bessel_inverse::potential::Potential;
use bessel_inverse::solver::SolverOptions;

fn main() -> bessel_inverse::Result<()> {
    let base = Potential::piecewise(vec![0.3, 0.7], vec![0.5, -1.0, 2.0])?;
    let grid: Vec<f64> = [25.0f64, 50.0, 100.0, 200.0].iter().map(|z| z * z).collect();
    let cases = [
        ("1 on (0, 0.4)", base.sum(&Potential::piecewise(vec![0.4], vec![1.0, 0.0])?), 0.2),
        ("sign(x - ¼) on (0, ½)", base.sum(&Potential::piecewise(vec![0.25, 0.5], vec![-1.0, 1.0, 0.0])?), 0.0),
    ];
    for (label, q, expected) in cases {
        for ell in [0u32, 1] {
            let m = mean_perturbation_limit(ell, &q, &base, &grid, 1e-4, &SolverOptions::default())?;
            println!(
                "q - q̂ = {label:<22} ℓ = {ell}: limit {:+.6} (expected {expected}), converged {}",
                m.value, m.converged
            );
        }
    }
    Ok(())
}
