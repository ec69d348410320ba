//! Eigenvalues with norming constants ζ, multipliers κ and τ = ∫φ².

use bessel_inverse::potential::Potential;
use bessel_inverse::solver::{Beta, SolverOptions};
use bessel_inverse::spectrum::{derivative_identity_residual, locate_eigenvalues, SpectrumOptions};

fn main() -> bessel_inverse::Result<()> {
    let q = Potential::piecewise(vec![0.25, 0.5, 0.75], vec![1.0, -0.5, 2.0, 0.0])?;
    let opts = SpectrumOptions { norming: true, ..Default::default() };
    let ell = 1.0;
    let s = locate_eigenvalues(ell, &q, Beta::Infinite, 6, &opts)?;
    print!("{}", s.to_csv());
    for p in &s.points {
        let r = derivative_identity_residual(p, ell, &q, &SolverOptions::default())?;
        println!("n = {}: |Δ̇ + τκ|/|Δ̇| = {r:.1e}", p.index);
    }
    Ok(())
}
