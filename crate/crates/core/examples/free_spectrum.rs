//! First eigenvalues of the unperturbed operator next to their closed forms.

use std::f64::consts::PI;

use bessel_inverse::potential::Potential;
use bessel_inverse::solver::Beta;
use bessel_inverse::spectrum::{locate_eigenvalues, SpectrumOptions};

fn main() -> bessel_inverse::Result<()> {
    let q = Potential::zero();
    let s = locate_eigenvalues(0.0, &q, Beta::Infinite, 8, &SpectrumOptions::default())?;
    println!("ℓ = 0, Dirichlet: λ_n vs (nπ)²");
    for p in &s.points {
        let exact = (p.index as f64 * PI).powi(2);
        println!("{:>3} {:>22.14} {:>10.2e}", p.index, p.lambda, (p.lambda - exact).abs() / exact);
    }
    for ell in [0.5, 1.0, 2.0] {
        let s = locate_eigenvalues(ell, &q, Beta::Finite(0.0), 4, &SpectrumOptions::default())?;
        println!("ℓ = {ell}, Neumann-type β = 0: {:?}", s.lambdas());
    }
    Ok(())
}
