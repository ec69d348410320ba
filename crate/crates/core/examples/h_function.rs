//! H for a pair that agrees on (½, 1): real zeros and the boundary
//! parameter β* under which each zero is a shared eigenvalue.

use bessel_inverse::hfield::{beta_star, h_profile, real_zeros};
use bessel_inverse::potential::Potential;
use bessel_inverse::solver::{Beta, SolverOptions};
use bessel_inverse::spectrum::{locate_eigenvalues, SpectrumOptions};
use num_complex::Complex64 as C64;

fn main() -> bessel_inverse::Result<()> {
    let o = SolverOptions::default();
    let q = Potential::piecewise(vec![0.25, 0.5, 0.75], vec![1.0, -0.5, 2.0, 0.0])?;
    let qh = Potential::piecewise(vec![0.25, 0.5, 0.75], vec![0.0, 0.5, 2.0, 0.0])?;

    let grid: Vec<C64> = (0..6).map(|i| C64::new(100.0 * i as f64, 0.0)).collect();
    for s in h_profile(0.0, &q, &qh, 0.5, &grid, true, &o)?.samples {
        println!("H({:>5}) = {:+.6e}   Ḣ = {:+.3e}", s.lambda.re, s.h.to_c64().re, s.hdot.unwrap_or(f64::NAN));
    }

    for z in real_zeros(0.0, &q, &qh, -20.0, 700.0, 300, &o)? {
        let b = beta_star(0.0, &q, z, &o)?;
        let n = locate_eigenvalues(0.0, &q, b, 12, &SpectrumOptions::default())?;
        let m = locate_eigenvalues(0.0, &qh, b, 12, &SpectrumOptions::default())?;
        let shared = n.points.iter().find(|p| (p.lambda - z).abs() < 1e-6 * z.abs().max(1.0));
        let twin = m.points.iter().find(|p| (p.lambda - z).abs() < 1e-6 * z.abs().max(1.0));
        let b = match b {
            Beta::Infinite => "∞".to_string(),
            Beta::Finite(b) => format!("{b:.4}"),
        };
        println!(
            "zero {z:>10.4}  β* = {b:>10}  shared: {}",
            matches!((shared, twin), (Some(_), Some(_)))
        );
    }
    Ok(())
}
