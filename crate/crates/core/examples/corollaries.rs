//! Corollary checkers on the free Dirichlet spectrum.

use std::f64::consts::PI;

use bessel_inverse::solver::Beta;
use bessel_inverse::uniqueness::corollary::{corollary_5_2, corollary_5_3, corollary_5_6, Paired};

fn main() -> bessel_inverse::Result<()> {
    let spectrum: Vec<f64> = (1..=40).map(|n| (n as f64 * PI).powi(2)).collect();
    let paired: Vec<Paired> = spectrum.iter().map(|&v| Paired { value: v, zeta: Some(0.5 / v) }).collect();

    let full = corollary_5_2(0.0, 1.0, Beta::Infinite, &spectrum, &paired, false)?;
    println!("5.2, a = 1, S = σ: {:?} margin {}", full.verdict, full.margin.abs());
    let thin: Vec<Paired> = paired.iter().skip(1).copied().collect();
    let thin = corollary_5_2(0.0, 1.0, Beta::Infinite, &spectrum, &thin, false)?;
    println!("5.2, a = 1, first dropped: {:?} margin {}", thin.verdict, thin.margin);

    let half: Vec<f64> = spectrum.iter().step_by(2).copied().collect();
    for a in [0.25, 0.5] {
        let r = corollary_5_3(0.0, a, Beta::Infinite, &spectrum, &half, false)?;
        println!("5.3, a = {a}, S = every second: {:?} margin {}", r.verdict, r.margin);
    }

    println!("5.6 budgets (β = ∞ | β = 0):");
    for ell in 0..4 {
        let row: Vec<String> = (0..3)
            .map(|k| {
                let inf = corollary_5_6(ell as f64, Beta::Infinite, k, 0, false).map(|r| r.budget.unwrap_or(0));
                let fin = corollary_5_6(ell as f64, Beta::Finite(0.0), k, 0, false).map(|r| r.budget.unwrap_or(0));
                format!("k={k}: {} | {}", inf.unwrap_or(-1), fin.unwrap_or(-1))
            })
            .collect();
        println!("  ℓ = {ell}: {}", row.join("   "));
    }
    Ok(())
}
