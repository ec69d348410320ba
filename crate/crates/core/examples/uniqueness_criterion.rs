//! Counting criterion for mixed data: all eigenvalues with every norming
//! constant against the same eigenvalues with only half of them.

use std::f64::consts::PI;

use bessel_inverse::solver::Beta;
use bessel_inverse::uniqueness::counting::default_r_grid;
use bessel_inverse::uniqueness::{criterion_margin, MixedDataset};

fn main() -> bessel_inverse::Result<()> {
    let spectrum: Vec<f64> = (1..=60).map(|n| (n as f64 * PI).powi(2)).collect();
    let every_second: Vec<f64> = spectrum.iter().step_by(2).copied().collect();
    for (label, a, s) in [("S = Λ, a = 1", 1.0, &spectrum), ("S = every second, a = 1", 1.0, &every_second), ("S = every second, a = ½", 0.5, &every_second)] {
        let data = MixedDataset::from_values(0.0, a, Beta::Infinite, &spectrum, s)?;
        let rep = criterion_margin(&data, &default_r_grid(&data, 400))?;
        println!(
            "{label:<26} verdict {:?}, min margin {:.3}, envelope slope {:.4}",
            rep.verdict,
            rep.min_margin,
            rep.trend.map_or(f64::NAN, |t| t.slope)
        );
    }
    Ok(())
}
