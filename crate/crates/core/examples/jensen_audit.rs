//! Jensen identity on a rational function, then the counting inequality
//! for H of a pair with data at its real zeros.

use bessel_inverse::hfield::{beta_star, real_zeros};
use bessel_inverse::potential::Potential;
use bessel_inverse::solver::SolverOptions;
use bessel_inverse::uniqueness::jensen::jensen_identity;
use bessel_inverse::uniqueness::{jensen_audit_pair, EigenRecord, MixedDataset};
use num_complex::Complex64 as C64;

fn main() -> bessel_inverse::Result<()> {
    let zeros = [C64::new(2.0, 0.0), C64::new(-1.0, 3.0)];
    let poles = [C64::new(0.0, 5.0)];
    let g = |l: C64| Ok(((l - zeros[0]) * (l - zeros[1]) / (l - poles[0])).norm().ln());
    for r in [1.0, 2.0, 3.0] {
        let j = jensen_identity(g, &zeros, &poles, r)?;
        println!("r = {r}: counting {:+.12} circle {:+.12}", j.counting_difference, j.circle_side);
    }

    let o = SolverOptions::default();
    let q = Potential::piecewise(vec![0.25, 0.5, 0.75], vec![1.0, -0.5, 2.0, 0.0])?;
    let qh = Potential::piecewise(vec![0.25, 0.5, 0.75], vec![0.0, 0.5, 2.0, 0.0])?;
    let recs = real_zeros(0.0, &q, &qh, -20.0, 1500.0, 600, &o)?
        .into_iter()
        .map(|z| Ok(EigenRecord::new(z, beta_star(0.0, &q, z, &o)?)))
        .collect::<bessel_inverse::Result<Vec<_>>>()?;
    let data = MixedDataset::new(0.0, 0.5, recs)?;
    let audit = jensen_audit_pair(0.0, &q, &qh, &data, &[5.0, 10.0, 20.0, 35.0], &o)?;
    for row in &audit.rows {
        println!(
            "r = {:>4}: ∫m/t = {:.4} ≤ circle {:+.4} + |ln|H(0)|| {:.4}  (slack {:.4})",
            row.r, row.counting_integral, row.circle_average, row.origin_term, row.slack
        );
    }
    println!("all hold: {}", audit.all_hold());
    Ok(())
}
