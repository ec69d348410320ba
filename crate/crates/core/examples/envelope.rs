//! Growth of H off the real axis: the fitted envelope against samples, and
//! the decay rate gained by one more derivative at a.

use bessel_inverse::hfield::{envelope_check, imaginary_decay_exponent};
use bessel_inverse::potential::{Exponent, Potential};
use bessel_inverse::solver::SolverOptions;
use bessel_inverse::SmoothnessTag;
use num_complex::Complex64 as C64;

fn main() -> bessel_inverse::Result<()> {
    let o = SolverOptions::default();
    let a = 0.5;
    let base = Potential::piecewise(vec![0.3, 0.7], vec![0.5, -1.0, 2.0])?;
    let bump = base.sum(&Potential::polynomial(a, vec![0.0, 4.0 / a, -4.0 / (a * a)], Potential::zero())?);
    let tag = SmoothnessTag { k: 0, p: Exponent::INFINITY, delta0: 0.25, vanishing: 0 };
    let zs: Vec<C64> = (0..12).map(|j| C64::new(5.0, 20f64.powf(j as f64 / 11.0))).collect();
    let rep = envelope_check(0.0, &bump, &base, a, &tag, &zs, 0.01, &o)?;
    println!("envelope C = {:.3e}, δ = {}, holds {}", rep.c, rep.delta, rep.holds);
    for s in &rep.samples {
        println!("  z = {:>16.3}  normalized {:.4e}  envelope {:.4e}", s.z, s.normalized, s.envelope);
    }

    let jump = base.sum(&Potential::piecewise(vec![a], vec![1.0, 0.0])?);
    let kink = base.sum(&Potential::polynomial(a, vec![a, -1.0], Potential::zero())?);
    let d0 = imaginary_decay_exponent(0.0, &jump, &base, a, 10.0, 80.0, 24, &o)?;
    let d1 = imaginary_decay_exponent(0.0, &kink, &base, a, 10.0, 80.0, 24, &o)?;
    println!("decay in Im z: jump {:.3}, kink {:.3}", d0.slope, d1.slope);
    Ok(())
}
