//! Recover a 4-cell potential from 8 eigenvalues and 8 norming constants.
//!
//! Pass a path to also save the problem as JSON for `bessinv reconstruct`.

use bessel_inverse::inverse::{reconstruct, ReconstructionProblem};
use bessel_inverse::potential::{BasisKind, Potential};
use bessel_inverse::solver::Beta;
use bessel_inverse::spectrum::{locate_eigenvalues, SpectrumOptions};
use bessel_inverse::uniqueness::{EigenRecord, MixedDataset};

fn main() -> bessel_inverse::Result<()> {
    let truth = Potential::cells(1.0, &[0.5, -1.0, 1.5, 0.0], 0.0)?;
    let opts = SpectrumOptions { norming: true, ..Default::default() };
    let recs: Vec<EigenRecord> = locate_eigenvalues(0.0, &truth, Beta::Infinite, 8, &opts)?
        .points
        .iter()
        .map(|p| EigenRecord::new(p.lambda, Beta::Infinite).with_index(p.index).with_zeta(p.zeta.unwrap_or(f64::NAN)))
        .collect();
    let problem = ReconstructionProblem::new(0.0, MixedDataset::new(0.0, 1.0, recs)?, Potential::zero(), BasisKind::Cells, 4)
        .with_truth(truth);
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, problem.to_json()?)?;
        println!("problem written to {path}");
    }

    let r = reconstruct(&problem)?;
    for t in &r.trace {
        println!(
            "it {:>2} reg {:.0e} cost {:.3e} step {:.2e}{}",
            t.iteration,
            t.regularization,
            t.cost,
            t.step_norm,
            if t.accepted { "" } else { " (rejected)" }
        );
    }
    println!("coefficients {:?}", r.coeffs);
    println!("converged {} max residual {:.1e} L² error {:.1e}", r.converged, r.max_residual, r.l2_error.unwrap_or(f64::NAN));
    Ok(())
}
