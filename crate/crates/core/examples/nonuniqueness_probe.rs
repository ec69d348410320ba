//! Two eigenvalues for four unknown cells: a second potential at
//! distance ≥ ρ fits the same data. With full data the probe comes up empty.

use bessel_inverse::inverse::{nonuniqueness_probe, ProbeOptions, ReconstructionProblem};
use bessel_inverse::potential::{BasisKind, Potential};
use bessel_inverse::solver::Beta;
use bessel_inverse::spectrum::{locate_eigenvalues, SpectrumOptions};
use bessel_inverse::uniqueness::{EigenRecord, MixedDataset};

fn main() -> bessel_inverse::Result<()> {
    let truth = Potential::cells(1.0, &[0.5, -1.0, 1.0, 0.0], 0.0)?;
    let opts = SpectrumOptions { norming: true, ..Default::default() };
    let pts = locate_eigenvalues(0.0, &truth, Beta::Infinite, 8, &opts)?.points;
    let probe = |recs: Vec<EigenRecord>| -> bessel_inverse::Result<()> {
        let p = ReconstructionProblem::new(0.0, MixedDataset::new(0.0, 1.0, recs)?, Potential::zero(), BasisKind::Cells, 4)
            .with_truth(truth.clone());
        let r = nonuniqueness_probe(&p, &ProbeOptions::default())?;
        println!("  {:?}: distance {:.3}, max residual {:.1e}, best of start {}", r.outcome, r.distance, r.max_residual, r.attempts);
        let cells: Vec<String> = (0..4).map(|i| format!("{:+.3}", r.candidate.value((i as f64 + 0.5) / 4.0))).collect();
        println!("  candidate cells [{}]", cells.join(", "));
        Ok(())
    };
    println!("eigenvalues 2 and 4 only:");
    probe(pts.iter().filter(|p| p.index % 2 == 0 && p.index <= 4).map(|p| EigenRecord::new(p.lambda, Beta::Infinite).with_index(p.index)).collect())?;
    println!("all eigenvalues and norming constants:");
    probe(
        pts.iter()
            .map(|p| EigenRecord::new(p.lambda, Beta::Infinite).with_index(p.index).with_zeta(p.zeta.unwrap_or(f64::NAN)))
            .collect(),
    )?;
    Ok(())
}
