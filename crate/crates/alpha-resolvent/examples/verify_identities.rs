//! Run the full identity battery against a generator of your choosing and
//! print the pass/fail table. Every check compares two independent
//! computations of the same object, so a bug in any single code path shows
//! up as a residual.

use alpha_resolvent::kernels::{Grid, SampledFunction};
use alpha_resolvent::resolvent::Generator;
use alpha_resolvent::semivariation::{NormKind, NormSpec};
use alpha_resolvent::verify::{run_verification, VerificationTask};
use nalgebra::{DMatrix, DVector};

fn main() {
    let generator =
        Generator::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -2.0])).unwrap();
    let grid = Grid::uniform(1.0, 128).unwrap();
    let f = SampledFunction::from_vector_fn(grid.clone(), 2, |t| {
        DVector::from_column_slice(&[(2.0 * std::f64::consts::PI * t).sin(), 0.0])
    })
    .unwrap();

    let task = VerificationTask {
        generator,
        alpha: 1.25,
        grid,
        x: DVector::from_column_slice(&[1.0, 0.0]),
        y: DVector::from_column_slice(&[0.0, 1.0]),
        f,
        norm: NormSpec::new(NormKind::Euclidean, 2).unwrap(),
        seed: 42,
    };

    let report = run_verification(&task).unwrap();
    for check in &report.checks {
        println!(
            "[{}] {:32} residual {:12.4e}  tolerance {:12.4e}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.tolerance,
        );
    }
    println!();
    println!("all passed: {}", report.passed);
    std::process::exit(if report.passed { 0 } else { 3 });
}
