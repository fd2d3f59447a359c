//! Evaluate the two-parameter Mittag-Leffler function at scalar and matrix
//! arguments and check it against the classical special cases.

use alpha_resolvent::mlf::{ml_matrix, mittag_leffler, MLParams};
use alpha_resolvent::resolvent::Generator;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn main() {
    // alpha = beta = 1 collapses the series to the exponential.
    let p = MLParams::new(1.0, 1.0).unwrap();
    let e = mittag_leffler(&p, Complex64::new(1.0, 0.0)).unwrap();
    println!("E_{{1,1}}(1)      = {:.16}   (exp(1) = {:.16})", e.re, 1f64.exp());

    // alpha = 2, beta = 1 at -x^2 gives cos(x).
    let p = MLParams::new(2.0, 1.0).unwrap();
    let c = mittag_leffler(&p, Complex64::new(-4.0, 0.0)).unwrap();
    println!("E_{{2,1}}(-4)     = {:.16}   (cos(2) = {:.16})", c.re, 2f64.cos());

    // A genuinely fractional order, complex argument.
    let p = MLParams::new(1.5, 1.0).unwrap();
    let v = mittag_leffler(&p, Complex64::new(-1.0, 2.0)).unwrap();
    println!("E_{{1.5,1}}(-1+2i) = {:.16} + {:.16}i", v.re, v.im);

    // The beta-shift recurrence ties neighbouring parameters together:
    // E_{a,b}(z) = 1/Gamma(b) + z E_{a,b+a}(z).
    let z = Complex64::new(-3.0, 1.5);
    let lhs = mittag_leffler(&MLParams::new(1.5, 1.0).unwrap(), z).unwrap();
    let shifted = mittag_leffler(&MLParams::new(1.5, 2.5).unwrap(), z).unwrap();
    let rhs = Complex64::new(1.0, 0.0) + z * shifted;
    println!("recurrence residual at z = -3+1.5i: {:.3e}", (lhs - rhs).norm());

    // Matrix argument. For this 2x2 nilpotent the series terminates after
    // two terms, so the result is exact up to rounding.
    let a = Generator::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
    let p = MLParams::new(1.5, 1.0).unwrap();
    let m = ml_matrix(&p, &a).unwrap();
    println!("E_{{1.5,1}}([[0,1],[0,0]]) =");
    for i in 0..2 {
        println!("    [{:.16}, {:.16}]", m[(i, 0)], m[(i, 1)]);
    }
}
