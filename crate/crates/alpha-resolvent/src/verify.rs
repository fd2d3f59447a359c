//! A battery of named numerical checks that exercise every identity the
//! library relies on, from the scalar special function up through the
//! variation bound. Each check reports its residual, the tolerance it was
//! held to, and a human-readable detail line; tolerances scale with the grid
//! so the battery stays meaningful away from the reference resolution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernels::{convolve_g, g_kernel, Grid, SampledFunction};
use crate::mlf::{mittag_leffler, MLParams};
use crate::resolvent::{
    defining_equation_residual, inf_norm, p_alpha, s_alpha, s_alpha_volterra, Generator,
    VOLTERRA_ENVELOPE,
};
use crate::semivariation::{NormSpec, Subdivision};
use crate::solver::{
    apf_factorized, apf_stieltjes, mild_solution_with_family, sv_lower_bound, SolveRequest,
};
use crate::{Error, Result};

/// Reference resolution the base tolerances are calibrated at.
const REFERENCE_INTERVALS: f64 = 1024.0;

/// One named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64, detail: String) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual.is_finite() && residual <= tolerance,
            detail,
        }
    }

    fn skipped(name: &str, detail: String) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            residual: 0.0,
            tolerance: 0.0,
            passed: true,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub alpha: f64,
    pub horizon: f64,
    pub intervals: usize,
    pub dim: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failed_names(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// What to verify: a generator, an order, a uniform grid, and the probe data
/// (initial values, forcing, norm) the solution-level checks run against.
#[derive(Clone, Debug)]
pub struct VerificationTask {
    pub generator: Generator,
    pub alpha: f64,
    pub grid: Grid,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub f: SampledFunction,
    pub norm: NormSpec,
    pub seed: u64,
}

fn scaled_tol(base: f64, intervals: usize, exponent: f64, floor: f64) -> f64 {
    (base * (REFERENCE_INTERVALS / intervals as f64).powf(exponent)).max(floor)
}

fn unit_direction(dim: usize) -> DVector<f64> {
    DVector::from_element(dim, 1.0 / (dim as f64).sqrt())
}

fn sup_vec_diff(a: &SampledFunction, b: &SampledFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max)
}

fn max_jump(f: &SampledFunction) -> f64 {
    f.values()
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm())
        .fold(0.0, f64::max)
}

/// Run the full battery. Requires a uniform grid whose interval count is a
/// multiple of 4 and at least 32.
pub fn run_verification(task: &VerificationTask) -> Result<VerifyReport> {
    let grid = &task.grid;
    let n = grid.len() - 1;
    if grid.step().is_none() {
        return Err(Error::Validation(
            "verification runs on uniform grids".into(),
        ));
    }
    if n % 4 != 0 || n < 32 {
        return Err(Error::Validation(format!(
            "verification needs a multiple of 4, at least 32 intervals (got {n})"
        )));
    }
    let dim = task.generator.dim();
    if task.x.len() != dim || task.y.len() != dim || task.f.dim() != dim || task.norm.dim != dim {
        return Err(Error::Validation(
            "verification task dimensions do not match the generator".into(),
        ));
    }
    if task.f.grid() != grid {
        return Err(Error::Validation(
            "the forcing must be sampled on the verification grid".into(),
        ));
    }
    let generator = &task.generator;
    let alpha = task.alpha;
    let r = grid.horizon();
    let reach = generator.norm_inf() * r.powf(alpha);

    // Probe data: fall back to unit probes when the task supplies zeros, so
    // the identity checks are never vacuous.
    let v = unit_direction(dim);
    let x_probe = if task.x.norm() > 0.0 { task.x.clone() } else { v.clone() };
    let f_probe = if task.f.sup_norm() > 0.0 {
        task.f.clone()
    } else {
        SampledFunction::from_vector_fn(grid.clone(), dim, |_| v.clone())?
    };

    let mut checks: Vec<CheckResult> = Vec::with_capacity(17);

    // 1. ml-classical-limits: exponential, cosine, and the shift recurrence.
    {
        let p11 = MLParams::new(1.0, 1.0).map_err(Error::from)?;
        let p21 = MLParams::new(2.0, 1.0).map_err(Error::from)?;
        let mut worst = 0.0f64;
        for k in 0..=20 {
            let xv = -5.0 + 0.5 * k as f64;
            let e = mittag_leffler(&p11, Complex64::new(xv, 0.0)).map_err(Error::from)?;
            worst = worst.max((e.re - xv.exp()).abs()).max(e.im.abs());
            let c = mittag_leffler(&p21, Complex64::new(-xv * xv, 0.0)).map_err(Error::from)?;
            worst = worst.max((c.re - xv.cos()).abs()).max(c.im.abs());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(task.seed ^ 0x6d6c5f6c696d);
        for _ in 0..10 {
            let a = 1.0 + rng.random::<f64>() * 0.999;
            let b = 0.5 + rng.random::<f64>() * 2.0;
            let zr = (rng.random::<f64>() - 0.5) * 14.0;
            let zi = (rng.random::<f64>() - 0.5) * 14.0;
            let z = Complex64::new(zr, zi);
            let lhs = mittag_leffler(&MLParams::new(a, b).map_err(Error::from)?, z)
                .map_err(Error::from)?;
            let shifted = mittag_leffler(&MLParams::new(a, b + a).map_err(Error::from)?, z)
                .map_err(Error::from)?;
            let rhs = Complex64::new(crate::special::recip_gamma(b), 0.0) + z * shifted;
            worst = worst.max((lhs - rhs).norm());
        }
        checks.push(CheckResult::new(
            "ml-classical-limits",
            worst,
            1e-10,
            "series vs exp/cos on [-5,5] and the beta-shift recurrence at 10 random points"
                .to_string(),
        ));
    }

    // 2. kernel-semigroup: composing fractional integrals of orders 0.6 and
    // 0.9 equals the order-1.5 integral.
    {
        let w = 2.0 * std::f64::consts::PI / r;
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| (w * t).sin())?;
        let once = convolve_g(0.9, &f)?;
        let composed = convolve_g(0.6, &once)?;
        let direct = convolve_g(1.5, &f)?;
        let residual = sup_vec_diff(&composed, &direct);
        checks.push(CheckResult::new(
            "kernel-semigroup",
            residual,
            scaled_tol(5e-5, n, 1.8, 1e-11),
            format!("g_0.6 * (g_0.9 * sin) vs g_1.5 * sin on {n} intervals"),
        ));
    }

    let s_ml = s_alpha(generator, alpha, grid)?;
    let p_ml = p_alpha(generator, alpha, grid)?;

    // 3. integrated-generator-identity: A(g_alpha * S) = S - I for the
    // matrix-function family.
    {
        let residual = defining_equation_residual(&s_ml, generator);
        checks.push(CheckResult::new(
            "integrated-generator-identity",
            residual,
            scaled_tol(1e-5, n, 2.0, 1e-10),
            "defining convolution equation residual of the matrix-function route".to_string(),
        ));
    }

    // 4. commutation: the family commutes with its generator.
    {
        let a = generator.entries();
        let scale = 1.0 + generator.norm_inf();
        let residual = s_ml
            .samples()
            .iter()
            .map(|s| inf_norm(&(a * s - s * a)) / scale)
            .fold(0.0, f64::max);
        checks.push(CheckResult::new(
            "commutation",
            residual,
            1e-8,
            "sup_t ||A S(t) - S(t) A|| / (1 + ||A||)".to_string(),
        ));
    }

    // 5-6. the implicit time-march route, where its stability envelope allows.
    if reach <= VOLTERRA_ENVELOPE {
        let s_volt = s_alpha_volterra(generator, alpha, grid)?;
        checks.push(CheckResult::new(
            "defining-volterra-equation",
            defining_equation_residual(&s_volt, generator),
            1e-9,
            "the march satisfies its own discrete convolution equation".to_string(),
        ));
        let residual = s_ml.sup_difference(&s_volt);
        checks.push(CheckResult::new(
            "oracle-route-agreement",
            residual,
            scaled_tol(1e-3, n, 1.0, 1e-11) * (reach / 4.0).max(1.0),
            "matrix-function route vs implicit march, sup over nodes".to_string(),
        ));
    } else {
        for name in ["defining-volterra-equation", "oracle-route-agreement"] {
            checks.push(CheckResult::skipped(
                name,
                format!(
                    "skipped: ||A|| r^alpha = {reach:.3} exceeds the march stability envelope \
                     {VOLTERRA_ENVELOPE}"
                ),
            ));
        }
    }

    // 7-10. the four convolution identities.
    {
        let window = (grid.nodes()[n / 4], grid.nodes()[n / 2]);
        let ids = crate::solver::family_identities(generator, alpha, grid, &x_probe, &f_probe, window)?;
        let tol = scaled_tol(1e-5, n, 2.0, 1e-10);
        checks.push(CheckResult::new(
            "cumulative-p-identity",
            ids.cumulative_p,
            tol,
            "A integral of s^{a-1} E_{a,a}(s^a A) x vs S(t)x - x".to_string(),
        ));
        checks.push(CheckResult::new(
            "windowed-p-identity",
            ids.windowed_p,
            tol,
            format!(
                "integral of s A P(r-s) x over [{:.4}, {:.4}] vs its boundary form",
                window.0, window.1
            ),
        ));
        checks.push(CheckResult::new(
            "weighted-kernel-identity",
            ids.weighted_kernel,
            tol,
            "g_a * (s A P(s) x) vs t P(t) x - a (g_a * S x)".to_string(),
        ));
        checks.push(CheckResult::new(
            "convolution-factorization",
            ids.convolution_factorization,
            tol,
            "g_a * ((A S) * f) vs (S * f) - (1 * f)".to_string(),
        ));
    }

    // 11-12. the Stieltjes representation of A(P * f) and its continuity.
    {
        let apf_f = apf_factorized(generator, &s_ml, &f_probe)?;
        let apf_s = apf_stieltjes(&s_ml, &f_probe)?;
        let route_floor = sup_vec_diff(&apf_f, &apf_s);
        checks.push(CheckResult::new(
            "stieltjes-representation",
            route_floor,
            scaled_tol(1e-3, n, 1.0, 1e-11),
            "factorized A(P * f) vs the increment sum against dS".to_string(),
        ));

        let s_half = s_ml.subsample_half()?;
        let f_half = SampledFunction::new(
            s_half.grid().clone(),
            f_probe.values().iter().step_by(2).cloned().collect(),
        )?;
        let apf_half = apf_factorized(generator, &s_half, &f_half)?;
        let jump_fine = max_jump(&apf_f);
        let jump_coarse = max_jump(&apf_half);
        let allowance = (0.75 * jump_coarse).max(10.0 * route_floor).max(1e-12);
        checks.push(CheckResult::new(
            "stieltjes-continuity",
            jump_fine,
            allowance,
            format!(
                "largest node-to-node jump of A(P * f): {jump_fine:.3e} fine vs \
                 {jump_coarse:.3e} at half resolution, route floor {route_floor:.3e}"
            ),
        ));
    }

    // 13. mild-solution-closed-form: with A = 0 and constant forcing the
    // whole quadrature chain is exact, so the solver must hit
    // x + t y + g_{alpha+1}(t) c to roundoff.
    {
        let zero_gen = Generator::new(DMatrix::<f64>::zeros(dim, dim))?;
        let fc = SampledFunction::from_vector_fn(grid.clone(), dim, |_| v.clone())?;
        let req = SolveRequest::new(
            zero_gen.clone(),
            alpha,
            task.x.clone(),
            task.y.clone(),
            fc,
            task.norm,
        )?;
        let s_zero = s_alpha(&zero_gen, alpha, grid)?;
        let bundle = mild_solution_with_family(&req, &s_zero)?;
        let mut residual = 0.0f64;
        for (j, &t) in grid.nodes().iter().enumerate() {
            let g = if t > 0.0 { g_kernel(alpha + 1.0, t)? } else { 0.0 };
            let want = &task.x + &task.y * t + &v * g;
            residual = residual.max((bundle.u.value(j) - want).norm());
        }
        let scale = 1.0 + task.x.norm() + task.y.norm() + r.powf(alpha + 1.0);
        checks.push(CheckResult::new(
            "mild-solution-closed-form",
            residual / scale,
            1e-8,
            "solver output vs the exact solution for a degenerate generator".to_string(),
        ));
    }

    // 14. scaled-forcing-identity: the solution map is linear in f.
    {
        let zeros = DVector::<f64>::zeros(dim);
        let f_scaled = SampledFunction::new(
            grid.clone(),
            f_probe.values().iter().map(|w| w * 2.5).collect(),
        )?;
        let req1 = SolveRequest::new(
            generator.clone(),
            alpha,
            zeros.clone(),
            zeros.clone(),
            f_probe.clone(),
            task.norm,
        )?;
        let req2 = SolveRequest::new(generator.clone(), alpha, zeros.clone(), zeros, f_scaled, task.norm)?;
        let u1 = mild_solution_with_family(&req1, &s_ml)?.u;
        let u2 = mild_solution_with_family(&req2, &s_ml)?.u;
        let residual = u1
            .values()
            .iter()
            .zip(u2.values())
            .map(|(a, b)| (b - a * 2.5).norm())
            .fold(0.0, f64::max)
            / (1.0 + u1.sup_norm());
        checks.push(CheckResult::new(
            "scaled-forcing-identity",
            residual,
            1e-10,
            "solving with 2.5 f must scale the zero-data solution by 2.5".to_string(),
        ));
    }

    // 15-16. the variation lower bound with shrinking ramps.
    {
        let d = Subdivision::uniform(0.0, r, 4)?;
        let xs: Vec<DVector<f64>> = (0..5)
            .map(|i| if i % 2 == 0 { v.clone() } else { -&v })
            .collect();
        let gap = r / 4.0;
        let report = sv_lower_bound(
            generator,
            alpha,
            r,
            &d,
            &[gap / 4.0, gap / 8.0, gap / 16.0],
            &xs,
            n,
        )?;
        let (worst_gap, slack_at_worst) = report
            .rows
            .iter()
            .map(|row| {
                (
                    report.lhs - row.bound,
                    (2.0 * row.identity_residual).max(1e-8),
                )
            })
            .fold((f64::NEG_INFINITY, 0.0), |acc, cur| {
                if cur.0 > acc.0 { cur } else { acc }
            });
        let mut bound_check = CheckResult::new(
            "variation-bound-inequality",
            worst_gap,
            slack_at_worst,
            format!(
                "||sum dS x_i|| = {:.6e} vs ||A(P * f_ramp)(r)|| + correction at 3 ramp widths",
                report.lhs
            ),
        );
        bound_check.passed = report.all_ok;
        checks.push(bound_check);

        let corr0 = report.rows[0].correction;
        let passed_decay = report.corrections_nonincreasing
            && (report.decay_ratio <= 0.5 || corr0 < 1e-12);
        let mut decay_check = CheckResult::new(
            "ramp-vanishing-correction",
            report.decay_ratio,
            0.5,
            format!(
                "corrections {:?} must shrink as the ramps narrow",
                report.rows.iter().map(|row| row.correction).collect::<Vec<_>>()
            ),
        );
        decay_check.passed = passed_decay;
        checks.push(decay_check);
    }

    // 17. time-weighted-generator-bound: sup_t ||t A P(t)|| is finite and
    // already resolved on the half grid.
    {
        let a = generator.entries();
        let sup_of = |fam: &crate::resolvent::OperatorFamily| -> f64 {
            fam.grid()
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, &t)| task.norm.induced_matrix_norm(&((a * fam.sample(j)) * t)))
                .fold(0.0, f64::max)
        };
        let sup_fine = sup_of(&p_ml);
        let sup_half = sup_of(&p_ml.subsample_half()?);
        let residual = if sup_fine > 1e-14 {
            (sup_fine - sup_half) / sup_fine
        } else {
            0.0
        };
        checks.push(CheckResult::new(
            "time-weighted-generator-bound",
            residual,
            0.01,
            format!("sup ||t A P(t)|| = {sup_fine:.9e} fine vs {sup_half:.9e} at half resolution"),
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        alpha,
        horizon: r,
        intervals: n,
        dim,
        checks,
        passed,
    })
}

/// Convenience: the battery on the standard scalar decay case.
pub fn default_task(n: usize, seed: u64) -> Result<VerificationTask> {
    let grid = Grid::uniform(1.0, n)?;
    let f = SampledFunction::from_scalar_fn(grid.clone(), |t| {
        (2.0 * std::f64::consts::PI * t).sin()
    })?;
    Ok(VerificationTask {
        generator: Generator::new(DMatrix::from_element(1, 1, -1.0))?,
        alpha: 1.5,
        grid,
        x: DVector::from_element(1, 1.0),
        y: DVector::zeros(1),
        f,
        norm: NormSpec::new(crate::semivariation::NormKind::Euclidean, 1)?,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn battery_passes_on_scalar_decay() {
        let task = default_task(128, 7).unwrap();
        let report = run_verification(&task).unwrap();
        assert_eq!(report.checks.len(), 17);
        assert!(report.passed, "failed: {:?}", report.failed_names());
    }

    #[test]
    fn battery_passes_on_planar_rotation() {
        let grid = Grid::uniform(1.0, 128).unwrap();
        let f = SampledFunction::from_vector_fn(grid.clone(), 2, |t| {
            DVector::from_vec(vec![t, 1.0 - t])
        })
        .unwrap();
        let task = VerificationTask {
            generator: Generator::new(dmatrix![0.0, 1.0; -2.0, -2.0]).unwrap(),
            alpha: 1.25,
            grid,
            x: DVector::from_vec(vec![1.0, 0.0]),
            y: DVector::from_vec(vec![0.0, 1.0]),
            f,
            norm: NormSpec::new(crate::semivariation::NormKind::Euclidean, 2).unwrap(),
            seed: 11,
        };
        let report = run_verification(&task).unwrap();
        assert!(report.passed, "failed: {:?}", report.failed_names());
    }

    #[test]
    fn stiff_diagonal_skips_the_march() {
        let grid = Grid::uniform(1.0, 64).unwrap();
        let f = SampledFunction::zeros(grid.clone(), 2);
        let task = VerificationTask {
            generator: Generator::new(dmatrix![-1.0, 0.0; 0.0, -10.0]).unwrap(),
            alpha: 1.5,
            grid,
            x: DVector::zeros(2),
            y: DVector::zeros(2),
            f,
            norm: NormSpec::new(crate::semivariation::NormKind::Euclidean, 2).unwrap(),
            seed: 3,
        };
        let report = run_verification(&task).unwrap();
        let march = report
            .checks
            .iter()
            .find(|c| c.name == "defining-volterra-equation")
            .unwrap();
        assert!(march.detail.starts_with("skipped"));
        assert!(report.passed, "failed: {:?}", report.failed_names());
    }

    #[test]
    fn verification_validates_its_grid() {
        let mut task = default_task(128, 0).unwrap();
        assert!(run_verification(&task).is_ok());
        task.grid = Grid::uniform(1.0, 30).unwrap();
        assert!(run_verification(&task).is_err());
        let graded = Grid::graded(1.0, 64, 2.0).unwrap();
        task.grid = graded.clone();
        task.f = SampledFunction::zeros(graded, 1);
        assert!(run_verification(&task).is_err());
    }
}
