//! The `alphares` command line: evaluate E_{α,β}, build resolvent families,
//! solve Cauchy problems, estimate semivariation, run the verification
//! battery, and estimate the a priori regularity constant.
//!
//! Every subcommand accepts a scenario file (`--scenario problem.json`) plus
//! flag overrides; without one, a bundled scalar default (A = [-1], α = 1.5,
//! r = 1, N = 512) is used. Reports land in the directory named by `--out`
//! or the `ALPHARES_OUT` environment variable. Exit codes: 0 success, 2
//! invalid input, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::io::{
    self, family_report, ml_report_json, regularity_report_json, solution_csv, solve_report,
    sv_report, verify_report_json, GridKind, Scenario,
};
use crate::kernels::Grid;
use crate::mlf::{mittag_leffler, MLParams};
use crate::resolvent::{
    defining_equation_residual, p_alpha, s_alpha, s_alpha_volterra, VOLTERRA_ENVELOPE,
};
use crate::semivariation::{sv_estimate, NormKind, RefinementSchedule};
use crate::solver::{
    equivalence_diagnostics, mild_solution, regularity_constant, standard_probes,
    EquivalenceConfig, SolveRequest,
};
use crate::verify::{run_verification, VerificationTask};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "alphares",
    version,
    about = "Fractional resolvent families, Cauchy problems, and their diagnostics"
)]
pub struct Cli {
    /// Directory reports are written to.
    #[arg(
        long,
        global = true,
        env = "ALPHARES_OUT",
        default_value = "alphares_out"
    )]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

/// Scenario selection and overrides shared by the problem-driven
/// subcommands.
#[derive(Args, Clone, Debug, Default)]
pub struct ProblemOpts {
    /// Scenario JSON describing the problem (generator, grid, forcing).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Fractional order, overrides the scenario.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Time horizon, overrides the scenario.
    #[arg(long)]
    pub r: Option<f64>,
    /// Number of grid intervals, overrides the scenario.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Grid layout: uniform | graded.
    #[arg(long)]
    pub grid: Option<String>,
    /// Grading exponent for graded grids.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Norm on the state space: euclid | l1 | linf.
    #[arg(long)]
    pub norm: Option<String>,
    /// Seed for randomized search, overrides the scenario.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate E_{alpha,beta}(z) and print the value.
    MlEval {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Real part of the argument.
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        /// Imaginary part of the argument.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        zi: f64,
        /// Absolute truncation tolerance for the series.
        #[arg(long, default_value_t = MLParams::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Build S_alpha and P_alpha on the scenario grid, by every route that
    /// applies, and report route agreement.
    Family {
        #[command(flatten)]
        opts: ProblemOpts,
    },
    /// Solve D_t^alpha u = A u + f; writes solution.csv and a diagnostics
    /// sidecar solve.json.
    Solve {
        #[command(flatten)]
        opts: ProblemOpts,
    },
    /// Estimate the semivariation of S_alpha under dyadic refinement.
    Semivariation {
        #[command(flatten)]
        opts: ProblemOpts,
    },
    /// Run the named invariant checks and write a pass/fail table.
    Verify {
        #[command(flatten)]
        opts: ProblemOpts,
    },
    /// Estimate the a priori constant sup(||u'|| + ||Au||)/||f|| over the
    /// standard probe forcings.
    Regularity {
        #[command(flatten)]
        opts: ProblemOpts,
    },
}

/// The bundled fallback problem: scalar decay.
fn default_scenario() -> Scenario {
    Scenario {
        alpha: 1.5,
        r: 1.0,
        n: 512,
        grid: GridKind::Uniform,
        gamma: None,
        a: vec![vec![-1.0]],
        x: Some(vec![1.0]),
        y: None,
        f: crate::io::FSpec::Zero,
        norm: None,
        seed: None,
        expected: None,
    }
}

/// Load the scenario (or the default) and apply flag overrides.
pub fn effective_scenario(opts: &ProblemOpts) -> Result<Scenario> {
    let mut sc = match &opts.scenario {
        Some(path) => Scenario::from_path(path)?,
        None => default_scenario(),
    };
    if let Some(alpha) = opts.alpha {
        sc.alpha = alpha;
    }
    if let Some(r) = opts.r {
        sc.r = r;
    }
    if let Some(n) = opts.n {
        sc.n = n;
    }
    if let Some(grid) = &opts.grid {
        sc.grid = match grid.as_str() {
            "uniform" => GridKind::Uniform,
            "graded" => GridKind::Graded,
            other => {
                return Err(Error::Validation(format!(
                    "unknown grid kind {other:?}, expected uniform or graded"
                )))
            }
        };
    }
    if let Some(gamma) = opts.gamma {
        sc.gamma = Some(gamma);
    }
    if let Some(norm) = &opts.norm {
        NormKind::from_str(norm)?;
        sc.norm = Some(norm.clone());
    }
    if let Some(seed) = opts.seed {
        sc.seed = Some(seed);
    }
    Ok(sc)
}

fn cmd_ml_eval(
    out: &std::path::Path,
    alpha: f64,
    beta: f64,
    z: f64,
    zi: f64,
    tol: f64,
) -> Result<()> {
    let params = MLParams::with_tolerance(alpha, beta, tol).map_err(Error::from)?;
    let arg = Complex64::new(z, zi);
    let value = mittag_leffler(&params, arg).map_err(Error::from)?;
    if value.im == 0.0 {
        println!("{}", value.re);
    } else {
        println!(
            "{}{}{}i",
            value.re,
            if value.im < 0.0 { "-" } else { "+" },
            value.im.abs()
        );
    }
    io::write_json(&out.join("ml_eval.json"), &ml_report_json(alpha, beta, arg, value))
}

fn cmd_family(out: &std::path::Path, opts: &ProblemOpts) -> Result<()> {
    let sc = effective_scenario(opts)?;
    let generator = sc.generator()?;
    let grid = sc.build_grid()?;
    let s = s_alpha(&generator, sc.alpha, &grid)?;
    let p = p_alpha(&generator, sc.alpha, &grid)?;
    let reach = generator.norm_inf() * grid.horizon().powf(sc.alpha);
    let march = if grid.step().is_some() && reach <= VOLTERRA_ENVELOPE {
        Some(s_alpha_volterra(&generator, sc.alpha, &grid)?)
    } else {
        None
    };
    let route_diff = march.as_ref().map(|m| s.sup_difference(m));
    let report = json!({
        "alpha": sc.alpha,
        "generator": io::matrix_json(generator.entries()),
        "defining_residual": defining_equation_residual(&s, &generator),
        "s_alpha": family_report(&s),
        "p_alpha": family_report(&p),
        "volterra": march.as_ref().map(family_report).unwrap_or(Value::Null),
        "route_sup_difference": route_diff.map(|d| json!(d)).unwrap_or(Value::Null),
    });
    let path = out.join("family.json");
    io::write_json(&path, &report)?;
    match route_diff {
        Some(d) => println!("wrote {} (route agreement {d:.3e})", path.display()),
        None => println!("wrote {} (single route)", path.display()),
    }
    Ok(())
}

fn build_request(sc: &Scenario) -> Result<(SolveRequest, Grid)> {
    let generator = sc.generator()?;
    let grid = sc.build_grid()?;
    let f = sc.forcing(&grid)?;
    let req = SolveRequest::new(
        generator,
        sc.alpha,
        sc.initial_x()?,
        sc.initial_y()?,
        f,
        sc.norm_spec()?,
    )?;
    Ok((req, grid))
}

fn cmd_solve(out: &std::path::Path, opts: &ProblemOpts) -> Result<()> {
    let sc = effective_scenario(opts)?;
    let (req, grid) = build_request(&sc)?;
    let bundle = mild_solution(&req)?;
    let csv_path = out.join("solution.csv");
    io::write_text(&csv_path, &solution_csv(&bundle))?;
    let mut report = solve_report(&bundle);
    report["alpha"] = json!(sc.alpha);
    let n = grid.len() - 1;
    if grid.step().is_some() && n % 2 == 0 && n >= 16 && req.f.sup_norm() > 0.0 {
        let eq = equivalence_diagnostics(
            &req.generator,
            sc.alpha,
            &req.f,
            &req.norm,
            &EquivalenceConfig::default(),
        )?;
        report["equivalence"] = json!({
            "c1_disagreement": eq.c1_disagreement,
            "c1_pass": eq.c1_pass,
            "jump_fine": eq.jump_fine,
            "jump_coarse": eq.jump_coarse,
            "route_floor": eq.route_floor,
            "continuity_pass": eq.continuity_pass,
            "strong_residual": eq.strong_residual,
            "strong_pass": eq.strong_pass,
            "all_pass": eq.all_pass,
        });
    }
    let json_path = out.join("solve.json");
    io::write_json(&json_path, &report)?;
    println!(
        "wrote {} and {} (residual sup {:.3e})",
        csv_path.display(),
        json_path.display(),
        bundle.residual_sup
    );
    Ok(())
}

fn cmd_semivariation(out: &std::path::Path, opts: &ProblemOpts) -> Result<()> {
    let sc = effective_scenario(opts)?;
    let generator = sc.generator()?;
    let grid = sc.build_grid()?;
    let norm = sc.norm_spec()?;
    let s = s_alpha(&generator, sc.alpha, &grid)?;
    let result = sv_estimate(&s, &norm, &RefinementSchedule::default(), sc.seed())?;
    let mut report = sv_report(&result, &norm);
    report["alpha"] = json!(sc.alpha);
    report["horizon"] = json!(grid.horizon());
    let path = out.join("semivariation.json");
    io::write_json(&path, &report)?;
    println!(
        "semivariation {:.12e} (converged: {}) -> {}",
        result.estimate.value,
        result.estimate.converged,
        path.display()
    );
    Ok(())
}

fn cmd_verify(out: &std::path::Path, opts: &ProblemOpts) -> Result<()> {
    let sc = effective_scenario(opts)?;
    let generator = sc.generator()?;
    let grid = sc.build_grid()?;
    let f = sc.forcing(&grid)?;
    let task = VerificationTask {
        generator: generator,
        alpha: sc.alpha,
        grid,
        x: sc.initial_x()?,
        y: sc.initial_y()?,
        f,
        norm: sc.norm_spec()?,
        seed: sc.seed(),
    };
    let report = run_verification(&task)?;
    for check in &report.checks {
        println!(
            "[{}] {:<32} residual {:>12.4e}  tolerance {:>12.4e}  {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.residual,
            check.tolerance,
            check.detail
        );
    }
    let path = out.join("verify.json");
    io::write_json(&path, &verify_report_json(&report))?;
    println!("wrote {}", path.display());
    if !report.passed {
        return Err(Error::Numerical(format!(
            "verification failed: {}",
            report.failed_names().join(", ")
        )));
    }
    Ok(())
}

fn cmd_regularity(out: &std::path::Path, opts: &ProblemOpts) -> Result<()> {
    let sc = effective_scenario(opts)?;
    let generator = sc.generator()?;
    let grid = sc.build_grid()?;
    let norm = sc.norm_spec()?;
    let mut probes = standard_probes(&grid, generator.dim())?;
    if sc.f.to_sampled(&grid, generator.dim())?.sup_norm() > 0.0 {
        probes.push(("scenario".to_string(), sc.forcing(&grid)?));
    }
    let report = regularity_constant(&generator, sc.alpha, &grid, &probes, &norm, sc.seed())?;
    let mut value = regularity_report_json(&report, &norm);
    value["alpha"] = json!(sc.alpha);
    value["horizon"] = json!(grid.horizon());
    let path = out.join("regularity.json");
    io::write_json(&path, &value)?;
    println!(
        "C estimate {:.6e} (worst probe: {}) -> {}",
        report.c_estimate,
        report.worst_probe,
        path.display()
    );
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::MlEval { alpha, beta, z, zi, tol } => {
            cmd_ml_eval(&cli.out, *alpha, *beta, *z, *zi, *tol)
        }
        Command::Family { opts } => cmd_family(&cli.out, opts),
        Command::Solve { opts } => cmd_solve(&cli.out, opts),
        Command::Semivariation { opts } => cmd_semivariation(&cli.out, opts),
        Command::Verify { opts } => cmd_verify(&cli.out, opts),
        Command::Regularity { opts } => cmd_regularity(&cli.out, opts),
    }
}

/// Entry point for the `alphares` binary.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn ml_eval_flags_parse() {
        let cli = parse(&["alphares", "ml-eval", "--alpha", "1", "--z", "1"]);
        match cli.command {
            Command::MlEval { alpha, beta, z, zi, tol } => {
                assert_eq!(alpha, 1.0);
                assert_eq!(beta, 1.0);
                assert_eq!(z, 1.0);
                assert_eq!(zi, 0.0);
                assert_eq!(tol, MLParams::DEFAULT_TOLERANCE);
            }
            other => panic!("parsed {other:?}"),
        }
        assert_eq!(cli.out, PathBuf::from("alphares_out"));
    }

    #[test]
    fn negative_arguments_parse() {
        let cli = parse(&["alphares", "ml-eval", "--alpha", "1.5", "--z", "-2.5"]);
        match cli.command {
            Command::MlEval { z, .. } => assert_eq!(z, -2.5),
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn out_flag_is_global() {
        let cli = parse(&["alphares", "solve", "--out", "/tmp/reports", "--N", "64"]);
        assert_eq!(cli.out, PathBuf::from("/tmp/reports"));
        match cli.command {
            Command::Solve { opts } => assert_eq!(opts.n, Some(64)),
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn overrides_apply_to_the_default_scenario() {
        let opts = ProblemOpts {
            alpha: Some(1.25),
            n: Some(128),
            norm: Some("linf".into()),
            ..Default::default()
        };
        let sc = effective_scenario(&opts).unwrap();
        assert_eq!(sc.alpha, 1.25);
        assert_eq!(sc.n, 128);
        assert_eq!(sc.norm_spec().unwrap().kind, NormKind::Linf);
        assert_eq!(sc.dim(), 1);
    }

    #[test]
    fn bad_grid_kind_is_a_validation_error() {
        let opts = ProblemOpts {
            grid: Some("chebyshev".into()),
            ..Default::default()
        };
        let err = effective_scenario(&opts).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let opts = ProblemOpts {
            norm: Some("l7".into()),
            ..Default::default()
        };
        assert!(effective_scenario(&opts).is_err());
    }

    #[test]
    fn unknown_subcommand_fails_to_parse() {
        assert!(Cli::try_parse_from(["alphares", "frobnicate"]).is_err());
        assert!(Cli::try_parse_from(["alphares", "ml-eval"]).is_err()); // missing args
    }
}
