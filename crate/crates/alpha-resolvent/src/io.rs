//! Serialization: scenario files in, reports out.
//!
//! Scenarios are JSON documents describing a problem (generator, order,
//! grid, initial data, forcing). Reports are JSON with every float printed
//! as `{:.16e}` (17 significant digits) so identical runs produce
//! byte-identical files; time series go to CSV with the same float format.
//! All writes go through a temp file in the target directory followed by a
//! rename, so readers never observe a half-written report.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::{fs, io, process};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::kernels::{Grid, SampledFunction};
use crate::resolvent::{Generator, OperatorFamily};
use crate::semivariation::{NormKind, NormSpec, Subdivision, SvEstimateResult};
use crate::solver::{ramp_testfunction, RegularityReport, SolutionBundle};
use crate::verify::VerifyReport;
use crate::{Error, Result};

/// JSON formatter that prints every f64 as `{:.16e}` and everything else
/// compactly. serde_json maps are sorted, so output is deterministic.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Fixed scientific float format used across JSON and CSV output.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a JSON value with the fixed float format.
pub fn json_to_string(value: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("serializing serde_json::Value cannot fail");
    String::from_utf8(out).expect("JSON output is UTF-8")
}

fn io_context(path: &Path, err: io::Error) -> Error {
    Error::Validation(format!("{}: {err}", path.display()))
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write `content` to `path` atomically (temp file + rename).
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| io_context(&parent, e))?;
    let stamp = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("{} has no file name", path.display())))?;
    let tmp = parent.join(format!(
        ".{}.{}-{stamp}.tmp",
        file_name.to_string_lossy(),
        process::id()
    ));
    fs::write(&tmp, content).map_err(|e| io_context(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_context(path, e)
    })
}

/// Write a JSON value atomically, newline-terminated.
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = json_to_string(value);
    text.push('\n');
    write_text(path, &text)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_context(path, e))
}

/// How grid nodes are distributed.
#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Uniform,
    Graded,
}

/// Forcing-term description inside a scenario file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FSpec {
    #[default]
    Zero,
    /// f(t) = value
    Const { value: Vec<f64> },
    /// f(t) = sum_k coeffs[k] t^k
    Poly { coeffs: Vec<Vec<f64>> },
    /// f(t) = amplitude * sin(2 pi t / period + phase)
    Sin {
        amplitude: Vec<f64>,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Continuous triangle wave: amplitude * 2|frac(t/period) - 1/2|,
    /// starting at the crest.
    Sawtooth { amplitude: Vec<f64>, period: f64 },
    /// Piecewise-constant plateaus joined by linear ramps of width eps.
    Ramp {
        points: Vec<f64>,
        eps: f64,
        values: Vec<Vec<f64>>,
    },
    /// Explicit node values, one row per grid node.
    Samples { values: Vec<Vec<f64>> },
}

fn to_dvector(row: &[f64], dim: usize, what: &str) -> Result<DVector<f64>> {
    if row.len() != dim {
        return Err(Error::Validation(format!(
            "{what} has {} entries, expected {dim}",
            row.len()
        )));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} contains non-finite entries")));
    }
    Ok(DVector::from_column_slice(row))
}

impl FSpec {
    /// Sample the forcing on a grid as a dim-valued function.
    pub fn to_sampled(&self, grid: &Grid, dim: usize) -> Result<SampledFunction> {
        match self {
            FSpec::Zero => Ok(SampledFunction::zeros(grid.clone(), dim)),
            FSpec::Const { value } => {
                let v = to_dvector(value, dim, "constant forcing")?;
                SampledFunction::from_vector_fn(grid.clone(), dim, |_| v.clone())
            }
            FSpec::Poly { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Validation(
                        "polynomial forcing needs at least one coefficient".into(),
                    ));
                }
                let cs: Vec<DVector<f64>> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| to_dvector(c, dim, &format!("coefficient {k}")))
                    .collect::<Result<_>>()?;
                SampledFunction::from_vector_fn(grid.clone(), dim, |t| {
                    let mut acc = DVector::zeros(dim);
                    let mut p = 1.0;
                    for c in &cs {
                        acc += c * p;
                        p *= t;
                    }
                    acc
                })
            }
            FSpec::Sin { amplitude, period, phase } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::Validation(format!(
                        "sinusoid period must be positive, got {period}"
                    )));
                }
                let a = to_dvector(amplitude, dim, "sinusoid amplitude")?;
                let w = 2.0 * std::f64::consts::PI / period;
                let phase = *phase;
                SampledFunction::from_vector_fn(grid.clone(), dim, move |t| {
                    &a * (w * t + phase).sin()
                })
            }
            FSpec::Sawtooth { amplitude, period } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::Validation(format!(
                        "sawtooth period must be positive, got {period}"
                    )));
                }
                let a = to_dvector(amplitude, dim, "sawtooth amplitude")?;
                let p = *period;
                SampledFunction::from_vector_fn(grid.clone(), dim, move |t| {
                    &a * (2.0 * ((t / p).fract() - 0.5).abs())
                })
            }
            FSpec::Ramp { points, eps, values } => {
                let d = Subdivision::new(points.clone())?;
                let xs: Vec<DVector<f64>> = values
                    .iter()
                    .enumerate()
                    .map(|(i, row)| to_dvector(row, dim, &format!("ramp value {i}")))
                    .collect::<Result<_>>()?;
                ramp_testfunction(&d, *eps, &xs, grid)
            }
            FSpec::Samples { values } => {
                if values.len() != grid.len() {
                    return Err(Error::Validation(format!(
                        "sampled forcing has {} rows, the grid has {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                let rows: Vec<DVector<f64>> = values
                    .iter()
                    .enumerate()
                    .map(|(i, row)| to_dvector(row, dim, &format!("forcing row {i}")))
                    .collect::<Result<_>>()?;
                SampledFunction::new(grid.clone(), rows)
            }
        }
    }
}

/// A problem description read from a JSON file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub alpha: f64,
    #[serde(default = "default_horizon")]
    pub r: f64,
    #[serde(rename = "N", default = "default_intervals")]
    pub n: usize,
    #[serde(default)]
    pub grid: GridKind,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub f: FSpec,
    #[serde(default)]
    pub norm: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Frozen regression constants for this scenario; carried through for
    /// test harnesses, ignored by the solver itself.
    #[serde(default)]
    pub expected: Option<serde_json::Map<String, Value>>,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_intervals() -> usize {
    512
}

impl Scenario {
    pub fn from_str_named(text: &str, name: &str) -> Result<Scenario> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("{name}: invalid scenario: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Scenario> {
        let text = read_to_string(path)?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn generator(&self) -> Result<Generator> {
        let dim = self.a.len();
        if dim == 0 {
            return Err(Error::Validation("the generator matrix is empty".into()));
        }
        if self.a.iter().any(|row| row.len() != dim) {
            return Err(Error::Validation(format!(
                "the generator matrix must be square ({dim} x {dim})"
            )));
        }
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        Generator::new(DMatrix::from_row_slice(dim, dim, &flat))
    }

    pub fn build_grid(&self) -> Result<Grid> {
        match self.grid {
            GridKind::Uniform => {
                if self.gamma.is_some() {
                    return Err(Error::Validation(
                        "gamma only applies to graded grids".into(),
                    ));
                }
                Grid::uniform(self.r, self.n)
            }
            GridKind::Graded => {
                let gamma = self.gamma.unwrap_or(Grid::suggested_grading(self.alpha));
                Grid::graded(self.r, self.n, gamma)
            }
        }
    }

    pub fn initial_x(&self) -> Result<DVector<f64>> {
        match &self.x {
            Some(v) => to_dvector(v, self.dim(), "x"),
            None => Ok(DVector::zeros(self.dim())),
        }
    }

    pub fn initial_y(&self) -> Result<DVector<f64>> {
        match &self.y {
            Some(v) => to_dvector(v, self.dim(), "y"),
            None => Ok(DVector::zeros(self.dim())),
        }
    }

    pub fn forcing(&self, grid: &Grid) -> Result<SampledFunction> {
        self.f.to_sampled(grid, self.dim())
    }

    pub fn norm_spec(&self) -> Result<NormSpec> {
        let kind = match &self.norm {
            Some(s) => NormKind::from_str(s)?,
            None => NormKind::Euclidean,
        };
        NormSpec::new(kind, self.dim())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }
}

pub fn vector_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array(m.row(i).iter().map(|&x| json!(x)).collect()))
            .collect(),
    )
}

pub fn nodes_json(grid: &Grid) -> Value {
    Value::Array(grid.nodes().iter().map(|&t| json!(t)).collect())
}

pub fn family_report(fam: &OperatorFamily) -> Value {
    json!({
        "alpha": fam.alpha(),
        "kind": fam.kind().as_str(),
        "provenance": fam.provenance().as_str(),
        "horizon": fam.grid().horizon(),
        "intervals": fam.grid().len() - 1,
        "dim": fam.dim(),
        "t": nodes_json(fam.grid()),
        "samples": Value::Array(fam.samples().iter().map(matrix_json).collect()),
    })
}

/// CSV for a vector-valued time series: t, then one column per component.
pub fn series_csv(f: &SampledFunction, prefix: &str) -> String {
    let mut header = String::from("t");
    for k in 0..f.dim() {
        header.push_str(&format!(",{prefix}_{k}"));
    }
    let mut out = header;
    out.push('\n');
    for (j, &t) in f.grid().nodes().iter().enumerate() {
        out.push_str(&fmt_sci(t));
        for &x in f.value(j).iter() {
            out.push(',');
            out.push_str(&fmt_sci(x));
        }
        out.push('\n');
    }
    out
}

/// CSV for a solution bundle: t, u components, residual.
pub fn solution_csv(bundle: &SolutionBundle) -> String {
    let dim = bundle.u.dim();
    let mut out = String::from("t");
    for k in 0..dim {
        out.push_str(&format!(",u_{k}"));
    }
    out.push_str(",residual\n");
    for (j, &t) in bundle.u.grid().nodes().iter().enumerate() {
        out.push_str(&fmt_sci(t));
        for &x in bundle.u.value(j).iter() {
            out.push(',');
            out.push_str(&fmt_sci(x));
        }
        out.push(',');
        out.push_str(&fmt_sci(bundle.residual.scalar(j)));
        out.push('\n');
    }
    out
}

pub fn solve_report(bundle: &SolutionBundle) -> Value {
    let grid = bundle.u.grid();
    let last = grid.len() - 1;
    let sup = |f: &SampledFunction| f.sup_norm();
    json!({
        "horizon": grid.horizon(),
        "intervals": last,
        "dim": bundle.u.dim(),
        "residual_sup": bundle.residual_sup,
        "sy_cross_check": bundle.sy_cross_check,
        "u_final": vector_json(bundle.u.value(last)),
        "u_prime_final": vector_json(bundle.u_prime.value(last)),
        "au_final": vector_json(bundle.au.value(last)),
        "sup_u": sup(&bundle.u),
        "sup_u_prime": sup(&bundle.u_prime),
        "sup_au": sup(&bundle.au),
        "residual": Value::Array(
            (0..grid.len()).map(|j| json!(bundle.residual.scalar(j))).collect()
        ),
    })
}

pub fn sv_report(result: &SvEstimateResult, norm: &NormSpec) -> Value {
    let est = &result.estimate;
    json!({
        "norm": norm.kind.as_str(),
        "dim": norm.dim,
        "value": est.value,
        "converged": est.converged,
        "subdivision": Value::Array(
            est.subdivision.points().iter().map(|&p| json!(p)).collect()
        ),
        "maximizer": Value::Array(est.maximizer.iter().map(vector_json).collect()),
        "dual_witness": vector_json(&est.dual_witness),
        "levels": Value::Array(
            result
                .levels
                .iter()
                .map(|l| json!({"intervals": l.n, "value": l.value}))
                .collect()
        ),
    })
}

pub fn verify_report_json(rep: &VerifyReport) -> Value {
    json!({
        "alpha": rep.alpha,
        "horizon": rep.horizon,
        "intervals": rep.intervals,
        "dim": rep.dim,
        "passed": rep.passed,
        "checks": Value::Array(
            rep.checks
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "residual": c.residual,
                        "tolerance": c.tolerance,
                        "passed": c.passed,
                        "detail": c.detail,
                    })
                })
                .collect()
        ),
    })
}

pub fn regularity_report_json(rep: &RegularityReport, norm: &NormSpec) -> Value {
    json!({
        "c_estimate": rep.c_estimate,
        "probe_count": rep.probe_count,
        "worst_probe": rep.worst_probe,
        "probe_ratios": Value::Array(
            rep.probe_ratios
                .iter()
                .map(|(name, ratio)| json!({"probe": name, "ratio": ratio}))
                .collect()
        ),
        "semivariation": sv_report(&rep.sv, norm),
        "time_weighted_ap_sup": rep.time_weighted_ap_sup,
    })
}

pub fn ml_report_json(alpha: f64, beta: f64, z: Complex64, value: Complex64) -> Value {
    json!({
        "alpha": alpha,
        "beta": beta,
        "z": {"re": z.re, "im": z.im},
        "value": {"re": value.re, "im": value.im},
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn floats_print_in_fixed_scientific_form() {
        let v = json!({"b": 0.5, "a": 1.0, "n": 512, "s": "x"});
        assert_eq!(
            json_to_string(&v),
            r#"{"a":1.0000000000000000e0,"b":5.0000000000000000e-1,"n":512,"s":"x"}"#
        );
    }

    #[test]
    fn serialization_is_deterministic() {
        let v = json!({"z": [0.1, 0.2, -3.5e-7], "a": {"nested": 1e300}});
        assert_eq!(json_to_string(&v), json_to_string(&v));
        let text = json_to_string(&v);
        let round: Value = serde_json::from_str(&text).unwrap();
        assert_abs_diff_eq!(round["z"][2].as_f64().unwrap(), -3.5e-7);
    }

    #[test]
    fn scenario_parses_with_defaults() {
        let s = Scenario::from_str_named(r#"{"alpha": 1.5, "A": [[-1.0]]}"#, "inline").unwrap();
        assert_eq!(s.n, 512);
        assert_eq!(s.r, 1.0);
        assert_eq!(s.grid, GridKind::Uniform);
        assert_eq!(s.seed(), 42);
        let grid = s.build_grid().unwrap();
        assert_eq!(grid.len(), 513);
        let f = s.forcing(&grid).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
        assert_eq!(s.generator().unwrap().dim(), 1);
        assert_eq!(s.norm_spec().unwrap().kind, NormKind::Euclidean);
        assert!(s.initial_x().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scenario_rejects_unknown_fields_and_bad_shapes() {
        assert!(Scenario::from_str_named(
            r#"{"alpha": 1.5, "A": [[-1.0]], "bogus": 1}"#,
            "inline"
        )
        .is_err());
        let ragged =
            Scenario::from_str_named(r#"{"alpha": 1.5, "A": [[1.0, 2.0], [3.0]]}"#, "inline")
                .unwrap();
        assert!(ragged.generator().is_err());
        let s = Scenario::from_str_named(
            r#"{"alpha": 1.5, "A": [[-1.0]], "x": [1.0, 2.0]}"#,
            "inline",
        )
        .unwrap();
        assert!(s.initial_x().is_err());
        let uniform_gamma = Scenario::from_str_named(
            r#"{"alpha": 1.5, "A": [[-1.0]], "gamma": 2.0}"#,
            "inline",
        )
        .unwrap();
        assert!(uniform_gamma.build_grid().is_err());
    }

    #[test]
    fn forcing_kinds_sample_correctly() {
        let grid = Grid::uniform(1.0, 64).unwrap();
        let sin = FSpec::Sin {
            amplitude: vec![2.0],
            period: 0.5,
            phase: 0.0,
        };
        let f = sin.to_sampled(&grid, 1).unwrap();
        assert_abs_diff_eq!(f.scalar(8), 2.0, epsilon = 1e-12); // t = 1/8, quarter period
        let saw = FSpec::Sawtooth {
            amplitude: vec![1.0],
            period: 0.5,
        };
        let g = saw.to_sampled(&grid, 1).unwrap();
        assert_abs_diff_eq!(g.scalar(0), 1.0);
        assert_abs_diff_eq!(g.interpolate(0.25)[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.interpolate(0.5)[0], 1.0, epsilon = 1e-12);
        let poly = FSpec::Poly {
            coeffs: vec![vec![1.0], vec![0.0], vec![3.0]],
        };
        let p = poly.to_sampled(&grid, 1).unwrap();
        assert_abs_diff_eq!(p.interpolate(0.5)[0], 1.75, epsilon = 1e-12);
        let bad = FSpec::Samples { values: vec![vec![0.0]; 3] };
        assert!(bad.to_sampled(&grid, 1).is_err());
        let zero_period = FSpec::Sin {
            amplitude: vec![1.0],
            period: 0.0,
            phase: 0.0,
        };
        assert!(zero_period.to_sampled(&grid, 1).is_err());
    }

    #[test]
    fn tagged_forcing_parses_from_json() {
        let s = Scenario::from_str_named(
            r#"{"alpha": 1.5, "A": [[-1.0]],
                "f": {"kind": "sin", "amplitude": [1.0], "period": 1.0}}"#,
            "inline",
        )
        .unwrap();
        let grid = s.build_grid().unwrap();
        let f = s.forcing(&grid).unwrap();
        assert!(f.sup_norm() > 0.9);
        assert!(Scenario::from_str_named(
            r#"{"alpha": 1.5, "A": [[-1.0]], "f": {"kind": "nope"}}"#,
            "inline"
        )
        .is_err());
    }

    #[test]
    fn atomic_write_round_trips() {
        let dir = std::env::temp_dir().join(format!(
            "alphares-io-test-{}-{}",
            process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let path = dir.join("report.json");
        write_json(&path, &json!({"value": 0.25})).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "{\"value\":2.5000000000000000e-1}\n");
        write_json(&path, &json!({"value": 0.75})).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "{\"value\":7.5000000000000000e-1}\n");
        let leftovers: Vec<_> = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_layout_matches_contract() {
        let grid = Grid::uniform(1.0, 4).unwrap();
        let f = SampledFunction::from_vector_fn(grid, 2, |t| {
            DVector::from_vec(vec![t, -t])
        })
        .unwrap();
        let csv = series_csv(&f, "u");
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,u_0,u_1");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.0000000000000000e0,"));
        assert_eq!(csv.lines().count(), 6);
    }
}
