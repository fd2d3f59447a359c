//! Riemann-Liouville kernels g_β(t) = t^{β-1}/Γ(β), fractional integration
//! by product-integration quadrature, plain trapezoidal convolution, and the
//! Caputo derivative of order α ∈ (1,2).
//!
//! The weakly singular convolutions never sample g_β pointwise near its
//! singularity. On every subinterval the density is replaced by its linear
//! interpolant and the kernel moments ∫ g_β and ∫ u g_β are inserted in
//! closed form, so the quadrature is exact (to roundoff) whenever the density
//! is piecewise linear on the grid, which is the class the identity checks
//! live on.

use nalgebra::DVector;

use crate::special::recip_gamma;
use crate::{Error, Result};

/// Time mesh 0 = t_0 < t_1 < ... < t_N = r.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    horizon: f64,
}

impl Grid {
    /// Uniform mesh with `n` intervals on [0, r].
    pub fn uniform(r: f64, n: usize) -> Result<Grid> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Validation(format!("horizon must be positive, got {r}")));
        }
        if n < 1 {
            return Err(Error::Validation("grid needs at least one interval".into()));
        }
        let nodes = (0..=n).map(|j| r * j as f64 / n as f64).collect();
        Ok(Grid { nodes, horizon: r })
    }

    /// Graded mesh t_j = r (j/N)^γ with γ ≥ 1, clustering nodes at t = 0.
    pub fn graded(r: f64, n: usize, gamma: f64) -> Result<Grid> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Validation(format!(
                "grading exponent must be >= 1, got {gamma}"
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Validation(format!("horizon must be positive, got {r}")));
        }
        if n < 1 {
            return Err(Error::Validation("grid needs at least one interval".into()));
        }
        let nodes = (0..=n)
            .map(|j| r * (j as f64 / n as f64).powf(gamma))
            .collect();
        Ok(Grid { nodes, horizon: r })
    }

    /// Grid from explicit nodes; must start at exactly 0 and increase strictly.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid> {
        if nodes.len() < 2 {
            return Err(Error::Validation("grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Validation(format!(
                "first grid node must be exactly 0, got {}",
                nodes[0]
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::Validation(format!(
                    "grid nodes must increase strictly, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let horizon = *nodes.last().unwrap();
        Ok(Grid { nodes, horizon })
    }

    /// Grading exponent γ = 2/(α-1) that restores full order for solutions
    /// with a t^α leading singularity.
    pub fn suggested_grading(alpha: f64) -> f64 {
        2.0 / (alpha - 1.0)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes (intervals + 1).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_uniform(&self) -> bool {
        let n = self.nodes.len() - 1;
        let h = self.horizon / n as f64;
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * self.horizon)
    }

    /// Uniform step size; None for graded grids.
    pub fn step(&self) -> Option<f64> {
        if self.is_uniform() {
            Some(self.horizon / (self.nodes.len() - 1) as f64)
        } else {
            None
        }
    }

    /// Index of a node equal to t (within a roundoff margin).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.horizon.max(1.0);
        self.nodes.iter().position(|&x| (x - t).abs() <= tol)
    }
}

/// Vector-valued samples on a grid, interpreted piecewise linearly.
#[derive(Clone, Debug)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<DVector<f64>>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<DVector<f64>>) -> Result<SampledFunction> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let m = values[0].len();
        if m == 0 {
            return Err(Error::Validation("samples must have dimension >= 1".into()));
        }
        for (j, v) in values.iter().enumerate() {
            if v.len() != m {
                return Err(Error::Validation(format!(
                    "sample {} has dimension {}, expected {}",
                    j,
                    v.len(),
                    m
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("sample {j} is not finite")));
            }
        }
        Ok(SampledFunction { grid, values })
    }

    /// Scalar function sampled on the grid (dimension-1 vectors).
    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        let values = grid
            .nodes()
            .iter()
            .map(|&t| DVector::from_element(1, f(t)))
            .collect();
        SampledFunction::new(grid, values)
    }

    pub fn from_vector_fn(
        grid: Grid,
        dim: usize,
        f: impl Fn(f64) -> DVector<f64>,
    ) -> Result<SampledFunction> {
        let values: Vec<_> = grid.nodes().iter().map(|&t| f(t)).collect();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Validation("function produced wrong dimension".into()));
        }
        SampledFunction::new(grid, values)
    }

    pub fn zeros(grid: Grid, dim: usize) -> SampledFunction {
        let values = vec![DVector::zeros(dim); grid.len()];
        SampledFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value(&self, j: usize) -> &DVector<f64> {
        &self.values[j]
    }

    /// Scalar sample at node j (dimension-1 functions).
    pub fn scalar(&self, j: usize) -> f64 {
        self.values[j][0]
    }

    /// Piecewise-linear evaluation at an arbitrary time in [0, r].
    pub fn interpolate(&self, t: f64) -> DVector<f64> {
        let nodes = self.grid.nodes();
        if t <= 0.0 {
            return self.values[0].clone();
        }
        if t >= self.grid.horizon() {
            return self.values[nodes.len() - 1].clone();
        }
        let i = match nodes.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.values[i].clone(),
            Err(i) => i - 1,
        };
        let w = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
        &self.values[i] * (1.0 - w) + &self.values[i + 1] * w
    }

    pub fn same_grid(&self, other: &SampledFunction) -> bool {
        self.grid == other.grid
    }

    /// Nodewise linear combination a*self + b*other (same grid and dim).
    pub fn combine(&self, a: f64, other: &SampledFunction, b: f64) -> Result<SampledFunction> {
        if !self.same_grid(other) || self.dim() != other.dim() {
            return Err(Error::Validation(
                "linear combination requires matching grids and dimensions".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * a + v * b)
            .collect();
        SampledFunction::new(self.grid.clone(), values)
    }

    /// Max over nodes of the euclidean sample norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// g_β(t) = t^{β-1} / Γ(β) for β > 0, t > 0.
pub fn g_kernel(beta: f64, t: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Validation(format!(
            "g_kernel needs beta > 0 (beta = 0 is the convolution identity, handled \
             symbolically by convolve_g); got {beta}"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Validation(format!("g_kernel needs t > 0, got {t}")));
    }
    Ok(t.powf(beta - 1.0) * recip_gamma(beta))
}

/// Exact moments of g_β over [b, a] (0 ≤ b ≤ a), against a linear density:
/// I0 = ∫_b^a g_β(u) du, I1 = ∫_b^a (a - u) g_β(u) du.
#[inline]
fn kernel_moments(beta: f64, a: f64, b: f64, rg1: f64, rg2: f64) -> (f64, f64) {
    // rg1 = 1/Γ(β+1), rg2 = 1/Γ(β+2); g_{β+1}(u) = u^β rg1, g_{β+2}(u) = u^{β+1} rg2.
    let i0 = a.powf(beta) * rg1 - b.powf(beta) * rg1;
    let i1 = a * i0 - beta * (a.powf(beta + 1.0) * rg2 - b.powf(beta + 1.0) * rg2);
    (i0, i1)
}

fn convolve_g_generic<T, AddTo, Scale>(
    beta: f64,
    nodes: &[f64],
    samples: &[T],
    zero: impl Fn() -> T,
    add_to: AddTo,
    scale: Scale,
) -> Vec<T>
where
    AddTo: Fn(&mut T, T),
    Scale: Fn(&T, f64) -> T,
{
    let n = nodes.len();
    let rg1 = recip_gamma(beta + 1.0);
    let rg2 = recip_gamma(beta + 2.0);
    let mut out = Vec::with_capacity(n);
    out.push(zero());
    for j in 1..n {
        let tj = nodes[j];
        let mut acc = zero();
        for k in 0..j {
            let a = tj - nodes[k];
            let b = tj - nodes[k + 1];
            let h = nodes[k + 1] - nodes[k];
            let (i0, i1) = kernel_moments(beta, a, b, rg1, rg2);
            let w_right = i1 / h;
            add_to(&mut acc, scale(&samples[k], i0 - w_right));
            add_to(&mut acc, scale(&samples[k + 1], w_right));
        }
        out.push(acc);
    }
    out
}

/// Fractional integration (g_β ∗ f) by product integration: on each interval
/// f is its linear interpolant and the kernel is integrated exactly.
/// β = 0 is the identity (delta kernel).
pub fn convolve_g(beta: f64, f: &SampledFunction) -> Result<SampledFunction> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::Validation(format!("kernel order must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(f.clone());
    }
    let dim = f.dim();
    let values = convolve_g_generic(
        beta,
        f.grid().nodes(),
        f.values(),
        || DVector::zeros(dim),
        |acc, v| *acc += v,
        |v, w| v * w,
    );
    SampledFunction::new(f.grid().clone(), values)
}

/// Same product-integration rule applied to square-matrix samples; used for
/// (g_α ∗ S) of an operator family.
pub fn convolve_g_matrices(
    beta: f64,
    nodes: &[f64],
    samples: &[nalgebra::DMatrix<f64>],
) -> Vec<nalgebra::DMatrix<f64>> {
    if beta == 0.0 {
        return samples.to_vec();
    }
    let n = samples[0].nrows();
    convolve_g_generic(
        beta,
        nodes,
        samples,
        || nalgebra::DMatrix::zeros(n, n),
        |acc, v| *acc += v,
        |v, w| v * w,
    )
}

/// Trapezoidal convolution (f ∗ h)(t_j) = ∫_0^{t_j} f(t_j - s) h(s) ds with
/// entrywise products; second-order for smooth integrands. Requires a shared
/// grid; on non-uniform grids f(t_j - s_k) is linearly interpolated.
pub fn convolve(f: &SampledFunction, h: &SampledFunction) -> Result<SampledFunction> {
    if !f.same_grid(h) {
        return Err(Error::Validation("convolve requires a shared grid".into()));
    }
    if f.dim() != h.dim() {
        return Err(Error::Validation(
            "convolve requires matching dimensions (entrywise product)".into(),
        ));
    }
    let nodes = f.grid().nodes();
    let uniform = f.grid().is_uniform();
    let dim = f.dim();
    let mut values = Vec::with_capacity(nodes.len());
    values.push(DVector::zeros(dim));
    for j in 1..nodes.len() {
        let tj = nodes[j];
        let mut acc = DVector::zeros(dim);
        for k in 0..j {
            let hk = nodes[k + 1] - nodes[k];
            let fa = if uniform {
                f.value(j - k).clone()
            } else {
                f.interpolate(tj - nodes[k])
            };
            let fb = if uniform {
                f.value(j - k - 1).clone()
            } else {
                f.interpolate(tj - nodes[k + 1])
            };
            let qa = fa.component_mul(h.value(k));
            let qb = fb.component_mul(h.value(k + 1));
            acc += (qa + qb) * (0.5 * hk);
        }
        values.push(acc);
    }
    SampledFunction::new(f.grid().clone(), values)
}

/// Discrete second derivative of samples on a (possibly nonuniform) grid:
/// three-point formula, one-sided at the ends.
pub fn second_derivative(grid: &Grid, values: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let (ia, ib, ic) = if j == 0 {
            (0, 1, 2)
        } else if j == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (j - 1, j, j + 1)
        };
        let (xa, xb, xc) = (nodes[ia], nodes[ib], nodes[ic]);
        let ca = 2.0 / ((xb - xa) * (xc - xa));
        let cb = -2.0 / ((xb - xa) * (xc - xb));
        let cc = 2.0 / ((xc - xa) * (xc - xb));
        out.push(&values[ia] * ca + &values[ib] * cb + &values[ic] * cc);
    }
    out
}

/// Caputo derivative of order α ∈ (1,2): the second derivative of
/// w = g_{2-α} ∗ (f - f(0) - f'(0) g_2), which coincides with
/// ∫ g_{2-α}(t-s) f''(s) ds whenever f is C². The caller supplies the anchor
/// data f0 = f(0) and f1 = f'(0).
pub fn caputo(
    alpha: f64,
    f: &SampledFunction,
    f0: &DVector<f64>,
    f1: &DVector<f64>,
) -> Result<SampledFunction> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Validation(format!(
            "Caputo order must lie in (1,2), got {alpha}"
        )));
    }
    if f.grid().len() < 5 {
        return Err(Error::Validation(
            "Caputo derivative needs at least 5 grid nodes".into(),
        ));
    }
    if f0.len() != f.dim() || f1.len() != f.dim() {
        return Err(Error::Validation(
            "anchor vectors must match the sample dimension".into(),
        ));
    }
    let shifted: Vec<DVector<f64>> = f
        .grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(&t, v)| v - f0 - f1 * t)
        .collect();
    let shifted = SampledFunction::new(f.grid().clone(), shifted)?;
    let w = convolve_g(2.0 - alpha, &shifted)?;
    let dd = second_derivative(f.grid(), w.values());
    SampledFunction::new(f.grid().clone(), dd)
}

fn lagrange_derivative_weights(xa: f64, xb: f64, xc: f64, at: f64) -> (f64, f64, f64) {
    (
        (2.0 * at - xb - xc) / ((xa - xb) * (xa - xc)),
        (2.0 * at - xa - xc) / ((xb - xa) * (xb - xc)),
        (2.0 * at - xa - xb) / ((xc - xa) * (xc - xb)),
    )
}

/// Discrete first derivative of samples on a grid. Uniform grids with at
/// least 5 nodes use fourth-order five-point stencils (one-sided at the
/// ends); otherwise the derivative of the local quadratic interpolant.
pub fn first_derivative(grid: &Grid, values: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut out = Vec::with_capacity(n);
    if grid.is_uniform() && n >= 5 {
        let h = nodes[1] - nodes[0];
        let d = 1.0 / (12.0 * h);
        out.push(
            (&values[0] * -25.0 + &values[1] * 48.0 - &values[2] * 36.0 + &values[3] * 16.0
                - &values[4] * 3.0)
                * d,
        );
        out.push(
            (&values[0] * -3.0 - &values[1] * 10.0 + &values[2] * 18.0 - &values[3] * 6.0
                + &values[4] * 1.0)
                * d,
        );
        for j in 2..n - 2 {
            out.push(
                (&values[j - 2] * 1.0 - &values[j - 1] * 8.0 + &values[j + 1] * 8.0
                    - &values[j + 2] * 1.0)
                    * d,
            );
        }
        out.push(
            (&values[n - 1] * 3.0 + &values[n - 2] * 10.0 - &values[n - 3] * 18.0
                + &values[n - 4] * 6.0
                - &values[n - 5] * 1.0)
                * d,
        );
        out.push(
            (&values[n - 1] * 25.0 - &values[n - 2] * 48.0 + &values[n - 3] * 36.0
                - &values[n - 4] * 16.0
                + &values[n - 5] * 3.0)
                * d,
        );
        return out;
    }
    for j in 0..n {
        let (ia, ib, ic) = if j == 0 {
            (0, 1, 2)
        } else if j == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (j - 1, j, j + 1)
        };
        let (wa, wb, wc) = lagrange_derivative_weights(nodes[ia], nodes[ib], nodes[ic], nodes[j]);
        out.push(&values[ia] * wa + &values[ib] * wb + &values[ic] * wc);
    }
    out
}

/// Cumulative trapezoid rule: out_j = ∫_0^{t_j} f(s) ds.
pub fn cumulative_trapezoid(f: &SampledFunction) -> SampledFunction {
    let nodes = f.grid().nodes();
    let mut values = Vec::with_capacity(nodes.len());
    values.push(DVector::zeros(f.dim()));
    for j in 1..nodes.len() {
        let h = nodes[j] - nodes[j - 1];
        let step = (f.value(j - 1) + f.value(j)) * (0.5 * h);
        let prev: &DVector<f64> = &values[j - 1];
        values.push(prev + step);
    }
    SampledFunction::new(f.grid().clone(), values).expect("trapezoid output is finite")
}

/// Cumulative weighted integral ∫_0^{t_j} s^power f(s) ds with exact moments
/// of the weight against the piecewise-linear interpolant of f; power > -1
/// admits an integrable singularity at the origin.
pub fn integrate_weighted(power: f64, f: &SampledFunction) -> Result<SampledFunction> {
    if !(power > -1.0) || !power.is_finite() {
        return Err(Error::Validation(format!(
            "weight exponent must be finite and > -1, got {power}"
        )));
    }
    let nodes = f.grid().nodes();
    let mut values = Vec::with_capacity(nodes.len());
    values.push(DVector::zeros(f.dim()));
    for j in 1..nodes.len() {
        let a = nodes[j - 1];
        let b = nodes[j];
        let h = b - a;
        let m0 = (b.powf(power + 1.0) - a.powf(power + 1.0)) / (power + 1.0);
        let m1 = (b.powf(power + 2.0) - a.powf(power + 2.0)) / (power + 2.0) - a * m0;
        let fa = f.value(j - 1);
        let fb = f.value(j);
        let step = fa * m0 + (fb - fa) * (m1 / h);
        let prev: &DVector<f64> = &values[j - 1];
        values.push(prev + step);
    }
    SampledFunction::new(f.grid().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_abs_diff_eq;

    fn sup_diff(a: &SampledFunction, b: &SampledFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_construction_and_validation() {
        let g = Grid::uniform(1.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.horizon(), 1.0);
        assert!(g.is_uniform());
        assert_abs_diff_eq!(g.step().unwrap(), 0.125);

        let gg = Grid::graded(1.0, 8, 2.0).unwrap();
        assert!(!gg.is_uniform());
        assert_abs_diff_eq!(gg.nodes()[4], 0.25);

        assert!(Grid::uniform(-1.0, 4).is_err());
        assert!(Grid::graded(1.0, 4, 0.5).is_err());
        assert!(Grid::from_nodes(vec![0.1, 0.5]).is_err());
        assert!(Grid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn g_kernel_closed_forms() {
        assert_abs_diff_eq!(g_kernel(1.0, 0.37).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g_kernel(2.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        // 1/Gamma(1.5) = 2/sqrt(pi)
        assert_abs_diff_eq!(
            g_kernel(1.5, 1.0).unwrap(),
            1.1283791670955126,
            epsilon = 1e-14
        );
        assert!(g_kernel(0.0, 1.0).is_err());
        assert!(g_kernel(1.0, 0.0).is_err());
    }

    #[test]
    fn convolve_g_is_exact_on_piecewise_linear_inputs() {
        let grid = Grid::uniform(1.0, 64).unwrap();
        let beta = 0.7;
        let ones = SampledFunction::from_scalar_fn(grid.clone(), |_| 1.0).unwrap();
        let out = convolve_g(beta, &ones).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate().skip(1) {
            let want = t.powf(beta) * recip_gamma(beta + 1.0);
            assert_abs_diff_eq!(out.scalar(j), want, epsilon = 1e-14);
        }

        let ramp = SampledFunction::from_scalar_fn(grid.clone(), |t| t).unwrap();
        let out = convolve_g(beta, &ramp).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate().skip(1) {
            let want = t.powf(beta + 1.0) * recip_gamma(beta + 2.0);
            assert_abs_diff_eq!(out.scalar(j), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn convolve_g_beta_zero_is_identity() {
        let grid = Grid::uniform(1.0, 16).unwrap();
        let f = SampledFunction::from_scalar_fn(grid, |t| (3.0 * t).sin()).unwrap();
        let out = convolve_g(0.0, &f).unwrap();
        assert_eq!(sup_diff(&out, &f), 0.0);
    }

    #[test]
    fn kernel_composition_g09_then_g06() {
        // g_{0.6} * g_{0.9} = g_{1.5}; the inner factor is sampled (0 at the
        // origin where g_{0.9} blows up), so this is a genuine quadrature test.
        let grid = Grid::uniform(1.0, 1024).unwrap();
        let g09 = SampledFunction::from_scalar_fn(grid.clone(), |t| {
            if t == 0.0 { 0.0 } else { g_kernel(0.9, t).unwrap() }
        })
        .unwrap();
        let out = convolve_g(0.6, &g09).unwrap();
        let want = g_kernel(1.5, 1.0).unwrap();
        let got = out.scalar(grid.len() - 1);
        assert!(
            (got - want).abs() < 5e-3,
            "g_0.6 * g_0.9 at t=1: got {got}, want {want}"
        );
    }

    #[test]
    fn fractional_power_rule() {
        // (g_0.5 * t^2)(1) = 2/Gamma(3.5); t^2 is not piecewise linear, so the
        // error is genuine quadrature error, second order in h.
        let grid = Grid::uniform(1.0, 512).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| t * t).unwrap();
        let out = convolve_g(0.5, &f).unwrap();
        let want = 2.0 / gamma(3.5);
        assert_abs_diff_eq!(want, 0.6018022224509400394113, epsilon = 1e-12);
        assert!((out.scalar(grid.len() - 1) - want).abs() < 1e-6);
    }

    #[test]
    fn convolve_g_linearity() {
        let grid = Grid::uniform(1.0, 32).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| (2.0 * t).cos()).unwrap();
        let g = SampledFunction::from_scalar_fn(grid, |t| t * t - 0.3).unwrap();
        let combo = f.combine(2.5, &g, -1.25).unwrap();
        let lhs = convolve_g(0.8, &combo).unwrap();
        let rhs = convolve_g(0.8, &f)
            .unwrap()
            .combine(2.5, &convolve_g(0.8, &g).unwrap(), -1.25)
            .unwrap();
        assert!(sup_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn convolve_g_causality() {
        let grid = Grid::uniform(1.0, 32).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| (5.0 * t).sin()).unwrap();
        let full = convolve_g(0.7, &f).unwrap();
        // Perturb the samples after node 20; outputs up to node 20 must not move.
        let mut vals = f.values().to_vec();
        for v in vals.iter_mut().skip(21) {
            v[0] += 17.0;
        }
        let perturbed = SampledFunction::new(grid, vals).unwrap();
        let out = convolve_g(0.7, &perturbed).unwrap();
        for j in 0..=20 {
            assert_eq!(out.scalar(j), full.scalar(j), "node {j} leaked future data");
        }
    }

    #[test]
    fn kernel_semigroup_order() {
        // |g_0.6 * (g_0.9 * f) - g_1.5 * f| should shrink at order ~2.
        let err_at = |n: usize| -> f64 {
            let grid = Grid::uniform(1.0, n).unwrap();
            let f = SampledFunction::from_scalar_fn(grid, |t| {
                (2.0 * std::f64::consts::PI * t).sin()
            })
            .unwrap();
            let once = convolve_g(1.5, &f).unwrap();
            let twice = convolve_g(0.6, &convolve_g(0.9, &f).unwrap()).unwrap();
            sup_diff(&once, &twice)
        };
        let e256 = err_at(256);
        let e512 = err_at(512);
        let e1024 = err_at(1024);
        assert!(e1024 < 5e-5, "semigroup error {e1024}");
        let order1 = (e256 / e512).log2();
        let order2 = (e512 / e1024).log2();
        assert!(order1 > 1.8 && order2 > 1.8, "orders {order1}, {order2}");
    }

    #[test]
    fn trapezoid_convolve_basics() {
        let grid = Grid::uniform(1.0, 128).unwrap();
        let one = SampledFunction::from_scalar_fn(grid.clone(), |_| 1.0).unwrap();
        let out = convolve(&one, &one).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert_abs_diff_eq!(out.scalar(j), t, epsilon = 1e-13);
        }
        // 1 * t = t^2/2
        let ramp = SampledFunction::from_scalar_fn(grid.clone(), |t| t).unwrap();
        let out = convolve(&ramp, &one).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert!((out.scalar(j) - t * t / 2.0).abs() < 1e-5);
        }
    }

    #[test]
    fn trapezoid_convolve_order_two() {
        let err_at = |n: usize| -> f64 {
            let grid = Grid::uniform(1.0, n).unwrap();
            let f = SampledFunction::from_scalar_fn(grid.clone(), |t| (1.3 * t).exp()).unwrap();
            let h = SampledFunction::from_scalar_fn(grid, |t| (2.0 * t).cos()).unwrap();
            let coarse = convolve(&f, &h).unwrap();
            // reference on a doubled grid, compared at shared nodes
            let fine_grid = Grid::uniform(1.0, 4 * n).unwrap();
            let ff = SampledFunction::from_scalar_fn(fine_grid.clone(), |t| (1.3 * t).exp()).unwrap();
            let hf = SampledFunction::from_scalar_fn(fine_grid, |t| (2.0 * t).cos()).unwrap();
            let fine = convolve(&ff, &hf).unwrap();
            (0..=n)
                .map(|j| (coarse.scalar(j) - fine.scalar(4 * j)).abs())
                .fold(0.0, f64::max)
        };
        let e64 = err_at(64);
        let e128 = err_at(128);
        let ratio = e64 / e128;
        assert!(ratio > 3.2 && ratio < 4.8, "Richardson ratio {ratio}");
    }

    #[test]
    fn convolve_grid_mismatch_is_rejected() {
        let f = SampledFunction::from_scalar_fn(Grid::uniform(1.0, 8).unwrap(), |t| t).unwrap();
        let h = SampledFunction::from_scalar_fn(Grid::uniform(1.0, 16).unwrap(), |t| t).unwrap();
        assert!(convolve(&f, &h).is_err());
    }

    #[test]
    fn caputo_annihilates_affine_functions() {
        let grid = Grid::uniform(1.0, 64).unwrap();
        let f = SampledFunction::from_scalar_fn(grid, |t| 0.7 - 1.3 * t).unwrap();
        let f0 = DVector::from_element(1, 0.7);
        let f1 = DVector::from_element(1, -1.3);
        let d = caputo(1.5, &f, &f0, &f1).unwrap();
        for j in 0..d.grid().len() {
            assert!(d.scalar(j).abs() <= 1e-10, "node {j}: {}", d.scalar(j));
        }
    }

    #[test]
    fn caputo_of_g_alpha_plus_one_is_one() {
        // D^α g_{α+1} = g_1 ≡ 1 (checked away from the boundary stencils).
        let alpha = 1.5;
        let grid = Grid::uniform(1.0, 512).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| {
            if t == 0.0 { 0.0 } else { g_kernel(alpha + 1.0, t).unwrap() }
        })
        .unwrap();
        let zero = DVector::zeros(1);
        let d = caputo(alpha, &f, &zero, &zero).unwrap();
        let n = grid.len();
        for j in 2..n - 2 {
            assert!(
                (d.scalar(j) - 1.0).abs() < 2e-3,
                "node {j}: {}",
                d.scalar(j)
            );
        }
    }

    #[test]
    fn caputo_needs_enough_nodes() {
        let grid = Grid::uniform(1.0, 3).unwrap();
        let f = SampledFunction::from_scalar_fn(grid, |t| t).unwrap();
        let z = DVector::zeros(1);
        assert!(caputo(1.5, &f, &z, &z).is_err());
    }

    #[test]
    fn first_derivative_is_exact_on_quartics() {
        let grid = Grid::uniform(2.0, 32).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| {
            t.powi(4) - 3.0 * t.powi(3) + 2.0 * t - 5.0
        })
        .unwrap();
        let d = first_derivative(&grid, f.values());
        for (j, &t) in grid.nodes().iter().enumerate() {
            let want = 4.0 * t.powi(3) - 9.0 * t * t + 2.0;
            assert_abs_diff_eq!(d[j][0], want, epsilon = 1e-10);
        }
    }

    #[test]
    fn first_derivative_fourth_order_on_smooth_data() {
        let grid = Grid::uniform(1.0, 64).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), f64::exp).unwrap();
        let d = first_derivative(&grid, f.values());
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert!(
                (d[j][0] - t.exp()).abs() < 1e-6,
                "node {j}: {} vs {}",
                d[j][0],
                t.exp()
            );
        }
    }

    #[test]
    fn first_derivative_on_graded_grid_is_exact_on_quadratics() {
        let grid = Grid::graded(1.0, 16, 3.0).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| 2.0 * t * t - t).unwrap();
        let d = first_derivative(&grid, f.values());
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert_abs_diff_eq!(d[j][0], 4.0 * t - 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn cumulative_trapezoid_integrates() {
        let grid = Grid::uniform(1.0, 256).unwrap();
        let f = SampledFunction::from_scalar_fn(grid.clone(), |t| (2.0 * t).cos()).unwrap();
        let c = cumulative_trapezoid(&f);
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert!(
                (c.scalar(j) - (2.0 * t).sin() / 2.0).abs() < 2e-5,
                "node {j}"
            );
        }
    }

    #[test]
    fn integrate_weighted_handles_singular_weights_exactly() {
        // ∫_0^t s^{-0.5} ds = 2 sqrt(t), with a piecewise-linear f ≡ 1 the
        // moments are exact, so only roundoff remains.
        let grid = Grid::uniform(1.0, 64).unwrap();
        let one = SampledFunction::from_scalar_fn(grid.clone(), |_| 1.0).unwrap();
        let w = integrate_weighted(-0.5, &one).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert_abs_diff_eq!(w.scalar(j), 2.0 * t.sqrt(), epsilon = 1e-13);
        }
        // ∫_0^t s^{0.5} s ds = (2/5) t^{5/2} likewise (f(s) = s is linear).
        let id = SampledFunction::from_scalar_fn(grid.clone(), |t| t).unwrap();
        let w = integrate_weighted(0.5, &id).unwrap();
        for (j, &t) in grid.nodes().iter().enumerate() {
            assert_abs_diff_eq!(w.scalar(j), 0.4 * t.powf(2.5), epsilon = 1e-13);
        }
        assert!(integrate_weighted(-1.0, &one).is_err());
    }
}
