//! Uniform tensor grids on `[-L, L]^n`, grid-borne functions and the
//! discrete `L_p` / mixed-norm machinery.
//!
//! Quadrature is the trapezoid rule: interior nodes carry weight `h^n`,
//! nodes on the boundary of the box carry `h^n / 2^b` where `b` is the
//! number of axes on which the node sits at `±L`. The weights therefore sum
//! to `(2L)^n` exactly. Every function produced by the spectral calculus
//! vanishes on the boundary (Dirichlet), so for those the rule is the plain
//! Riemann sum `h^n Σ f`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MIN_POINTS_PER_AXIS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: usize,
    halfwidth: f64,
    points_per_axis: usize,
    spacing: f64,
    axis: Vec<f64>,
}

impl Grid {
    /// Builds the grid with `points_per_axis` nodes per axis, including
    /// both endpoints `±L`.
    pub fn new(dimension: usize, halfwidth: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::Unsupported(format!(
                "dimension {dimension}; only n = 1 and n = 2 are supported"
            )));
        }
        if !halfwidth.is_finite() || halfwidth <= 0.0 {
            return Err(invalid(format!("halfwidth must be finite and > 0, got {halfwidth}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS {
            return Err(invalid(format!(
                "points_per_axis must be at least {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        let spacing = 2.0 * halfwidth / (points_per_axis - 1) as f64;
        // Fill from both ends so the axis is symmetric about 0 bit-for-bit.
        let mut axis = vec![0.0; points_per_axis];
        for i in 0..points_per_axis {
            let mirror = points_per_axis - 1 - i;
            if i > mirror {
                break;
            }
            let x = -halfwidth + i as f64 * spacing;
            let x = if i == mirror { 0.0 } else { x };
            axis[i] = x;
            axis[mirror] = -x;
        }
        Ok(Self { dimension, halfwidth, points_per_axis, spacing, axis })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat node index. Axis 0 varies slowest.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        match self.dimension {
            1 => [node, 0],
            _ => [node / self.points_per_axis, node % self.points_per_axis],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.dimension {
            1 => idx[0],
            _ => idx[0] * self.points_per_axis + idx[1],
        }
    }

    /// Coordinates of a node; the second entry is 0 in one dimension.
    pub fn point(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        match self.dimension {
            1 => [self.axis[i], 0.0],
            _ => [self.axis[i], self.axis[j]],
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (pa, pb) = (self.point(a), self.point(b));
        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let last = self.points_per_axis - 1;
        let idx = self.multi_index(node);
        idx[..self.dimension].iter().any(|&i| i == 0 || i == last)
    }

    /// Interior (non-boundary) node indices in ascending order.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// Weight of the interior nodes, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    pub fn weight(&self, node: usize) -> f64 {
        let last = self.points_per_axis - 1;
        let idx = self.multi_index(node);
        idx[..self.dimension].iter().fold(self.cell_volume(), |w, &i| {
            if i == 0 || i == last {
                w * 0.5
            } else {
                w
            }
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }
}

/// Convenience constructor returning a shared grid.
pub fn make_grid(dimension: usize, halfwidth: f64, points_per_axis: usize) -> Result<Arc<Grid>> {
    Grid::new(dimension, halfwidth, points_per_axis).map(Arc::new)
}

/// A real-valued function sampled on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid function value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every node. Non-finite samples are rejected.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        Self::from_parts_unchecked(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts_unchecked(self.grid.clone(), values))
    }

    pub fn abs_max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Quadrature inner product `Σ w u v`.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(weighted_dot(&self.grid, &self.values, &other.values))
    }
}

pub(crate) fn weighted_dot(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).enumerate().map(|(k, (a, b))| grid.weight(k) * a * b).sum()
}

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(invalid(format!("{name} must lie in (0, ∞], got {p}")));
    }
    Ok(())
}

fn lp_of_values(grid: &Grid, values: &[f64], p: f64) -> f64 {
    if p == f64::INFINITY {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| grid.weight(k) * v.abs().powf(p))
        .sum();
    sum.powf(1.0 / p)
}

/// `(Σ w |f|^p)^{1/p}`; `p = ∞` gives `max |f|`. For `p < 1` this is a
/// quasi-norm.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    Ok(lp_of_values(&f.grid, &f.values, p))
}

/// Order of the two norms in a mixed norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedMode {
    /// `‖(Σ_j (2^{jα}|f_j|)^q)^{1/q}‖_p` (Triebel-Lizorkin shape).
    LpOfLq,
    /// `(Σ_j (2^{jα}‖f_j‖_p)^q)^{1/q}` (Besov shape).
    LqOfLp,
}

/// An indexed family `{f_j}` on one grid.
#[derive(Debug, Clone)]
pub struct Stack {
    indices: Vec<i32>,
    members: Vec<GridFunction>,
}

impl Stack {
    pub fn new(indices: Vec<i32>, members: Vec<GridFunction>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("stack"));
        }
        if indices.len() != members.len() {
            return Err(invalid("stack index count differs from member count"));
        }
        if members.iter().any(|m| !m.same_grid(&members[0])) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { indices, members })
    }

    pub fn indices(&self) -> &[i32] {
        &self.indices
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.members[0].grid()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &GridFunction)> {
        self.indices.iter().copied().zip(self.members.iter())
    }
}

fn lq_combine(terms: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q == f64::INFINITY {
        terms.fold(0.0f64, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Pointwise `(Σ_j (2^{jα}|f_j(x)|)^q)^{1/q}`.
pub fn pointwise_lq(stack: &Stack, alpha: f64, q: f64) -> Result<GridFunction> {
    check_exponent(q, "q")?;
    let n = stack.grid().len();
    let scales: Vec<f64> = stack.indices.iter().map(|&j| (j as f64 * alpha).exp2()).collect();
    let values = (0..n)
        .map(|k| {
            lq_combine(
                stack.members.iter().zip(&scales).map(|(f, s)| s * f.values[k].abs()),
                q,
            )
        })
        .collect();
    Ok(GridFunction::from_parts_unchecked(stack.grid().clone(), values))
}

/// Mixed `L_p(ℓ^q)` or `ℓ^q(L_p)` norm of a weighted family with weights
/// `2^{jα}`.
pub fn mixed_norm(stack: &Stack, alpha: f64, p: f64, q: f64, mode: MixedMode) -> Result<f64> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    match mode {
        MixedMode::LpOfLq => lp_norm(&pointwise_lq(stack, alpha, q)?, p),
        MixedMode::LqOfLp => {
            let grid = stack.grid();
            let terms = stack
                .iter()
                .map(|(j, f)| (j as f64 * alpha).exp2() * lp_of_values(grid, &f.values, p));
            Ok(lq_combine(terms, q))
        }
    }
}

/// Fourth-order first derivative of samples along one axis with spacing
/// `h`. The two nodes next to each end use one-sided five-point stencils.
pub fn derivative_1d(values: &[f64], h: f64, out: &mut [f64]) {
    let n = values.len();
    assert_eq!(out.len(), n);
    let f = values;
    if n < 5 {
        // Too short for the 4th-order stencils; fall back to second order.
        for (i, o) in out.iter_mut().enumerate() {
            *o = match (i, n) {
                (_, 1) => 0.0,
                (0, _) => (f[1] - f[0]) / h,
                (i, n) if i == n - 1 => (f[n - 1] - f[n - 2]) / h,
                (i, _) => (f[i + 1] - f[i - 1]) / (2.0 * h),
            };
        }
        return;
    }
    let d = 12.0 * h;
    out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / d;
    out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / d;
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / d;
    }
    let m = n - 1;
    out[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / d;
    out[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / d;
}

/// Partial derivative of node values along `axis` (flat layout of `grid`).
pub(crate) fn partial_derivative(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let p = grid.points_per_axis();
    let h = grid.spacing();
    let mut out = vec![0.0; values.len()];
    match (grid.dimension(), axis) {
        (1, 0) => derivative_1d(values, h, &mut out),
        (2, 1) => {
            for (row, dst) in values.chunks(p).zip(out.chunks_mut(p)) {
                derivative_1d(row, h, dst);
            }
        }
        (2, 0) => {
            let mut line = vec![0.0; p];
            let mut d = vec![0.0; p];
            for col in 0..p {
                for i in 0..p {
                    line[i] = values[i * p + col];
                }
                derivative_1d(&line, h, &mut d);
                for i in 0..p {
                    out[i * p + col] = d[i];
                }
            }
        }
        _ => panic!("axis {axis} out of range for dimension {}", grid.dimension()),
    }
    out
}

/// Gradient components of `f`, one grid function per axis.
pub fn gradient(f: &GridFunction) -> Vec<GridFunction> {
    (0..f.grid.dimension())
        .map(|axis| {
            GridFunction::from_parts_unchecked(
                f.grid.clone(),
                partial_derivative(&f.grid, &f.values, axis),
            )
        })
        .collect()
}

/// Pointwise Euclidean norm of the gradient.
pub fn gradient_magnitude(f: &GridFunction) -> GridFunction {
    let parts = gradient(f);
    let values = (0..f.grid.len())
        .map(|k| parts.iter().map(|g| g.values[k].powi(2)).sum::<f64>().sqrt())
        .collect();
    GridFunction::from_parts_unchecked(f.grid.clone(), values)
}
