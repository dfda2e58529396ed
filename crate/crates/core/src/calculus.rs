//! Spectral functional calculus `φ(H)` over an [`EigenDecomposition`].
//!
//! Kernels are continuum-normalized: `(K f)(x) = Σ_y w(y) K(x, y) f(y)`, so
//! `K(x, y) = Σ_k φ(λ_k) e_k(x) e_k(y)` with quadrature-normalized `e_k`
//! approximates the integral kernel `φ(H)(x, y)` directly.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{partial_derivative, Grid, GridFunction};
use crate::operator::EigenDecomposition;

/// Heat-kernel eigen-series are truncated once `e^{−tλ}` drops below this
/// fraction of the leading factor.
pub const HEAT_SERIES_CUTOFF: f64 = 1e-16;

/// A two-point function on a grid, with optional x-gradient components.
#[derive(Debug, Clone)]
pub struct Kernel {
    grid: Arc<Grid>,
    /// `values[(x, y)]`.
    values: DMatrix<f64>,
    gradient: Option<Vec<DMatrix<f64>>>,
}

impl Kernel {
    pub fn new(grid: Arc<Grid>, values: DMatrix<f64>, gradient: Option<Vec<DMatrix<f64>>>) -> Result<Self> {
        let n = grid.len();
        if values.shape() != (n, n) {
            return Err(invalid("kernel shape does not match the grid"));
        }
        if let Some(g) = &gradient {
            if g.len() != grid.dimension() || g.iter().any(|m| m.shape() != (n, n)) {
                return Err(invalid("kernel gradient shape does not match the grid"));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel entry".into()));
        }
        Ok(Self { grid, values, gradient })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }

    pub fn gradient(&self) -> Option<&[DMatrix<f64>]> {
        self.gradient.as_deref()
    }

    /// `|∇ₓ K(x, y)|`, if the gradient was computed.
    pub fn gradient_norm(&self, x: usize, y: usize) -> Option<f64> {
        self.gradient
            .as_ref()
            .map(|g| g.iter().map(|m| m[(x, y)].powi(2)).sum::<f64>().sqrt())
    }

    /// Always true: kernels are stored so that application uses the
    /// quadrature weights of the grid.
    pub fn continuum_normalized(&self) -> bool {
        true
    }

    /// `(K f)(x) = Σ_y w(y) K(x, y) f(y)`.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let wf = nalgebra::DVector::from_iterator(
            self.grid.len(),
            f.values().iter().enumerate().map(|(k, v)| self.grid.weight(k) * v),
        );
        let out = &self.values * wf;
        Ok(GridFunction::from_parts_unchecked(self.grid.clone(), out.iter().copied().collect()))
    }

    /// Quadrature composition `(A ∘ B)(x, y) = Σ_z w(z) A(x, z) B(z, y)`.
    pub fn compose(&self, other: &Kernel) -> Result<Kernel> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let mut right = other.values.clone();
        for (z, mut row) in right.row_iter_mut().enumerate() {
            row *= self.grid.weight(z);
        }
        Ok(Kernel { grid: self.grid.clone(), values: &self.values * right, gradient: None })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in x + 1..n {
                worst = worst.max((self.values[(x, y)] - self.values[(y, x)]).abs());
            }
        }
        worst
    }

    /// Rows `(x-index, y-index, value)` for offline plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_index,y_index,value\n");
        let n = self.values.nrows();
        for x in 0..n {
            for y in 0..n {
                out.push_str(&format!("{x},{y},{:e}\n", self.values[(x, y)]));
            }
        }
        out
    }
}

fn spectral_weights(ed: &EigenDecomposition, phi: &(impl Fn(f64) -> f64 + ?Sized)) -> Result<Vec<f64>> {
    ed.eigenvalues()
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let v = phi(l);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("φ(λ_{k}) at λ = {l}")))
            }
        })
        .collect()
}

/// `φ(H) f = Σ_k φ(λ_k) ⟨e_k, f⟩ e_k`.
pub fn apply_spectral(ed: &EigenDecomposition, phi: impl Fn(f64) -> f64, f: &GridFunction) -> Result<GridFunction> {
    let weights = spectral_weights(ed, &phi)?;
    let mut coef = ed.coefficients(f)?;
    for (c, w) in coef.iter_mut().zip(&weights) {
        *c *= w;
    }
    Ok(ed.synthesize(&coef))
}

/// `φ(H)(x, y) = Σ_k φ(λ_k) e_k(x) e_k(y)`, summing only the eigenvalues
/// where `φ` is nonzero. With `with_gradient`, `∇ₓ` is taken by fourth-order
/// finite differences along each axis (one-sided next to the boundary).
pub fn spectral_kernel(ed: &EigenDecomposition, phi: impl Fn(f64) -> f64, with_gradient: bool) -> Result<Kernel> {
    let weights = spectral_weights(ed, &phi)?;
    let active: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] != 0.0).collect();
    let grid = ed.grid().clone();
    let n = grid.len();
    let values = if active.is_empty() {
        DMatrix::zeros(n, n)
    } else {
        let vecs = ed.eigenvectors().select_columns(active.iter());
        let mut scaled = vecs.clone();
        for (col, &k) in active.iter().enumerate() {
            scaled.column_mut(col).scale_mut(weights[k]);
        }
        scaled * vecs.transpose()
    };
    let gradient = with_gradient.then(|| kernel_gradient(&grid, &values));
    Kernel::new(grid, values, gradient)
}

/// Finite-difference `∇ₓ` of every column `K(·, y)`.
pub(crate) fn kernel_gradient(grid: &Grid, values: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = grid.len();
    (0..grid.dimension())
        .map(|axis| {
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|y| partial_derivative(grid, values.column(y).as_slice(), axis))
                .collect();
            DMatrix::from_fn(n, n, |x, y| cols[y][x])
        })
        .collect()
}

/// `e^{−tH}` by its eigen-series.
pub fn heat_kernel_eigen(ed: &EigenDecomposition, t: f64, with_gradient: bool) -> Result<Kernel> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("heat time must be > 0, got {t}")));
    }
    let lambda0 = ed.eigenvalues()[0];
    spectral_kernel(
        ed,
        |l| {
            // Truncation relative to the bottom of the spectrum.
            if (-(l - lambda0) * t).exp() < HEAT_SERIES_CUTOFF {
                0.0
            } else {
                (-t * l).exp()
            }
        },
        with_gradient,
    )
}

/// Closed-form Mehler kernel for `−Δ + |x|²` at time `t`, evaluated at
/// arbitrary points.
///
/// Uses the cancellation-free form of the exponent,
/// `−|x−y|² coth(t)/4 − |x+y|² tanh(t)/4`, per dimension.
pub fn mehler_value(dimension: usize, t: f64, x: &[f64], y: &[f64]) -> f64 {
    let (coth, tanh) = (1.0 / t.tanh(), t.tanh());
    let mut exponent = 0.0;
    for i in 0..dimension {
        let d = x[i] - y[i];
        let s = x[i] + y[i];
        exponent -= d * d * coth / 4.0 + s * s * tanh / 4.0;
    }
    mehler_prefactor(dimension, t) * exponent.exp()
}

fn mehler_prefactor(dimension: usize, t: f64) -> f64 {
    // (2π sinh 2t)^{−n/2}; sinh overflow gives 0, not NaN.
    (2.0 * std::f64::consts::PI * (2.0 * t).sinh()).powf(-(dimension as f64) / 2.0)
}

/// `∇ₓ` of the Mehler kernel: `K · (−coth(2t) x + cosech(2t) y)`.
pub fn mehler_gradient(dimension: usize, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
    let k = mehler_value(dimension, t, x, y);
    let tanh = t.tanh();
    for i in 0..dimension {
        // −coth(2t) x + cosech(2t) y, rewritten through tanh(t).
        let factor = -(x[i] - y[i]) / (2.0 * tanh) - (x[i] + y[i]) * tanh / 2.0;
        out[i] = if k == 0.0 { 0.0 } else { k * factor };
    }
}

/// Mehler kernel on every node pair of `grid`.
pub fn mehler_kernel(grid: &Arc<Grid>, t: f64, with_gradient: bool) -> Result<Kernel> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("heat time must be > 0, got {t}")));
    }
    let n = grid.len();
    let dim = grid.dimension();
    let pts = grid.points();
    let values = DMatrix::from_fn(n, n, |a, b| mehler_value(dim, t, &pts[a], &pts[b]));
    let gradient = with_gradient.then(|| {
        (0..dim)
            .map(|axis| {
                DMatrix::from_fn(n, n, |a, b| {
                    let mut g = [0.0; 2];
                    mehler_gradient(dim, t, &pts[a], &pts[b], &mut g);
                    g[axis]
                })
            })
            .collect()
    });
    Kernel::new(grid.clone(), values, gradient)
}
