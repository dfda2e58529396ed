//! Hardy-Littlewood and Peetre maximal functions on a grid.
//!
//! Suprema over `t ∈ ℝ^n` are taken over grid nodes only, and balls over
//! the dyadic radii `h·2^m`; both bias the discrete maximal functions
//! slightly downward relative to their continuum counterparts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::apply_spectral;
use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::grid::{gradient_magnitude, Grid, GridFunction};
use crate::operator::EigenDecomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalConfig {
    radii: Vec<f64>,
}

impl MaximalConfig {
    /// Radii `h·2^m`, `m = 0, 1, ...`, up to `2L`.
    pub fn dyadic(grid: &Grid) -> Self {
        let h = grid.spacing();
        let top = 2.0 * grid.halfwidth();
        let radii = (0..)
            .map(|m| h * f64::from(m).exp2())
            .take_while(|&r| r <= top * (1.0 + 1e-12))
            .collect();
        Self { radii }
    }

    pub fn with_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::Empty("radius set"));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("radii must be positive and strictly increasing"));
        }
        Ok(Self { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

// Node count `floor(v)` robust to `v` landing a hair under an integer.
fn node_reach(v: f64) -> usize {
    (v * (1.0 + 1e-12) + 1e-12).floor().max(0.0) as usize
}

/// Prefix sums per row (axis 0 index) of `w|f|` and `w`.
struct RowPrefix {
    p: usize,
    rows: usize,
    mass: Vec<f64>,
    measure: Vec<f64>,
}

impl RowPrefix {
    fn new(grid: &Grid, values: &[f64]) -> Self {
        let p = grid.points_per_axis();
        let (rows, width) = if grid.dimension() == 1 { (1, p) } else { (p, p) };
        let mut mass = vec![0.0; rows * (width + 1)];
        let mut measure = vec![0.0; rows * (width + 1)];
        for r in 0..rows {
            for c in 0..width {
                let node = r * width + c;
                let w = grid.weight(node);
                let base = r * (width + 1);
                mass[base + c + 1] = mass[base + c] + w * values[node].abs();
                measure[base + c + 1] = measure[base + c] + w;
            }
        }
        Self { p, rows, mass, measure }
    }

    /// Sums over columns `[lo, hi]` of row `r`.
    fn segment(&self, r: usize, lo: usize, hi: usize) -> (f64, f64) {
        let base = r * (self.p + 1);
        (
            self.mass[base + hi + 1] - self.mass[base + lo],
            self.measure[base + hi + 1] - self.measure[base + lo],
        )
    }
}

/// Discrete Hardy-Littlewood maximal function: at every node the largest
/// weighted average of `|f|` over the balls `B(x, r_m) ∩ grid`.
pub fn hl_maximal(f: &GridFunction, cfg: &MaximalConfig) -> GridFunction {
    let grid = f.grid().clone();
    let prefix = RowPrefix::new(&grid, f.values());
    let h = grid.spacing();
    let p = grid.points_per_axis();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let [i0, i1] = grid.multi_index(node);
            let (row, col) = if grid.dimension() == 1 { (0, i0) } else { (i0, i1) };
            let mut best = 0.0f64;
            for &r in &cfg.radii {
                let reach = r / h;
                let (mut mass, mut measure) = (0.0, 0.0);
                let row_reach = if prefix.rows == 1 { 0 } else { node_reach(reach) };
                let r_lo = row.saturating_sub(row_reach);
                let r_hi = (row + row_reach).min(prefix.rows - 1);
                for rr in r_lo..=r_hi {
                    let dr = rr.abs_diff(row) as f64;
                    let span = node_reach((reach * reach - dr * dr).max(0.0).sqrt());
                    let lo = col.saturating_sub(span);
                    let hi = (col + span).min(p - 1);
                    let (m, w) = prefix.segment(rr, lo, hi);
                    mass += m;
                    measure += w;
                }
                if measure > 0.0 {
                    best = best.max(mass / measure);
                }
            }
            best.max(f.values()[node].abs())
        })
        .collect();
    GridFunction::from_parts_unchecked(grid, values)
}

/// `[M(|f|^r)]^{1/r}`.
pub fn hl_maximal_power(f: &GridFunction, r: f64, cfg: &MaximalConfig) -> Result<GridFunction> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("r must lie in (0, ∞), got {r}")));
    }
    let powered = f.map(|v| v.abs().powf(r));
    Ok(hl_maximal(&powered, cfg).map(|v| v.powf(1.0 / r)))
}

/// `sup_t |v(t)| / (1 + scale·|x − t|)^s` over grid nodes `t`.
///
/// Distances only depend on the node offset, so the damping factor is
/// tabulated once per offset and the supremum runs in log space. The
/// `t = x` term is taken exactly, so the result is never below `|v(x)|`.
pub fn peetre_supremum(v: &GridFunction, scale: f64, s: f64) -> Result<GridFunction> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid(format!("s must be > 0, got {s}")));
    }
    let grid = v.grid().clone();
    let h = grid.spacing();
    let p = grid.points_per_axis();
    let dim = grid.dimension();
    let side = if dim == 1 { 1 } else { p };
    let damping: Vec<f64> = (0..p * side)
        .map(|k| {
            let (a, b) = if dim == 1 { (k, 0) } else { (k / side, k % side) };
            let d = h * ((a * a + b * b) as f64).sqrt();
            -s * (scale * d).ln_1p()
        })
        .collect();
    let logs: Vec<(usize, f64)> = v
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(k, &x)| (k, x.abs().ln()))
        .collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let [xi, xj] = grid.multi_index(x);
            let mut best = f64::NEG_INFINITY;
            for &(t, lt) in &logs {
                let [ti, tj] = grid.multi_index(t);
                let off = if dim == 1 { xi.abs_diff(ti) } else { xi.abs_diff(ti) * side + xj.abs_diff(tj) };
                best = best.max(lt + damping[off]);
            }
            v.values()[x].abs().max(best.exp())
        })
        .collect();
    Ok(GridFunction::from_parts_unchecked(grid, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeetreOrder {
    /// `φ*_{j,s}`: damped supremum of `|φ_j(H) f|`.
    Star,
    /// `φ**_{j,s}`: damped supremum of `|∇ φ_j(H) f|`.
    StarStar,
}

/// Peetre maximal function of an already computed block `g = φ_j(H) f`.
pub fn peetre_of_block(block: &GridFunction, j: i32, s: f64, order: PeetreOrder) -> Result<GridFunction> {
    let scale = (0.5 * f64::from(j)).exp2();
    match order {
        PeetreOrder::Star => peetre_supremum(block, scale, s),
        PeetreOrder::StarStar => peetre_supremum(&gradient_magnitude(block), scale, s),
    }
}

/// `φ*_{j,s} f` or `φ**_{j,s} f` with the supremum over grid nodes.
pub fn peetre_maximal(
    system: &DyadicSystem,
    ed: &EigenDecomposition,
    j: i32,
    s: f64,
    f: &GridFunction,
    order: PeetreOrder,
) -> Result<GridFunction> {
    if j < system.j_min() || j > system.j_max() {
        return Err(invalid(format!(
            "j = {j} outside the system range [{}, {}]",
            system.j_min(),
            system.j_max()
        )));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid(format!("s must be > 0, got {s}")));
    }
    let block = apply_spectral(ed, |l| system.eval(j, l), f)?;
    peetre_of_block(&block, j, s, order)
}
