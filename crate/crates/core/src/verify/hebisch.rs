//! Weighted `L¹` bounds for kernels `g(2^{−j}H)` against `‖g‖_{H^s}`.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::report::{spread, Status, Table, VerificationReport};
use crate::calculus::spectral_kernel;
use crate::error::{invalid, Error, Result};
use crate::operator::EigenDecomposition;

/// Quadrature grid for `‖g‖_{H^s}`: `2^14` points on `[−16, 16]`.
pub const SOBOLEV_POINTS: usize = 1 << 14;
pub const SOBOLEV_HALFWIDTH: f64 = 16.0;
/// `g` must vanish outside `[−10, 10]`.
pub const SUPPORT_RADIUS: f64 = 10.0;

/// `‖g‖_{H^s(ℝ)} = ((2π)^{−1} ∫ (1 + ξ²)^s |ĝ(ξ)|² dξ)^{1/2}` by a discrete
/// Fourier transform of `g` sampled on `[−16, 16)`.
pub fn sobolev_norm(g: impl Fn(f64) -> f64, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(invalid("Sobolev index must be finite"));
    }
    let m = SOBOLEV_POINTS;
    let dx = 2.0 * SOBOLEV_HALFWIDTH / m as f64;
    let mut buf: Vec<Complex<f64>> = (0..m)
        .map(|k| Complex::new(g(-SOBOLEV_HALFWIDTH + k as f64 * dx), 0.0))
        .collect();
    if buf.iter().any(|c| !c.re.is_finite()) {
        return Err(Error::NonFinite("profile sample".into()));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dxi = 2.0 * std::f64::consts::PI / (m as f64 * dx);
    let total: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let freq = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
            let xi = freq * dxi;
            (1.0 + xi * xi).powf(s) * c.norm_sqr() * dx * dx
        })
        .sum();
    Ok((total * dxi / (2.0 * std::f64::consts::PI)).sqrt())
}

fn check_support(g: &dyn Fn(f64) -> f64) -> Result<()> {
    let probes = 4096;
    for k in 0..=probes {
        let x = SUPPORT_RADIUS + 1e-9 + (2.0 * SOBOLEV_HALFWIDTH - SUPPORT_RADIUS) * k as f64 / probes as f64;
        if g(x) != 0.0 || g(-x) != 0.0 {
            return Err(invalid(format!("profile is nonzero at |x| = {x:.4}, outside [−10, 10]")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HebischOptions {
    pub betas: Vec<f64>,
    pub sobolev_index: f64,
    pub j_min: i32,
    pub j_max: i32,
    /// Ceiling on the spread across `j` of the weighted `L¹` suprema.
    pub ceiling: f64,
}

impl Default for HebischOptions {
    fn default() -> Self {
        Self { betas: vec![0.0, 2.0], sobolev_index: 3.5, j_min: 0, j_max: 8, ceiling: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HebischRow {
    pub j: i32,
    pub beta: f64,
    /// `sup_y ‖g(2^{−j}H)(·, y) ⟨2^{j/2}(· − y)⟩^β‖_{L¹}`.
    pub sup: f64,
    pub argmax_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HebischCheck {
    pub rows: Vec<HebischRow>,
    pub sobolev_norm: f64,
    pub sobolev_index: f64,
    /// Per `β`: (`β`, spread across `j`, `sup_j / ‖g‖_{H^s}`).
    pub summary: Vec<(f64, Option<f64>, f64)>,
    pub ceiling: f64,
}

impl HebischCheck {
    pub fn passed(&self) -> bool {
        let finite = self.rows.iter().all(|r| r.sup.is_finite());
        finite && self.summary.iter().all(|(_, s, _)| s.is_some_and(|s| s <= self.ceiling))
    }

    pub fn report(&self) -> Result<VerificationReport> {
        let status = if self.passed() { Status::Pass } else { Status::Fail };
        let mut r = VerificationReport::new("hebisch", status);
        let mut t = Table::new("weighted_l1", &["j", "beta", "sup_weighted_l1", "argmax_y"]);
        for row in &self.rows {
            t.push(vec![row.j.into(), row.beta.into(), row.sup.into(), format!("{:?}", row.argmax_y).into()])?;
        }
        let mut s = Table::new("summary", &["beta", "spread", "ratio_to_sobolev", "ceiling"]);
        for &(beta, sp, ratio) in &self.summary {
            s.push(vec![beta.into(), sp.into(), ratio.into(), self.ceiling.into()])?;
        }
        r.set("sobolev_norm", self.sobolev_norm);
        r.set("sobolev_index", self.sobolev_index);
        r.tables = vec![t, s];
        Ok(r)
    }
}

/// Weighted `L¹` suprema of `g(2^{−j}H)` kernels for `j` in range, with
/// `⟨z⟩ = 1 + |z|`.
pub fn hebisch_check(ed: &EigenDecomposition, g: &(dyn Fn(f64) -> f64 + Sync), opts: &HebischOptions) -> Result<HebischCheck> {
    if ed.potential_min() < 0.0 {
        return Err(invalid("the weighted L¹ check needs a nonnegative potential"));
    }
    if opts.j_min > opts.j_max {
        return Err(invalid("empty j range"));
    }
    if opts.betas.iter().any(|b| !(*b >= 0.0)) {
        return Err(invalid("beta must be ≥ 0"));
    }
    let n = ed.grid().dimension() as f64;
    let beta_max = opts.betas.iter().copied().fold(0.0, f64::max);
    if !(opts.sobolev_index > 0.5 * (n + 1.0) + beta_max) {
        return Err(invalid(format!(
            "Sobolev index {} must exceed (n + 1)/2 + β = {}",
            opts.sobolev_index,
            0.5 * (n + 1.0) + beta_max
        )));
    }
    check_support(g)?;
    let norm = sobolev_norm(g, opts.sobolev_index)?;
    let grid = ed.grid().clone();
    let weights = grid.weights();
    let mut rows = Vec::new();
    for j in opts.j_min..=opts.j_max {
        let scale = (-f64::from(j)).exp2();
        let kernel = spectral_kernel(ed, |l| g(scale * l), false)?;
        let a = (0.5 * f64::from(j)).exp2();
        for &beta in &opts.betas {
            let per_y: Vec<f64> = (0..grid.len())
                .into_par_iter()
                .map(|y| {
                    (0..grid.len())
                        .map(|x| {
                            let bracket = 1.0 + a * grid.distance(x, y);
                            weights[x] * kernel.value(x, y).abs() * bracket.powf(beta)
                        })
                        .sum::<f64>()
                })
                .collect();
            let (arg, sup) = per_y
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0f64), |(ba, bv), (k, v)| if v > bv { (k, v) } else { (ba, bv) });
            rows.push(HebischRow { j, beta, sup, argmax_y: grid.point(arg)[..grid.dimension()].to_vec() });
        }
    }
    let summary = opts
        .betas
        .iter()
        .map(|&beta| {
            let sups: Vec<f64> = rows.iter().filter(|r| r.beta == beta).map(|r| r.sup).collect();
            let top = sups.iter().copied().fold(0.0, f64::max);
            (beta, spread(sups), if norm > 0.0 { top / norm } else { 0.0 })
        })
        .collect();
    Ok(HebischCheck { rows, sobolev_norm: norm, sobolev_index: opts.sobolev_index, summary, ceiling: opts.ceiling })
}
