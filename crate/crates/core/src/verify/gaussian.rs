//! Piecewise Gaussian upper bounds for the Hermite heat kernel.
//!
//! The bound is stated for `p_{t/2}`, the kernel of `e^{−tH/2}`:
//!
//! * `t ≤ t₀`: `|∇^α p_{t/2}(x,y)| ≤ c t^{−(n+α)/2} e^{−c₀|x−y|²/t}`
//! * `t > t₀`: `|∇^α p_{t/2}(x,y)| ≤ c e^{−nt/2} e^{−c₁|x−y|²}`
//!
//! with `0 < c₀, c₁ < 1` and `t₀ > 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{Status, Table, VerificationReport};
use crate::calculus::{mehler_gradient, mehler_value};
use crate::error::{invalid, Error, Result};

/// `|∇ₓ^α p_{t/2}(x, y)|` on a lattice of point pairs, per `t`.
#[derive(Debug, Clone)]
pub struct HeatSamples {
    dimension: usize,
    alpha: u8,
    times: Vec<f64>,
    pairs: Vec<([f64; 2], [f64; 2])>,
    dist2: Vec<f64>,
    /// `values[t][pair]`.
    values: Vec<Vec<f64>>,
}

impl HeatSamples {
    /// Build from an arbitrary kernel evaluator `kernel(t, x, y)`.
    pub fn from_fn(
        dimension: usize,
        alpha: u8,
        times: &[f64],
        points: &[[f64; 2]],
        kernel: impl Fn(f64, &[f64], &[f64]) -> f64 + Sync,
    ) -> Result<Self> {
        if times.is_empty() || points.is_empty() {
            return Err(Error::Empty("heat samples"));
        }
        if times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("sample times must be positive"));
        }
        let pairs: Vec<_> = points.iter().flat_map(|&x| points.iter().map(move |&y| (x, y))).collect();
        let dist2 = pairs
            .iter()
            .map(|(x, y)| (0..dimension).map(|a| (x[a] - y[a]).powi(2)).sum())
            .collect();
        let values = times
            .par_iter()
            .map(|&t| pairs.iter().map(|(x, y)| kernel(t, &x[..dimension], &y[..dimension]).abs()).collect())
            .collect();
        Ok(Self { dimension, alpha, times: times.to_vec(), pairs, dist2, values })
    }

    /// Mehler kernel samples (heat time `t/2`) on the lattice
    /// `{−window + k·step}^n`.
    pub fn mehler(dimension: usize, alpha: u8, times: &[f64], window: f64, step: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) || alpha > 1 {
            return Err(invalid("dimension must be 1 or 2 and alpha 0 or 1"));
        }
        if !(window > 0.0 && step > 0.0) {
            return Err(invalid("window and step must be positive"));
        }
        let m = (2.0 * window / step).round() as usize + 1;
        let axis: Vec<f64> = (0..m).map(|k| -window + k as f64 * step).collect();
        let points: Vec<[f64; 2]> = if dimension == 1 {
            axis.iter().map(|&x| [x, 0.0]).collect()
        } else {
            axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect()
        };
        Self::from_fn(dimension, alpha, times, &points, |t, x, y| {
            if alpha == 0 {
                mehler_value(dimension, 0.5 * t, x, y)
            } else {
                let mut g = [0.0; 2];
                mehler_gradient(dimension, 0.5 * t, x, y, &mut g[..dimension]);
                g[..dimension].iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        })
    }

    pub fn len(&self) -> usize {
        self.times.len() * self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSearch {
    pub c0_grid: Vec<f64>,
    pub c1_grid: Vec<f64>,
    /// Largest admissible `c`.
    pub c_max: f64,
}

impl Default for GaussianSearch {
    fn default() -> Self {
        let grid: Vec<f64> = (1..50).map(|k| f64::from(k) * 0.02).collect();
        Self { c0_grid: grid.clone(), c1_grid: grid, c_max: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `kernel / bound`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub dimension: usize,
    pub alpha: u8,
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    pub t0: f64,
    pub feasible: bool,
    pub samples: usize,
    pub violations: usize,
    pub worst: Option<WorstSample>,
}

impl GaussianFit {
    pub fn passed(&self) -> bool {
        self.feasible && self.violations == 0
    }
}

fn log_small(n: f64, alpha: f64, c0: f64, t: f64, d2: f64) -> f64 {
    -0.5 * (n + alpha) * t.ln() - c0 * d2 / t
}

fn log_large(n: f64, c1: f64, t: f64, d2: f64) -> f64 {
    -0.5 * n * t - c1 * d2
}

/// Grid search over `(c₀, c₁, t₀)`; `c` is the least constant making the
/// candidate hold on every sample. Among feasible candidates the largest
/// `c₀` wins, then the largest `c₁`, then the smallest `c`.
pub fn gaussian_bound_fit(samples: &HeatSamples, search: &GaussianSearch) -> Result<GaussianFit> {
    let valid = |g: &[f64]| !g.is_empty() && g.iter().all(|&c| c > 0.0 && c < 1.0);
    if !valid(&search.c0_grid) || !valid(&search.c1_grid) {
        return Err(invalid("c0 and c1 candidates must lie in (0, 1)"));
    }
    if !(search.c_max > 0.0) {
        return Err(invalid("c_max must be positive"));
    }
    let n = samples.dimension as f64;
    let alpha = f64::from(samples.alpha);
    let logs: Vec<Vec<f64>> = samples
        .values
        .iter()
        .map(|row| row.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect())
        .collect();
    // Per (candidate, t): the log of the least c covering that time slice.
    let slice_max = |shape: &(dyn Fn(f64, f64) -> f64 + Sync)| -> Vec<f64> {
        samples
            .times
            .par_iter()
            .zip(&logs)
            .map(|(&t, lv)| {
                lv.iter()
                    .zip(&samples.dist2)
                    .map(|(&l, &d2)| l - shape(t, d2))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    };
    let small: Vec<Vec<f64>> = search.c0_grid.iter().map(|&c0| slice_max(&|t, d2| log_small(n, alpha, c0, t, d2))).collect();
    let large: Vec<Vec<f64>> = search.c1_grid.iter().map(|&c1| slice_max(&|t, d2| log_large(n, c1, t, d2))).collect();
    let t_max = samples.times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t0_grid: Vec<f64> = samples.times.iter().copied().filter(|&t| t > 1.0 && t < t_max).collect();
    if t0_grid.is_empty() {
        return Err(invalid("the t grid needs points on both sides of some t0 > 1"));
    }
    let ln_cmax = search.c_max.ln();
    // (c0, c1, log c, t0); order: c0 desc, c1 desc, c asc, t0 asc.
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut fallback: Option<(f64, f64, f64, f64)> = None;
    for (a, &c0) in search.c0_grid.iter().enumerate() {
        for (b, &c1) in search.c1_grid.iter().enumerate() {
            for &t0 in &t0_grid {
                let lc = samples
                    .times
                    .iter()
                    .enumerate()
                    .map(|(k, &t)| if t <= t0 { small[a][k] } else { large[b][k] })
                    .fold(f64::NEG_INFINITY, f64::max);
                let cand = (c0, c1, lc, t0);
                if fallback.is_none_or(|f| lc < f.2) {
                    fallback = Some(cand);
                }
                if lc > ln_cmax {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((b0, b1, bc, bt)) => {
                        (c0, c1) > (b0, b1) || ((c0, c1) == (b0, b1) && (lc < bc || (lc == bc && t0 < bt)))
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
    }
    let feasible = best.is_some();
    let (c0, c1, lc, t0) = best.or(fallback).expect("non-empty search grid");
    let ln_c = lc.min(ln_cmax);
    // Certification pass over every sample.
    let mut violations = 0usize;
    let mut worst: Option<WorstSample> = None;
    for (k, &t) in samples.times.iter().enumerate() {
        for (p, (&l, &d2)) in logs[k].iter().zip(&samples.dist2).enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            let shape = if t <= t0 { log_small(n, alpha, c0, t, d2) } else { log_large(n, c1, t, d2) };
            let excess = l - shape - ln_c;
            if excess > 0.0 {
                violations += 1;
            }
            if worst.as_ref().is_none_or(|w| excess.exp() > w.ratio) {
                let (x, y) = samples.pairs[p];
                worst = Some(WorstSample {
                    t,
                    x: x[..samples.dimension].to_vec(),
                    y: y[..samples.dimension].to_vec(),
                    ratio: excess.exp(),
                });
            }
        }
    }
    Ok(GaussianFit {
        dimension: samples.dimension,
        alpha: samples.alpha,
        c: ln_c.exp(),
        c0,
        c1,
        t0,
        feasible,
        samples: samples.len(),
        violations,
        worst,
    })
}

pub fn gaussian_report(fits: &[GaussianFit]) -> Result<VerificationReport> {
    let status = if fits.iter().all(GaussianFit::passed) { Status::Pass } else { Status::Fail };
    let mut r = VerificationReport::new("gaussian-bound", status);
    let mut t = Table::new(
        "constants",
        &["alpha", "c", "c0", "c1", "t0", "feasible", "samples", "violations", "max_ratio", "worst_t"],
    );
    for f in fits {
        t.push(vec![
            i64::from(f.alpha).into(),
            f.c.into(),
            f.c0.into(),
            f.c1.into(),
            f.t0.into(),
            f.feasible.into(),
            f.samples.into(),
            f.violations.into(),
            f.worst.as_ref().map(|w| w.ratio).into(),
            f.worst.as_ref().map(|w| w.t).into(),
        ])?;
        if !f.passed() {
            if let Some(w) = &f.worst {
                r.warnings.push(format!(
                    "alpha = {}: worst sample t = {}, x = {:?}, y = {:?}, kernel/bound = {}",
                    f.alpha, w.t, w.x, w.y, w.ratio
                ));
            }
        }
    }
    r.set("violations", fits.iter().map(|f| f.violations).sum::<usize>());
    r.tables.push(t);
    Ok(r)
}

/// Default sample times `0.05, 0.10, ..., 4`.
pub fn default_times() -> Vec<f64> {
    (1..=80).map(|k| f64::from(k) * 0.05).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_origin_inequality() {
        // c·t^{−1/2} ≥ (2π sinh t)^{−1/2} at x = y = 0 with c = (2π)^{−1/2}.
        for t in default_times() {
            let p = mehler_value(1, 0.5 * t, &[0.0], &[0.0]);
            assert!(p <= (2.0 * std::f64::consts::PI).powf(-0.5) * t.powf(-0.5) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let mut g = [1.0];
        mehler_gradient(1, 0.3, &[0.0], &[0.0], &mut g);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn fits_certify_without_violations() {
        let times: Vec<f64> = (1..=20).map(|k| f64::from(k) * 0.2).collect();
        for alpha in [0, 1] {
            let s = HeatSamples::mehler(1, alpha, &times, 6.0, 0.25).unwrap();
            let fit = gaussian_bound_fit(&s, &GaussianSearch::default()).unwrap();
            assert!(fit.passed(), "{fit:?}");
            assert!(fit.c0 > 0.0 && fit.c0 < 1.0 && fit.c1 > 0.0 && fit.c1 < 1.0 && fit.t0 > 1.0);
            assert!(fit.worst.unwrap().ratio <= 1.0);
        }
    }

    #[test]
    fn analytic_constants_are_feasible() {
        let times = default_times();
        let s = HeatSamples::mehler(1, 0, &times, 6.0, 0.5).unwrap();
        let search = GaussianSearch { c0_grid: vec![0.5], c1_grid: vec![0.24], c_max: 10.0 };
        assert!(gaussian_bound_fit(&s, &search).unwrap().passed());
    }

    #[test]
    fn infeasible_box_reports_worst_sample() {
        let times = default_times();
        let s = HeatSamples::mehler(1, 0, &times, 6.0, 0.5).unwrap();
        let search = GaussianSearch { c0_grid: vec![0.9], c1_grid: vec![0.9], c_max: 1.0 };
        let fit = gaussian_bound_fit(&s, &search).unwrap();
        assert!(!fit.feasible && fit.violations > 0);
        assert!(fit.worst.as_ref().unwrap().ratio > 1.0);
        assert_eq!(gaussian_report(&[fit]).unwrap().status, Status::Fail);
    }

    #[test]
    fn rejects_bad_search() {
        let s = HeatSamples::mehler(1, 0, &[0.5, 2.0, 3.0], 1.0, 0.5).unwrap();
        let bad = GaussianSearch { c0_grid: vec![1.0], ..Default::default() };
        assert!(gaussian_bound_fit(&s, &bad).is_err());
        let short = HeatSamples::mehler(1, 0, &[0.5, 1.0], 1.0, 0.5).unwrap();
        assert!(gaussian_bound_fit(&short, &GaussianSearch::default()).is_err());
    }
}
