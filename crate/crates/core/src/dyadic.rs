//! Smooth dyadic systems `{φ_j}` on the spectral axis.
//!
//! The base function is built from a cutoff `Ψ` with `Ψ = 1` on
//! `|x| ≤ 1/2` and `Ψ = 0` on `|x| ≥ 1`:
//!
//! ```text
//! φ(x)    = Ψ(x/2) − Ψ(x)            supp φ ⊆ {1/2 ≤ |x| ≤ 2}
//! φ_j(λ)  = φ(2^{1−j} λ)             supp φ_j ⊆ {2^{j−2} ≤ |λ| ≤ 2^j}
//! ```
//!
//! so `Σ_j φ_j` telescopes to `1` wherever the index range covers `λ`.
//!
//! Derivatives are taken by Richardson-extrapolated central differences.
//! The base step is `2^{-10}` in the variable of `φ`; for `φ_j` the step is
//! scaled by `2^{j−1}`, so every rescaling is exact in floating point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Step (in the argument of `φ`) for finite-difference derivatives.
pub const DERIVATIVE_STEP: f64 = 1.0 / 1024.0;
pub const DEFAULT_K_MAX: usize = 4;
pub const DEFAULT_SAMPLE_DENSITY: usize = 4096;

/// The cutoff `Ψ` the system is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpProfile {
    /// `C^∞` transition on `1/2 < |x| < 1` assembled from `exp(−a/t)`.
    Mollifier { sharpness: f64 },
    /// `Ψ = 1` for `|x| < cutoff`, else 0. Discontinuous; a negative control.
    Indicator { cutoff: f64 },
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile::Mollifier { sharpness: 1.0 }
    }
}

fn mollifier(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-a / t).exp()
    }
}

/// Smooth step on `[0, 1]`: 0 at the left end, 1 at the right end.
fn smooth_step(a: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let l = mollifier(a, u);
    let r = mollifier(a, 1.0 - u);
    l / (l + r)
}

impl BumpProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BumpProfile::Mollifier { sharpness } if !(sharpness > 0.0 && sharpness.is_finite()) => {
                Err(invalid(format!("mollifier sharpness must be > 0, got {sharpness}")))
            }
            BumpProfile::Indicator { cutoff } if !(cutoff > 0.5 && cutoff <= 1.0) => {
                Err(invalid(format!("indicator cutoff must lie in (1/2, 1], got {cutoff}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, BumpProfile::Mollifier { .. })
    }

    /// `Ψ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        match *self {
            BumpProfile::Mollifier { sharpness } => {
                if ax <= 0.5 {
                    1.0
                } else if ax >= 1.0 {
                    0.0
                } else {
                    1.0 - smooth_step(sharpness, 2.0 * ax - 1.0)
                }
            }
            BumpProfile::Indicator { cutoff } => {
                if ax < cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// How the base function is derived from `Ψ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicShape {
    /// `φ = Ψ(·/2) − Ψ`; `Σ φ_j = 1`.
    #[default]
    Difference,
    /// `φ / (φ(·/2)² + φ² + φ(2·)²)^{1/2}`; `Σ φ_j² = 1`.
    SquareNormalized,
    /// The difference with its plateau around `|x| = 1` cut out. Fails
    /// condition (iii); a negative control.
    PlateauRemoved,
}

/// A dyadic system `{φ_j}` for `j ∈ [j_min, j_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicSystem {
    profile: BumpProfile,
    shape: DyadicShape,
    j_min: i32,
    j_max: i32,
    derivative_bounds: Vec<f64>,
    sum_bounds: (f64, f64),
}

pub fn make_system(
    profile: BumpProfile,
    shape: DyadicShape,
    j_min: i32,
    j_max: i32,
    k_max: usize,
) -> Result<DyadicSystem> {
    if j_min > j_max {
        return Err(invalid(format!("j_min = {j_min} exceeds j_max = {j_max}")));
    }
    profile.validate()?;
    let mut system = DyadicSystem {
        profile,
        shape,
        j_min,
        j_max,
        derivative_bounds: Vec::new(),
        sum_bounds: (0.0, 0.0),
    };
    system.derivative_bounds = (0..=k_max)
        .map(|k| {
            (j_min..=j_max)
                .map(|j| system.measured_bound(j, k, DEFAULT_SAMPLE_DENSITY))
                .fold(0.0, f64::max)
        })
        .collect();
    let (lo, hi) = system.covered_range();
    system.sum_bounds = system.sum_range(lo, hi, DEFAULT_SAMPLE_DENSITY);
    Ok(system)
}

/// The default telescoping system with the `exp(−1/t)` profile.
pub fn default_system(j_min: i32, j_max: i32) -> Result<DyadicSystem> {
    make_system(BumpProfile::default(), DyadicShape::Difference, j_min, j_max, DEFAULT_K_MAX)
}

impl DyadicSystem {
    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    pub fn shape(&self) -> DyadicShape {
        self.shape
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> + Clone {
        self.j_min..=self.j_max
    }

    /// Measured `c_k` for `k = 0..=k_max`, valid for every `j` in range.
    pub fn derivative_bounds(&self) -> &[f64] {
        &self.derivative_bounds
    }

    /// `(min, max)` of `Σ_j φ_j` over the covered range, sampled.
    pub fn sum_bounds(&self) -> (f64, f64) {
        self.sum_bounds
    }

    /// The `λ` interval on which every overlapping block is in range, so
    /// that the telescoping sum is complete: `[2^{j_min−1}, 2^{j_max−1}]`.
    pub fn covered_range(&self) -> (f64, f64) {
        (f64::from(self.j_min - 1).exp2(), f64::from(self.j_max - 1).exp2())
    }

    /// Support of `φ_j`: `[2^{j−2}, 2^j]` in `|λ|`.
    pub fn block_support(j: i32) -> (f64, f64) {
        (f64::from(j - 2).exp2(), f64::from(j).exp2())
    }

    fn difference(&self, x: f64) -> f64 {
        self.profile.eval(0.5 * x) - self.profile.eval(x)
    }

    /// The base function `φ` (the `j = 1` member).
    pub fn base(&self, x: f64) -> f64 {
        match self.shape {
            DyadicShape::Difference => self.difference(x),
            DyadicShape::SquareNormalized => {
                let d = self.difference(x);
                if d == 0.0 {
                    return 0.0;
                }
                let lo = self.difference(0.5 * x);
                let hi = self.difference(2.0 * x);
                d / (lo * lo + d * d + hi * hi).sqrt()
            }
            DyadicShape::PlateauRemoved => {
                let ax = x.abs();
                if (0.8..=1.25).contains(&ax) {
                    0.0
                } else {
                    self.difference(x)
                }
            }
        }
    }

    /// `φ_j(λ) = φ(2^{1−j} λ)`. Defined for any `j`, in range or not.
    pub fn eval(&self, j: i32, lambda: f64) -> f64 {
        self.base(f64::from(1 - j).exp2() * lambda)
    }

    /// `Σ_{j ∈ [j_min, j_max]} φ_j(λ)`.
    pub fn sum(&self, lambda: f64) -> f64 {
        self.indices().map(|j| self.eval(j, lambda)).sum()
    }

    pub fn sum_of_squares(&self, lambda: f64) -> f64 {
        self.indices().map(|j| self.eval(j, lambda).powi(2)).sum()
    }

    /// Richardson-extrapolated central difference for `φ_j^{(k)}(λ)`.
    pub fn derivative(&self, j: i32, k: usize, lambda: f64) -> f64 {
        if k == 0 {
            return self.eval(j, lambda);
        }
        let step = f64::from(j - 1).exp2() * DERIVATIVE_STEP;
        let coarse = self.central_difference(j, k, lambda, step);
        let fine = self.central_difference(j, k, lambda, 0.5 * step);
        (4.0 * fine - coarse) / 3.0
    }

    /// `δ^{-k} Σ_i (−1)^i C(k,i) φ_j(λ + (k/2 − i)δ)`, second-order
    /// accurate for every k.
    fn central_difference(&self, j: i32, k: usize, lambda: f64, step: f64) -> f64 {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for i in 0..=k {
            let offset = (k as f64 / 2.0 - i as f64) * step;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * self.eval(j, lambda + offset);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
        acc / step.powi(k as i32)
    }

    /// `sup |φ_j^{(k)}| · 2^{kj}` over `density` samples of the block.
    pub fn measured_bound(&self, j: i32, k: usize, density: usize) -> f64 {
        let scale = f64::from(j).exp2();
        let (lo, hi) = (0.25, 1.0);
        let n = density.max(2);
        (0..n)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                self.derivative(j, k, scale * u).abs()
            })
            .fold(0.0, f64::max)
            * (k as f64 * f64::from(j)).exp2()
    }

    fn sum_range(&self, lo: f64, hi: f64, density: usize) -> (f64, f64) {
        let octaves = (hi / lo).log2().max(1.0);
        let n = ((octaves * density as f64) as usize).max(2);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let mut a = f64::INFINITY;
        let mut b = f64::NEG_INFINITY;
        for i in 0..n {
            let lambda = (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp();
            let s = self.sum(lambda);
            a = a.min(s);
            b = b.max(s);
        }
        (a, b)
    }
}

/// `ψ` with `ψ = 1` on `1/4 ≤ |λ| ≤ 1` and support in `1/5 ≤ |λ| ≤ 5/4`;
/// `ψ_j(λ) = ψ(2^{−j} λ)` is identically 1 on the support of `φ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproducingCutoff {
    sharpness: f64,
}

pub fn make_reproducing_cutoff(profile: BumpProfile) -> ReproducingCutoff {
    let sharpness = match profile {
        BumpProfile::Mollifier { sharpness } => sharpness,
        BumpProfile::Indicator { .. } => 1.0,
    };
    ReproducingCutoff { sharpness }
}

impl ReproducingCutoff {
    pub fn eval(&self, lambda: f64) -> f64 {
        let u = lambda.abs();
        if u <= 0.2 || u >= 1.25 {
            0.0
        } else if (0.25..=1.0).contains(&u) {
            1.0
        } else if u < 0.25 {
            smooth_step(self.sharpness, (u - 0.2) / 0.05)
        } else {
            1.0 - smooth_step(self.sharpness, (u - 1.0) / 0.25)
        }
    }

    pub fn eval_member(&self, j: i32, lambda: f64) -> f64 {
        self.eval(f64::from(-j).exp2() * lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub lambda_range: (f64, f64),
    pub sample_density: usize,
    pub k_max: usize,
    /// Condition (iii) passes only when the sampled sum stays above this.
    pub sum_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub support_violations: usize,
    /// `c_k`, the max over `j` of `sup |φ_j^{(k)}| 2^{kj}`.
    pub derivative_bounds: Vec<f64>,
    /// Per-`j` measured values of `sup |φ_j^{(k)}| 2^{kj}`, indexed `[j][k]`.
    pub per_index_bounds: Vec<(i32, Vec<f64>)>,
    pub sum_lower: f64,
    pub sum_upper: f64,
    pub sum_floor: f64,
    pub passed: bool,
}

/// Checks the support, derivative and partition-of-unity conditions by
/// dense sampling.
pub fn validate_system(system: &DyadicSystem, opts: &ValidationOptions) -> Result<ValidationReport> {
    let (lo, hi) = opts.lambda_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Empty("lambda range (must satisfy 0 < lo < hi)"));
    }
    if opts.sample_density < 2 {
        return Err(invalid("sample density must be at least 2"));
    }
    let n = opts.sample_density;
    let mut support_violations = 0;
    for j in system.indices() {
        let (s_lo, s_hi) = DyadicSystem::block_support(j);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            // Below the block: [2^{j−4}, 2^{j−2}); above: (2^j, 2^{j+2}].
            let below = s_lo * 0.25 + (s_lo - s_lo * 0.25) * t;
            let above = s_hi + (4.0 * s_hi - s_hi) * t;
            for lambda in [below, above] {
                let inside = lambda >= s_lo && lambda <= s_hi;
                if inside {
                    continue;
                }
                if system.eval(j, lambda) != 0.0 || system.eval(j, -lambda) != 0.0 {
                    support_violations += 1;
                }
            }
        }
        if system.eval(j, 0.0) != 0.0 {
            support_violations += 1;
        }
    }
    let per_index_bounds: Vec<(i32, Vec<f64>)> = system
        .indices()
        .map(|j| (j, (0..=opts.k_max).map(|k| system.measured_bound(j, k, n)).collect()))
        .collect();
    let derivative_bounds = (0..=opts.k_max)
        .map(|k| per_index_bounds.iter().map(|(_, b)| b[k]).fold(0.0, f64::max))
        .collect();
    let (sum_lower, sum_upper) = system.sum_range(lo, hi, n);
    let passed = support_violations == 0 && sum_lower > opts.sum_floor && sum_lower > 0.0;
    Ok(ValidationReport {
        support_violations,
        derivative_bounds,
        per_index_bounds,
        sum_lower,
        sum_upper,
        sum_floor: opts.sum_floor,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(lo: f64, hi: f64) -> ValidationOptions {
        ValidationOptions { lambda_range: (lo, hi), sample_density: 512, k_max: 4, sum_floor: 0.0 }
    }

    #[test]
    fn profile_shape() {
        let p = BumpProfile::default();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(-0.5), 1.0);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(3.0), 0.0);
        let xs: Vec<f64> = (0..=1000).map(|i| 0.5 + 0.5 * i as f64 / 1000.0).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| p.eval(x)).collect();
        assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn telescoping_sum_is_one() {
        let sys = default_system(-20, 20).unwrap();
        assert!((sys.sum(1.37) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn support_endpoints_vanish() {
        let sys = default_system(-5, 5).unwrap();
        for j in -5..=5 {
            assert_eq!(sys.eval(j, f64::from(j - 3).exp2()), 0.0);
            assert_eq!(sys.eval(j, 3.0 * f64::from(j).exp2()), 0.0);
        }
    }

    #[test]
    fn scaling_identity_is_exact() {
        let sys = default_system(-6, 6).unwrap();
        for j in -6..=6 {
            for i in 0..500 {
                let lambda = 0.01 + 0.173 * i as f64;
                assert_eq!(sys.eval(j, lambda), sys.eval(0, f64::from(-j).exp2() * lambda));
            }
        }
    }

    #[test]
    fn rescaled_derivative_bounds_are_index_independent() {
        let sys = default_system(-3, 6).unwrap();
        for k in 1..=4 {
            let reference = sys.measured_bound(0, k, 1024);
            assert!(reference.is_finite() && reference > 0.0);
            for j in -3..=6 {
                let b = sys.measured_bound(j, k, 1024);
                assert!(((b - reference) / reference).abs() < 1e-9, "k={k} j={j}");
            }
        }
        assert!(sys.derivative_bounds()[1].is_finite());
    }

    #[test]
    fn first_derivative_matches_fine_grid_maximum() {
        // Independent estimate: max slope of φ_0 from a very fine secant grid.
        let sys = default_system(0, 0).unwrap();
        let n = 200_000;
        let mut best = 0.0f64;
        let mut prev = sys.eval(0, 0.25);
        for i in 1..=n {
            let lambda = 0.25 + 0.75 * i as f64 / n as f64;
            let cur = sys.eval(0, lambda);
            best = best.max(((cur - prev) / (0.75 / n as f64)).abs());
            prev = cur;
        }
        let c1 = sys.derivative_bounds()[1];
        assert!((c1 - best).abs() / best < 1e-3, "{c1} vs {best}");
    }

    #[test]
    fn reproducing_cutoff() {
        let psi = make_reproducing_cutoff(BumpProfile::default());
        assert_eq!(psi.eval(0.5), 1.0);
        assert_eq!(psi.eval(2.0), 0.0);
        assert_eq!(psi.eval(0.2), 0.0);
        assert_eq!(psi.eval(1.25), 0.0);
        let sys = default_system(-3, 5).unwrap();
        for j in [-3, 0, 5] {
            let worst = (0..40_000)
                .map(|i| {
                    let lambda = f64::from(j).exp2() * (0.1 + 1.4 * i as f64 / 40_000.0);
                    (psi.eval_member(j, lambda) * sys.eval(j, lambda) - sys.eval(j, lambda)).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 1e-14);
        }
    }

    #[test]
    fn default_system_validates() {
        let sys = default_system(-20, 20).unwrap();
        let r = validate_system(&sys, &opts(1e-3, 1e3)).unwrap();
        assert!(r.passed);
        assert_eq!(r.support_violations, 0);
        assert!((r.sum_lower - 1.0).abs() < 1e-12 && (r.sum_upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_system_validates_on_covered_range() {
        let sys = default_system(0, 10).unwrap();
        assert!(validate_system(&sys, &opts(2.0, 500.0)).unwrap().passed);
    }

    #[test]
    fn plateau_removed_fails() {
        let sys = make_system(BumpProfile::default(), DyadicShape::PlateauRemoved, -4, 8, 2).unwrap();
        let r = validate_system(&sys, &ValidationOptions { sum_floor: 0.1, ..opts(0.5, 50.0) }).unwrap();
        assert!(!r.passed);
        assert!(r.sum_lower < 0.1);
    }

    #[test]
    fn square_normalized_sums_squares_to_one() {
        let sys = make_system(BumpProfile::default(), DyadicShape::SquareNormalized, -2, 9, 2).unwrap();
        let (lo, hi) = sys.covered_range();
        for i in 0..1000 {
            let lambda = lo * (hi / lo).powf(i as f64 / 999.0);
            assert!((sys.sum_of_squares(lambda) - 1.0).abs() < 1e-13);
            let s = sys.sum(lambda);
            assert!((1.0 - 1e-13..=2f64.sqrt() + 1e-13).contains(&s));
        }
        let r = validate_system(&sys, &opts(lo, hi)).unwrap();
        assert!(r.passed && r.support_violations == 0);
    }

    #[test]
    fn indicator_keeps_support_but_not_smoothness() {
        let sys = make_system(BumpProfile::Indicator { cutoff: 0.7 }, DyadicShape::Difference, 0, 4, 2).unwrap();
        let r = validate_system(&sys, &opts(0.5, 8.0)).unwrap();
        assert_eq!(r.support_violations, 0);
        assert!(r.derivative_bounds[1] > 100.0);
    }

    #[test]
    fn validation_errors() {
        let sys = default_system(0, 3).unwrap();
        assert!(validate_system(&sys, &opts(0.0, 1.0)).is_err());
        assert!(validate_system(&sys, &opts(2.0, 1.0)).is_err());
        assert!(make_system(BumpProfile::default(), DyadicShape::Difference, 3, 2, 1).is_err());
        assert!(make_system(BumpProfile::Indicator { cutoff: 0.3 }, DyadicShape::Difference, 0, 1, 1).is_err());
    }
}
