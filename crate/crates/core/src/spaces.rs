//! Besov and Triebel-Lizorkin norms built from a dyadic system, in plain
//! and Peetre-maximal form.

use serde::{Deserialize, Serialize};

use crate::calculus::apply_spectral;
use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, mixed_norm, GridFunction, MixedMode, Stack};
use crate::maximal::{peetre_of_block, PeetreOrder};
use crate::operator::EigenDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceFamily {
    Besov,
    TriebelLizorkin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceVariant {
    /// Blocks `φ_j(H) f`.
    Plain,
    /// Blocks `φ*_{j,s} f`.
    Maximal,
}

/// What to do when the Peetre parameter is at or below the threshold
/// `n/p` (Besov) or `n/min(p, q)` (Triebel-Lizorkin).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    #[default]
    Strict,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// Peetre parameter, required for the maximal variant.
    pub s: Option<f64>,
    #[serde(default)]
    pub threshold: ThresholdMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceNorm {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// The Peetre threshold: the maximal characterization needs `s` above it.
pub fn peetre_threshold(dimension: usize, family: SpaceFamily, p: f64, q: f64) -> f64 {
    let n = dimension as f64;
    match family {
        SpaceFamily::Besov => n / p,
        SpaceFamily::TriebelLizorkin => n / p.min(q),
    }
}

/// `{φ_j(H) f}` for every `j` of the system, from one set of coefficients.
pub fn dyadic_blocks(ed: &EigenDecomposition, system: &DyadicSystem, f: &GridFunction) -> Result<Stack> {
    let coef = ed.coefficients(f)?;
    let lambdas = ed.eigenvalues();
    let indices: Vec<i32> = system.indices().collect();
    let members = indices
        .iter()
        .map(|&j| {
            let c: Vec<f64> = coef.iter().zip(lambdas).map(|(c, &l)| c * system.eval(j, l)).collect();
            ed.synthesize(&c)
        })
        .collect();
    Stack::new(indices, members)
}

/// `{φ*_{j,s} f}` from precomputed plain blocks.
pub fn maximal_blocks(blocks: &Stack, s: f64) -> Result<Stack> {
    let members = blocks
        .iter()
        .map(|(j, g)| peetre_of_block(g, j, s, PeetreOrder::Star))
        .collect::<Result<Vec<_>>>()?;
    Stack::new(blocks.indices().to_vec(), members)
}

fn check_params(dimension: usize, params: &SpaceParams, family: SpaceFamily, variant: SpaceVariant) -> Result<Vec<String>> {
    let SpaceParams { alpha, p, q, .. } = *params;
    if !alpha.is_finite() {
        return Err(invalid("alpha must be finite"));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 0.0) || v.is_nan() {
            return Err(invalid(format!("{name} must lie in (0, ∞], got {v}")));
        }
    }
    if family == SpaceFamily::TriebelLizorkin && p == f64::INFINITY {
        return Err(Error::Unsupported("Triebel-Lizorkin norms need p < ∞".into()));
    }
    let mut warnings = Vec::new();
    if variant == SpaceVariant::Maximal {
        let s = params.s.ok_or_else(|| invalid("the maximal variant needs a Peetre parameter s"))?;
        let threshold = peetre_threshold(dimension, family, p, q);
        if !(s > threshold) {
            let msg = format!("Peetre parameter s = {s} is not above the threshold {threshold}");
            match params.threshold {
                ThresholdMode::Strict => return Err(invalid(msg)),
                ThresholdMode::Warn => warnings.push(msg),
            }
        }
        if !(s > 0.0) {
            return Err(invalid(format!("s must be > 0, got {s}")));
        }
    }
    Ok(warnings)
}

/// Norm of an already decomposed function.
pub fn norm_of_blocks(blocks: &Stack, params: &SpaceParams, family: SpaceFamily) -> Result<f64> {
    let mode = match family {
        SpaceFamily::Besov => MixedMode::LqOfLp,
        SpaceFamily::TriebelLizorkin => MixedMode::LpOfLq,
    };
    mixed_norm(blocks, params.alpha, params.p, params.q, mode)
}

/// `‖f‖` in `B^{α,q}_p(H)` or `F^{α,q}_p(H)`, plain or with Peetre blocks.
pub fn space_norm(
    f: &GridFunction,
    system: &DyadicSystem,
    ed: &EigenDecomposition,
    params: &SpaceParams,
    family: SpaceFamily,
    variant: SpaceVariant,
) -> Result<SpaceNorm> {
    let warnings = check_params(ed.grid().dimension(), params, family, variant)?;
    let mut blocks = dyadic_blocks(ed, system, f)?;
    if variant == SpaceVariant::Maximal {
        blocks = maximal_blocks(&blocks, params.s.unwrap_or_default())?;
    }
    let value = norm_of_blocks(&blocks, params, family)?;
    Ok(SpaceNorm { value, warnings })
}

/// `‖(Σ_j |φ_j(H) f|²)^{1/2}‖_p`.
pub fn square_function_norm(f: &GridFunction, system: &DyadicSystem, ed: &EigenDecomposition, p: f64) -> Result<f64> {
    let blocks = dyadic_blocks(ed, system, f)?;
    mixed_norm(&blocks, 0.0, p, 2.0, MixedMode::LpOfLq)
}

/// `‖(Σ_j 4^{js}|φ_j(H) f|²)^{1/2}‖_p / ‖H^s f‖_p`.
pub fn sobolev_ratio(f: &GridFunction, system: &DyadicSystem, ed: &EigenDecomposition, s: f64, p: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid(format!("s must be finite and ≥ 0, got {s}")));
    }
    let has_negative = ed.eigenvalues().first().is_some_and(|&l| l < 0.0);
    if has_negative && s.fract() != 0.0 {
        return Err(Error::Unsupported(format!(
            "H^s with non-integer s = {s} is undefined with negative eigenvalues"
        )));
    }
    let blocks = dyadic_blocks(ed, system, f)?;
    let numerator = mixed_norm(&blocks, s, p, 2.0, MixedMode::LpOfLq)?;
    let denominator = lp_norm(&apply_spectral(ed, |l| l.powf(s), f)?, p)?;
    if denominator == 0.0 {
        return Err(invalid("H^s f vanishes; the ratio is undefined"));
    }
    Ok(numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{default_system, make_system, BumpProfile, DyadicShape, DEFAULT_K_MAX};
    use crate::grid::make_grid;
    use crate::operator::{assemble_with_stencil, eigendecompose, make_potential, PotentialSpec, StencilOrder};

    fn ed(spec: PotentialSpec) -> EigenDecomposition {
        let g = make_grid(1, 8.0, 200).unwrap();
        let v = make_potential(spec, &g).unwrap();
        eigendecompose(&assemble_with_stencil(g, v, StencilOrder::Eighth).unwrap()).unwrap()
    }

    fn params(alpha: f64, p: f64, q: f64, s: Option<f64>) -> SpaceParams {
        SpaceParams { alpha, p, q, s, threshold: ThresholdMode::Strict }
    }

    fn bump(ed: &EigenDecomposition) -> GridFunction {
        GridFunction::from_fn(ed.grid().clone(), |x| (-(x[0] - 0.3).powi(2)).exp()).unwrap()
    }

    #[test]
    fn besov_equals_triebel_lizorkin_when_p_equals_q() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = default_system(0, 7).unwrap();
        let f = bump(&ed);
        for (alpha, p) in [(0.0, 2.0), (0.5, 3.0), (-1.0, 1.5)] {
            let pr = params(alpha, p, p, None);
            let b = space_norm(&f, &sys, &ed, &pr, SpaceFamily::Besov, SpaceVariant::Plain).unwrap();
            let t = space_norm(&f, &sys, &ed, &pr, SpaceFamily::TriebelLizorkin, SpaceVariant::Plain).unwrap();
            assert!((b.value - t.value).abs() < 1e-10 * b.value);
        }
    }

    #[test]
    fn maximal_dominates_plain() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = default_system(0, 7).unwrap();
        let f = bump(&ed);
        for family in [SpaceFamily::Besov, SpaceFamily::TriebelLizorkin] {
            let pr = params(0.5, 2.0, 2.0, Some(2.0));
            let plain = space_norm(&f, &sys, &ed, &pr, family, SpaceVariant::Plain).unwrap();
            let max = space_norm(&f, &sys, &ed, &pr, family, SpaceVariant::Maximal).unwrap();
            assert!(max.value >= plain.value);
            assert!(max.warnings.is_empty());
        }
    }

    #[test]
    fn threshold_is_enforced_or_warned() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = default_system(0, 5).unwrap();
        let f = bump(&ed);
        let strict = params(0.0, 2.0, 1.0, Some(0.9));
        // Triebel-Lizorkin threshold is n / min(p, q) = 1.
        assert!(space_norm(&f, &sys, &ed, &strict, SpaceFamily::TriebelLizorkin, SpaceVariant::Maximal).is_err());
        // Besov threshold is n / p = 0.5.
        assert!(space_norm(&f, &sys, &ed, &strict, SpaceFamily::Besov, SpaceVariant::Maximal).is_ok());
        let warn = SpaceParams { threshold: ThresholdMode::Warn, ..strict };
        let out = space_norm(&f, &sys, &ed, &warn, SpaceFamily::TriebelLizorkin, SpaceVariant::Maximal).unwrap();
        assert_eq!(out.warnings.len(), 1);
        let missing = params(0.0, 2.0, 2.0, None);
        assert!(space_norm(&f, &sys, &ed, &missing, SpaceFamily::Besov, SpaceVariant::Maximal).is_err());
    }

    #[test]
    fn triebel_lizorkin_rejects_infinite_p() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = default_system(0, 5).unwrap();
        let pr = params(0.0, f64::INFINITY, 2.0, None);
        let f = bump(&ed);
        assert!(matches!(
            space_norm(&f, &sys, &ed, &pr, SpaceFamily::TriebelLizorkin, SpaceVariant::Plain),
            Err(Error::Unsupported(_))
        ));
        assert!(space_norm(&f, &sys, &ed, &pr, SpaceFamily::Besov, SpaceVariant::Plain).is_ok());
    }

    #[test]
    fn square_normalized_system_is_an_isometry_on_l2() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = make_system(BumpProfile::default(), DyadicShape::SquareNormalized, -2, 12, DEFAULT_K_MAX).unwrap();
        let band: Vec<usize> = ed.band(0.0, 60.0).collect();
        let coef: Vec<f64> = (0..ed.len()).map(|k| if band.contains(&k) { 1.0 / (1.0 + k as f64) } else { 0.0 }).collect();
        let f = ed.synthesize(&coef);
        let s = square_function_norm(&f, &sys, &ed, 2.0).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!((s / l2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sobolev_ratio_on_an_eigenfunction() {
        let ed = ed(PotentialSpec::Hermite);
        let sys = default_system(0, 8).unwrap();
        let k = 6;
        let lk = ed.eigenvalues()[k];
        let s = 0.75;
        let expected = sys.indices().map(|j| (2.0 * s * j as f64).exp2() * sys.eval(j, lk).powi(2)).sum::<f64>().sqrt()
            / lk.powf(s);
        let got = sobolev_ratio(&ed.eigenfunction(k), &sys, &ed, s, 3.0).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected);
        // φ_j(λ) ≠ 0 only for 2^{j-2} < λ < 2^j, so 2^{js}/λ^s ∈ (1, 4^s).
        let sum_sq = sys.sum_of_squares(lk).sqrt();
        assert!(got >= sum_sq && got <= 4f64.powf(s) * sum_sq);
    }

    #[test]
    fn sobolev_ratio_rejects_fractional_powers_with_bound_states() {
        let ed = ed(PotentialSpec::PoschlTeller { nu: 2 });
        let sys = default_system(0, 5).unwrap();
        let f = bump(&ed);
        assert!(matches!(sobolev_ratio(&f, &sys, &ed, 0.5, 2.0), Err(Error::Unsupported(_))));
        assert!(sobolev_ratio(&f, &sys, &ed, 1.0, 2.0).is_ok());
    }
}
