//! Kernel decay constants `c_N(j)` of a dyadic system and their spread
//! across `j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{spread, Cell, Status, Table, VerificationReport};
use crate::calculus::spectral_kernel;
use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Result};
use crate::operator::EigenDecomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    pub n_list: Vec<u32>,
    /// Derivative orders, each 0 or 1.
    pub alphas: Vec<u8>,
    /// Blocks with `2^j` above this are unresolved. `None` uses half the
    /// discrete spectrum.
    pub lambda_cut: Option<f64>,
    /// Blocks whose largest spectral weight `max_k |φ_j(λ_k)|` is below
    /// this hold (almost) no spectrum and are unresolved.
    pub min_block_weight: f64,
    /// Ceiling on `U_N = max_j c_N(j) / min_j c_N(j)`.
    pub ceiling: f64,
    /// Rows with `j` below this are exploratory and never judged.
    pub exploratory_below: Option<i32>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            n_list: vec![1, 2, 4],
            alphas: vec![0, 1],
            lambda_cut: None,
            min_block_weight: 1e-3,
            ceiling: 50.0,
            exploratory_below: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Resolved,
    Unresolved,
    Exploratory,
}

impl From<Resolution> for Cell {
    fn from(r: Resolution) -> Self {
        match r {
            Resolution::Resolved => Cell::Bool(true),
            Resolution::Unresolved => Cell::Bool(false),
            Resolution::Exploratory => Cell::Text("exploratory".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub j: i32,
    pub n: u32,
    pub alpha: u8,
    pub c_n: f64,
    pub resolution: Resolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uniformity {
    pub n: u32,
    pub alpha: u8,
    /// `None` when no resolved row carries a positive constant.
    pub spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub rows: Vec<DecayRow>,
    pub uniformity: Vec<Uniformity>,
    pub ceiling: f64,
    pub warnings: Vec<String>,
}

impl DecayFit {
    pub fn spread(&self, n: u32, alpha: u8) -> Option<f64> {
        self.uniformity.iter().find(|u| u.n == n && u.alpha == alpha).and_then(|u| u.spread)
    }

    pub fn passed(&self) -> bool {
        self.uniformity.iter().all(|u| u.spread.is_some_and(|s| s <= self.ceiling))
    }

    pub fn report(&self) -> Result<VerificationReport> {
        let status = if self.passed() { Status::Pass } else { Status::Fail };
        let mut r = VerificationReport::new("decay", status);
        let mut t = Table::new("decay", &["j", "N", "alpha", "c_N", "resolved"]);
        for row in &self.rows {
            t.push(vec![row.j.into(), i64::from(row.n).into(), i64::from(row.alpha).into(), row.c_n.into(), row.resolution.into()])?;
        }
        let mut u = Table::new("uniformity", &["N", "alpha", "U_N", "ceiling", "passed"]);
        for x in &self.uniformity {
            let ok = x.spread.is_some_and(|s| s <= self.ceiling);
            u.push(vec![i64::from(x.n).into(), i64::from(x.alpha).into(), x.spread.into(), self.ceiling.into(), ok.into()])?;
        }
        let worst = self.uniformity.iter().filter_map(|u| u.spread).fold(0.0, f64::max);
        r.set("max_U_N", worst);
        r.set("ceiling", self.ceiling);
        r.tables = vec![t, u];
        r.warnings = self.warnings.clone();
        Ok(r)
    }
}

/// `c_N(j) = sup_{x,y} |∇ₓ^α φ_j(H)(x,y)| (1 + 2^{j/2}|x−y|)^N / 2^{(n+α)j/2}`
/// over grid pairs, for every `j` of the system.
pub fn fit_decay_constants(ed: &EigenDecomposition, system: &DyadicSystem, opts: &DecayOptions) -> Result<DecayFit> {
    if opts.n_list.is_empty() || opts.alphas.is_empty() {
        return Err(invalid("N list and alpha list must be non-empty"));
    }
    if opts.alphas.iter().any(|&a| a > 1) {
        return Err(invalid("alpha must be 0 or 1"));
    }
    if !(opts.ceiling > 0.0) {
        return Err(invalid("ceiling must be positive"));
    }
    let grid = ed.grid().clone();
    let n = grid.dimension() as f64;
    let lambda_cut = opts.lambda_cut.unwrap_or_else(|| ed.resolved_cutoff(0.5));
    let want_gradient = opts.alphas.contains(&1);
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for j in system.indices() {
        let weight = ed.eigenvalues().iter().map(|&l| system.eval(j, l).abs()).fold(0.0, f64::max);
        let resolution = if opts.exploratory_below.is_some_and(|b| j < b) {
            Resolution::Exploratory
        } else if f64::from(j).exp2() > lambda_cut {
            warnings.push(format!("j = {j}: block lies above the resolved cutoff {lambda_cut:.4}; excluded"));
            Resolution::Unresolved
        } else if weight < opts.min_block_weight {
            warnings.push(format!("j = {j}: block holds no resolved spectrum (max weight {weight:.3e}); excluded"));
            Resolution::Unresolved
        } else {
            Resolution::Resolved
        };
        let kernel = spectral_kernel(ed, |l| system.eval(j, l), want_gradient)?;
        let scale = (0.5 * f64::from(j)).exp2();
        for &alpha in &opts.alphas {
            let sups = (0..grid.len())
                .into_par_iter()
                .map(|x| {
                    let mut best = vec![0.0f64; opts.n_list.len()];
                    for y in 0..grid.len() {
                        let v = if alpha == 0 { kernel.value(x, y).abs() } else { kernel.gradient_norm(x, y).unwrap_or(0.0) };
                        let base = 1.0 + scale * grid.distance(x, y);
                        for (b, &nn) in best.iter_mut().zip(&opts.n_list) {
                            *b = b.max(v * base.powi(nn as i32));
                        }
                    }
                    best
                })
                .reduce(
                    || vec![0.0; opts.n_list.len()],
                    |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
                );
            let norm = (0.5 * (n + f64::from(alpha)) * f64::from(j)).exp2();
            for (&nn, s) in opts.n_list.iter().zip(sups) {
                rows.push(DecayRow { j, n: nn, alpha, c_n: s / norm, resolution });
            }
        }
    }
    let mut uniformity = Vec::new();
    for &alpha in &opts.alphas {
        for &nn in &opts.n_list {
            let vals = rows
                .iter()
                .filter(|r| r.n == nn && r.alpha == alpha && r.resolution == Resolution::Resolved)
                .map(|r| r.c_n);
            uniformity.push(Uniformity { n: nn, alpha, spread: spread(vals) });
        }
    }
    Ok(DecayFit { rows, uniformity, ceiling: opts.ceiling, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::default_system;
    use crate::grid::make_grid;
    use crate::operator::{assemble_with_stencil, eigendecompose, make_potential, PotentialSpec, StencilOrder};

    fn ed() -> EigenDecomposition {
        let g = make_grid(1, 8.0, 200).unwrap();
        let v = make_potential(PotentialSpec::Hermite, &g).unwrap();
        eigendecompose(&assemble_with_stencil(g, v, StencilOrder::Eighth).unwrap()).unwrap()
    }

    #[test]
    fn n_zero_is_plain_sup() {
        let ed = ed();
        let sys = default_system(0, 5).unwrap();
        let opts = DecayOptions { n_list: vec![0], alphas: vec![0], ..Default::default() };
        let fit = fit_decay_constants(&ed, &sys, &opts).unwrap();
        for row in &fit.rows {
            let k = spectral_kernel(&ed, |l| sys.eval(row.j, l), false).unwrap();
            let sup = k.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((row.c_n - sup / (0.5 * f64::from(row.j)).exp2()).abs() < 1e-14 * sup.max(1.0));
        }
    }

    #[test]
    fn monotone_in_n_and_empty_block_excluded() {
        let ed = ed();
        let sys = default_system(0, 5).unwrap();
        let fit = fit_decay_constants(&ed, &sys, &DecayOptions::default()).unwrap();
        for j in 0..=5 {
            for alpha in [0u8, 1] {
                let c: Vec<f64> = fit.rows.iter().filter(|r| r.j == j && r.alpha == alpha).map(|r| r.c_n).collect();
                assert!(c.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        // λ_0 ≈ 1 is the bottom of the spectrum and φ_0 vanishes there.
        assert!(fit.rows.iter().filter(|r| r.j == 0).all(|r| r.resolution == Resolution::Unresolved));
        assert!(!fit.warnings.is_empty());
        assert!(fit.uniformity.iter().all(|u| u.spread.is_some()));
    }

    #[test]
    fn exploratory_rows_are_not_judged() {
        let ed = ed();
        let sys = default_system(-2, 3).unwrap();
        let opts = DecayOptions { exploratory_below: Some(0), n_list: vec![1], alphas: vec![0], ..Default::default() };
        let fit = fit_decay_constants(&ed, &sys, &opts).unwrap();
        assert!(fit.rows.iter().filter(|r| r.j < 0).all(|r| r.resolution == Resolution::Exploratory));
        let report = fit.report().unwrap();
        assert_eq!(report.tables[0].to_csv().lines().next(), Some("j,N,alpha,c_N,resolved"));
        assert!(report.tables[0].to_csv().contains("exploratory"));
    }

    #[test]
    fn rejects_bad_options() {
        let ed = ed();
        let sys = default_system(0, 2).unwrap();
        let bad = DecayOptions { alphas: vec![2], ..Default::default() };
        assert!(fit_decay_constants(&ed, &sys, &bad).is_err());
        let empty = DecayOptions { n_list: vec![], ..Default::default() };
        assert!(fit_decay_constants(&ed, &sys, &empty).is_err());
    }
}
