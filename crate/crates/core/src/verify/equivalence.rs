//! Square-function equivalence experiments over a corpus.

use rayon::prelude::*;

use super::corpus::Corpus;
use super::report::{spread, Status, Table, VerificationReport};
use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, mixed_norm, MixedMode};
use crate::operator::EigenDecomposition;
use crate::spaces::{dyadic_blocks, sobolev_ratio};

fn check_open_p(p_list: &[f64]) -> Result<()> {
    if p_list.is_empty() {
        return Err(Error::Empty("p list"));
    }
    if let Some(p) = p_list.iter().find(|&&p| !(p > 1.0 && p < f64::INFINITY)) {
        return Err(invalid(format!("p = {p} outside (1, ∞)")));
    }
    Ok(())
}

fn check_corpus(corpus: &Corpus) -> Result<()> {
    if corpus.members.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    Ok(())
}

/// Per-`p` ratios over a corpus plus their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTable {
    pub p: f64,
    pub ratios: Vec<f64>,
}

impl RatioTable {
    pub fn min(&self) -> f64 {
        self.ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn spread(&self) -> Option<f64> {
        spread(self.ratios.iter().copied())
    }

    /// `C` with every ratio in `[1/C, C]`.
    pub fn symmetric_bound(&self) -> f64 {
        self.max().max(1.0 / self.min())
    }
}

/// `ρ(f) = ‖f‖_p / ‖(Σ_j |φ_j(H) f|²)^{1/2}‖_p` for each member and `p`.
pub fn equivalence_experiment(corpus: &Corpus, ed: &EigenDecomposition, system: &DyadicSystem, p_list: &[f64]) -> Result<Vec<RatioTable>> {
    check_corpus(corpus)?;
    check_open_p(p_list)?;
    let per_member: Vec<Vec<f64>> = corpus
        .members
        .par_iter()
        .map(|f| {
            let blocks = dyadic_blocks(ed, system, f)?;
            p_list
                .iter()
                .map(|&p| Ok(lp_norm(f, p)? / mixed_norm(&blocks, 0.0, p, 2.0, MixedMode::LpOfLq)?))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(transpose(p_list, &per_member))
}

/// `‖(Σ_j |φ_j f|²)^{1/2}‖_2 / ‖f‖_2` for each member; identically one
/// for a square-normalized system on its covered range.
pub fn parseval_deviation(corpus: &Corpus, ed: &EigenDecomposition, system: &DyadicSystem) -> Result<Vec<f64>> {
    check_corpus(corpus)?;
    corpus
        .members
        .par_iter()
        .map(|f| {
            let blocks = dyadic_blocks(ed, system, f)?;
            Ok(mixed_norm(&blocks, 0.0, 2.0, 2.0, MixedMode::LpOfLq)? / lp_norm(f, 2.0)? - 1.0)
        })
        .collect()
}

/// `‖S_a f‖_p / ‖S_b f‖_p` for two systems `a`, `b`.
pub fn system_independence(
    corpus: &Corpus,
    ed: &EigenDecomposition,
    a: &DyadicSystem,
    b: &DyadicSystem,
    p_list: &[f64],
) -> Result<Vec<RatioTable>> {
    check_corpus(corpus)?;
    check_open_p(p_list)?;
    let per_member: Vec<Vec<f64>> = corpus
        .members
        .par_iter()
        .map(|f| {
            let (ba, bb) = (dyadic_blocks(ed, a, f)?, dyadic_blocks(ed, b, f)?);
            p_list
                .iter()
                .map(|&p| {
                    Ok(mixed_norm(&ba, 0.0, p, 2.0, MixedMode::LpOfLq)? / mixed_norm(&bb, 0.0, p, 2.0, MixedMode::LpOfLq)?)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(transpose(p_list, &per_member))
}

/// Sobolev-type ratios `‖(Σ 4^{js}|φ_j f|²)^{1/2}‖_p / ‖H^s f‖_p`.
pub fn sobolev_experiment(corpus: &Corpus, ed: &EigenDecomposition, system: &DyadicSystem, s: f64, p_list: &[f64]) -> Result<Vec<RatioTable>> {
    check_corpus(corpus)?;
    check_open_p(p_list)?;
    let per_member: Vec<Vec<f64>> = corpus
        .members
        .par_iter()
        .map(|f| p_list.iter().map(|&p| sobolev_ratio(f, system, ed, s, p)).collect())
        .collect::<Result<_>>()?;
    Ok(transpose(p_list, &per_member))
}

fn transpose(p_list: &[f64], per_member: &[Vec<f64>]) -> Vec<RatioTable> {
    p_list
        .iter()
        .enumerate()
        .map(|(i, &p)| RatioTable { p, ratios: per_member.iter().map(|r| r[i]).collect() })
        .collect()
}

/// One table of per-member ratios plus a per-`p` summary table.
pub fn ratio_tables(name: &str, tables: &[RatioTable], ceiling: Option<f64>) -> Result<(Table, Table, bool)> {
    let mut rows = Table::new(name, &["p", "member", "ratio"]);
    let mut summary = Table::new(&format!("{name}_summary"), &["p", "min", "max", "spread", "bound", "ceiling", "passed"]);
    let mut all = true;
    for t in tables {
        for (k, r) in t.ratios.iter().enumerate() {
            rows.push(vec![t.p.into(), k.into(), (*r).into()])?;
        }
        let ok = ceiling.is_none_or(|c| t.spread().is_some_and(|s| s <= c));
        all &= ok;
        summary.push(vec![
            t.p.into(),
            t.min().into(),
            t.max().into(),
            t.spread().into(),
            t.symmetric_bound().into(),
            ceiling.into(),
            ok.into(),
        ])?;
    }
    Ok((rows, summary, all))
}

/// Parseval, Littlewood-Paley and system-independence results as one report.
pub struct EquivalenceResults {
    pub lp: Vec<RatioTable>,
    pub lp_ceiling: f64,
    pub parseval: Vec<f64>,
    pub parseval_tolerance: f64,
    pub independence: Vec<RatioTable>,
    pub independence_ceiling: f64,
}

impl EquivalenceResults {
    pub fn parseval_max(&self) -> f64 {
        self.parseval.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }

    pub fn independence_bound(&self) -> f64 {
        self.independence.iter().map(RatioTable::symmetric_bound).fold(1.0, f64::max)
    }

    pub fn report(&self) -> Result<VerificationReport> {
        let (lp_rows, lp_summary, lp_ok) = ratio_tables("lp_ratio", &self.lp, Some(self.lp_ceiling))?;
        let (ind_rows, ind_summary, _) = ratio_tables("system_independence", &self.independence, None)?;
        let ind_ok = self.independence_bound() <= self.independence_ceiling;
        let parseval_ok = self.parseval_max() <= self.parseval_tolerance;
        let mut parseval = Table::new("parseval", &["member", "deviation"]);
        for (k, d) in self.parseval.iter().enumerate() {
            parseval.push(vec![k.into(), (*d).into()])?;
        }
        let status = if lp_ok && ind_ok && parseval_ok { Status::Pass } else { Status::Fail };
        let mut r = VerificationReport::new("equivalence", status);
        r.set("lp_passed", lp_ok);
        r.set("parseval_max_deviation", self.parseval_max());
        r.set("parseval_tolerance", self.parseval_tolerance);
        r.set("parseval_passed", parseval_ok);
        r.set("independence_bound", self.independence_bound());
        r.set("independence_ceiling", self.independence_ceiling);
        r.set("independence_passed", ind_ok);
        r.tables = vec![lp_summary, lp_rows, parseval, ind_summary, ind_rows];
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{default_system, make_system, BumpProfile, DyadicShape, DEFAULT_K_MAX};
    use crate::grid::make_grid;
    use crate::operator::{assemble_with_stencil, eigendecompose, make_potential, PotentialSpec, StencilOrder};
    use crate::verify::corpus::{make_corpus, CorpusKind};

    fn ed() -> EigenDecomposition {
        let g = make_grid(1, 8.0, 180).unwrap();
        let v = make_potential(PotentialSpec::Hermite, &g).unwrap();
        eigendecompose(&assemble_with_stencil(g, v, StencilOrder::Eighth).unwrap()).unwrap()
    }

    #[test]
    fn parseval_holds_for_square_normalized_system() {
        let ed = ed();
        let sys = make_system(BumpProfile::default(), DyadicShape::SquareNormalized, 0, 7, DEFAULT_K_MAX).unwrap();
        let corpus = make_corpus(&ed, CorpusKind::BandLimited, 10, 3, (0.0, 60.0)).unwrap();
        let dev = parseval_deviation(&corpus, &ed, &sys).unwrap();
        assert!(dev.iter().all(|d| d.abs() < 1e-10));
        let rho = equivalence_experiment(&corpus, &ed, &sys, &[2.0]).unwrap();
        assert!(rho[0].ratios.iter().all(|r| (r - 1.0).abs() < 1e-10));
    }

    #[test]
    fn eigenfunction_ratio_in_closed_form() {
        let ed = ed();
        let sys = default_system(0, 7).unwrap();
        let l = ed.eigenvalues()[5];
        let corpus = make_corpus(&ed, CorpusKind::Eigenfunctions, 2, 1, (l - 0.1, l + 0.1)).unwrap();
        let out = equivalence_experiment(&corpus, &ed, &sys, &[1.5, 3.0]).unwrap();
        let expected = 1.0 / sys.sum_of_squares(l).sqrt();
        for t in &out {
            assert!(t.ratios.iter().all(|r| (r - expected).abs() < 1e-10 * expected));
        }
    }

    #[test]
    fn rejects_endpoint_exponents() {
        let ed = ed();
        let sys = default_system(0, 5).unwrap();
        let corpus = make_corpus(&ed, CorpusKind::BandLimited, 2, 1, (0.0, 30.0)).unwrap();
        assert!(equivalence_experiment(&corpus, &ed, &sys, &[1.0]).is_err());
        assert!(equivalence_experiment(&corpus, &ed, &sys, &[f64::INFINITY]).is_err());
        assert!(equivalence_experiment(&corpus, &ed, &sys, &[]).is_err());
        let empty = Corpus { members: vec![], ..corpus };
        assert!(equivalence_experiment(&empty, &ed, &sys, &[2.0]).is_err());
    }

    #[test]
    fn identical_systems_are_independent() {
        let ed = ed();
        let sys = default_system(0, 6).unwrap();
        let corpus = make_corpus(&ed, CorpusKind::Gaussian, 3, 2, (0.0, 30.0)).unwrap();
        let out = system_independence(&corpus, &ed, &sys, &sys, &[3.0]).unwrap();
        assert!((out[0].symmetric_bound() - 1.0).abs() < 1e-14);
    }
}
