//! Bernstein, Peetre-versus-Hardy-Littlewood and maximal-inequality
//! constants, and the maximal characterization of Triebel-Lizorkin norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::report::{Status, Table, VerificationReport};
use crate::dyadic::DyadicSystem;
use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, mixed_norm, GridFunction, MixedMode, Stack};
use crate::maximal::{hl_maximal, hl_maximal_power, peetre_of_block, MaximalConfig, PeetreOrder};
use crate::operator::EigenDecomposition;
use crate::spaces::{dyadic_blocks, maximal_blocks, norm_of_blocks, SpaceFamily, SpaceParams, ThresholdMode};

/// Blocks with `‖φ_j f‖_∞ ≤ DEGENERATE · ‖f‖_∞` are annihilated and their
/// ratios (0/0) are excluded.
pub const DEGENERATE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaOptions {
    pub r_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub q: f64,
    /// Peetre parameter of the Bernstein ratio.
    pub bernstein_s: f64,
    pub bernstein_ceiling: f64,
    pub peetre_hl_ceiling: f64,
    pub maximal_ceiling: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            r_list: vec![1.0, 2.0],
            p_list: vec![1.5, 2.0, 3.0, 4.0, f64::INFINITY],
            q: 2.0,
            bernstein_s: 2.0,
            bernstein_ceiling: 10.0,
            peetre_hl_ceiling: 10.0,
            maximal_ceiling: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaResults {
    /// `(j, member, R₁)`.
    pub bernstein: Vec<(i32, usize, f64)>,
    /// `(j, member, r, R₂)`.
    pub peetre_hl: Vec<(i32, usize, f64, f64)>,
    /// `(p, C_p)`.
    pub c_p: Vec<(f64, f64)>,
    /// `(p, q, C_{p,q})`.
    pub c_pq: Vec<(f64, f64, f64)>,
    pub excluded: usize,
    pub options: LemmaOptions,
}

fn top<T>(rows: &[T], f: impl Fn(&T) -> f64) -> f64 {
    rows.iter().map(f).fold(0.0, f64::max)
}

impl LemmaResults {
    pub fn bernstein_max(&self) -> f64 {
        top(&self.bernstein, |r| r.2)
    }

    pub fn peetre_hl_max(&self) -> f64 {
        top(&self.peetre_hl, |r| r.3)
    }

    pub fn maximal_max(&self) -> f64 {
        top(&self.c_p, |r| r.1).max(top(&self.c_pq, |r| r.2))
    }

    pub fn passed(&self) -> bool {
        let o = &self.options;
        self.bernstein_max() <= o.bernstein_ceiling
            && self.peetre_hl_max() <= o.peetre_hl_ceiling
            && self.maximal_max() <= o.maximal_ceiling
    }

    pub fn tables(&self) -> Result<Vec<Table>> {
        let mut b = Table::new("bernstein", &["j", "member", "ratio"]);
        for &(j, m, v) in &self.bernstein {
            b.push(vec![j.into(), m.into(), v.into()])?;
        }
        let mut h = Table::new("peetre_hl", &["j", "member", "r", "ratio"]);
        for &(j, m, r, v) in &self.peetre_hl {
            h.push(vec![j.into(), m.into(), r.into(), v.into()])?;
        }
        let mut c = Table::new("maximal_inequality", &["p", "q", "constant"]);
        for &(p, v) in &self.c_p {
            c.push(vec![p.into(), crate::verify::Cell::Null, v.into()])?;
        }
        for &(p, q, v) in &self.c_pq {
            c.push(vec![p.into(), q.into(), v.into()])?;
        }
        Ok(vec![b, h, c])
    }

    pub fn summarize(&self, r: &mut VerificationReport) {
        let o = &self.options;
        r.set("bernstein_max", self.bernstein_max());
        r.set("bernstein_ceiling", o.bernstein_ceiling);
        r.set("peetre_hl_max", self.peetre_hl_max());
        r.set("peetre_hl_ceiling", o.peetre_hl_ceiling);
        r.set("maximal_max", self.maximal_max());
        r.set("maximal_ceiling", o.maximal_ceiling);
        r.set("excluded_blocks", self.excluded);
    }
}

fn degenerate(block: &GridFunction, f: &GridFunction) -> bool {
    block.abs_max() <= DEGENERATE * f.abs_max()
}

/// `max_x a(x) / b(x)` over nodes with `b > 0`.
fn max_ratio(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .filter(|(_, &d)| d > 0.0)
        .map(|(n, d)| n / d)
        .fold(0.0, f64::max)
}

/// `sup_f ‖M f‖_p / ‖f‖_p` over the given functions.
pub fn hl_operator_norm(functions: &[GridFunction], p: f64) -> Result<f64> {
    if functions.is_empty() {
        return Err(Error::Empty("function set"));
    }
    functions
        .par_iter()
        .map(|f| {
            let cfg = MaximalConfig::dyadic(f.grid());
            Ok(lp_norm(&hl_maximal(f, &cfg), p)? / lp_norm(f, p)?)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

struct MemberOutcome {
    bernstein: Vec<(i32, f64)>,
    peetre_hl: Vec<(i32, f64, f64)>,
    c_p: Vec<f64>,
    c_pq: Vec<f64>,
    excluded: usize,
}

fn member_check(f: &GridFunction, ed: &EigenDecomposition, system: &DyadicSystem, opts: &LemmaOptions) -> Result<MemberOutcome> {
    let n = ed.grid().dimension() as f64;
    let cfg = MaximalConfig::dyadic(ed.grid());
    let blocks = dyadic_blocks(ed, system, f)?;
    let mut out = MemberOutcome { bernstein: vec![], peetre_hl: vec![], c_p: vec![], c_pq: vec![], excluded: 0 };
    for (j, g) in blocks.iter() {
        if degenerate(g, f) {
            out.excluded += 1;
            continue;
        }
        let star = peetre_of_block(g, j, opts.bernstein_s, PeetreOrder::Star)?;
        let star_star = peetre_of_block(g, j, opts.bernstein_s, PeetreOrder::StarStar)?;
        let scaled = star.scale((0.5 * f64::from(j)).exp2());
        out.bernstein.push((j, max_ratio(&star_star, &scaled)));
        for &r in &opts.r_list {
            let lhs = peetre_of_block(g, j, n / r, PeetreOrder::Star)?;
            let rhs = hl_maximal_power(g, r, &cfg)?;
            out.peetre_hl.push((j, r, max_ratio(&lhs, &rhs)));
        }
    }
    let mf = hl_maximal(f, &cfg);
    for &p in &opts.p_list {
        out.c_p.push(lp_norm(&mf, p)? / lp_norm(f, p)?);
    }
    let maximal_stack = Stack::new(
        blocks.indices().to_vec(),
        blocks.members().iter().map(|g| hl_maximal(g, &cfg)).collect(),
    )?;
    for &p in opts.p_list.iter().filter(|p| p.is_finite()) {
        let num = mixed_norm(&maximal_stack, 0.0, p, opts.q, MixedMode::LpOfLq)?;
        let den = mixed_norm(&blocks, 0.0, p, opts.q, MixedMode::LpOfLq)?;
        out.c_pq.push(if den > 0.0 { num / den } else { 0.0 });
    }
    Ok(out)
}

/// Constants of the three maximal lemmas over a corpus.
pub fn maximal_lemma_check(corpus: &Corpus, ed: &EigenDecomposition, system: &DyadicSystem, opts: &LemmaOptions) -> Result<LemmaResults> {
    if corpus.members.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if opts.r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("r must lie in (0, ∞)"));
    }
    if opts.p_list.is_empty() || opts.p_list.iter().any(|p| !(*p > 1.0)) {
        return Err(invalid("p must lie in (1, ∞]"));
    }
    if !(opts.q >= 1.0) || !(opts.bernstein_s > 0.0) {
        return Err(invalid("q must be ≥ 1 and the Bernstein parameter s > 0"));
    }
    let outcomes: Vec<MemberOutcome> = corpus
        .members
        .par_iter()
        .map(|f| member_check(f, ed, system, opts))
        .collect::<Result<_>>()?;
    let mut res = LemmaResults {
        bernstein: vec![],
        peetre_hl: vec![],
        c_p: vec![],
        c_pq: vec![],
        excluded: 0,
        options: opts.clone(),
    };
    for (m, o) in outcomes.iter().enumerate() {
        res.bernstein.extend(o.bernstein.iter().map(|&(j, v)| (j, m, v)));
        res.peetre_hl.extend(o.peetre_hl.iter().map(|&(j, r, v)| (j, m, r, v)));
        res.excluded += o.excluded;
    }
    for (i, &p) in opts.p_list.iter().enumerate() {
        res.c_p.push((p, top(&outcomes, |o| o.c_p[i])));
    }
    for (i, &p) in opts.p_list.iter().filter(|p| p.is_finite()).enumerate() {
        res.c_pq.push((p, opts.q, top(&outcomes, |o| o.c_pq[i])));
    }
    Ok(res)
}

/// `‖f‖_{F, maximal} / ‖f‖_{F, plain}` with `s = n/p + offset`, per member,
/// for every `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Characterization {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub ratios: Vec<f64>,
}

pub fn maximal_characterization(
    corpus: &Corpus,
    ed: &EigenDecomposition,
    system: &DyadicSystem,
    pq_list: &[(f64, f64)],
    alpha: f64,
    s_offset: f64,
) -> Result<Vec<Characterization>> {
    if corpus.members.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if pq_list.is_empty() {
        return Err(Error::Empty("(p, q) list"));
    }
    let n = ed.grid().dimension() as f64;
    let blocks: Vec<Stack> = corpus.members.par_iter().map(|f| dyadic_blocks(ed, system, f)).collect::<Result<_>>()?;
    pq_list
        .iter()
        .map(|&(p, q)| {
            if !(p > 0.0 && p < f64::INFINITY && q > 0.0) {
                return Err(invalid(format!("(p, q) = ({p}, {q}) is not admissible for Triebel-Lizorkin norms")));
            }
            let s = n / p + s_offset;
            let params = SpaceParams { alpha, p, q, s: Some(s), threshold: ThresholdMode::Strict };
            if !(s > n / p.min(q)) {
                return Err(invalid(format!("s = {s} is not above the threshold n / min(p, q)")));
            }
            let ratios = blocks
                .par_iter()
                .map(|b| {
                    let plain = norm_of_blocks(b, &params, SpaceFamily::TriebelLizorkin)?;
                    let max = norm_of_blocks(&maximal_blocks(b, s)?, &params, SpaceFamily::TriebelLizorkin)?;
                    Ok(max / plain)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(Characterization { p, q, s, ratios })
        })
        .collect()
}

pub fn characterization_table(rows: &[Characterization], ceiling: f64) -> Result<(Table, bool)> {
    let mut t = Table::new("characterization", &["p", "q", "s", "min_ratio", "max_ratio", "ceiling", "passed"]);
    let mut all = true;
    for c in rows {
        let lo = c.ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.ratios.iter().copied().fold(0.0, f64::max);
        let ok = lo >= 1.0 && hi <= ceiling;
        all &= ok;
        t.push(vec![c.p.into(), c.q.into(), c.s.into(), lo.into(), hi.into(), ceiling.into(), ok.into()])?;
    }
    Ok((t, all))
}

/// Lemma constants plus the characterization and the resolution check.
pub struct MaximalResults {
    pub lemmas: LemmaResults,
    pub characterization: Vec<Characterization>,
    pub characterization_ceiling: f64,
    /// `(p, C_p fine, C_p coarse)`.
    pub resolution: Vec<(f64, f64, f64)>,
    pub resolution_tolerance: f64,
}

impl MaximalResults {
    pub fn resolution_ok(&self) -> bool {
        self.resolution.iter().all(|&(_, a, b)| (a / b - 1.0).abs() <= self.resolution_tolerance)
    }

    pub fn report(&self) -> Result<VerificationReport> {
        let (ct, c_ok) = characterization_table(&self.characterization, self.characterization_ceiling)?;
        let mut rt = Table::new("resolution", &["p", "c_p_fine", "c_p_coarse", "relative_change"]);
        for &(p, a, b) in &self.resolution {
            rt.push(vec![p.into(), a.into(), b.into(), (a / b - 1.0).into()])?;
        }
        let ok = self.lemmas.passed() && c_ok && self.resolution_ok();
        let mut r = VerificationReport::new("maximal", if ok { Status::Pass } else { Status::Fail });
        self.lemmas.summarize(&mut r);
        r.set("characterization_passed", c_ok);
        r.set("resolution_passed", self.resolution_ok());
        r.set("resolution_tolerance", self.resolution_tolerance);
        let mut tables = self.lemmas.tables()?;
        tables.push(ct);
        tables.push(rt);
        r.tables = tables;
        Ok(r)
    }
}
