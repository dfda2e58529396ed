//! Experiment dispatch: one function per subcommand, each producing a
//! [`VerificationReport`].

use std::sync::{Arc, OnceLock};

use specband::calculus::{heat_kernel_eigen, mehler_kernel, Kernel};
use specband::dyadic::{make_system, validate_system, DyadicShape, DyadicSystem, ValidationOptions, DEFAULT_SAMPLE_DENSITY};
use specband::grid::{make_grid, Grid};
use specband::operator::{
    assemble_with_stencil, eigendecompose, load_tabulated, make_potential, EigenDecomposition, PotentialSpec, StencilOrder,
};
use specband::verify::equivalence::{ratio_tables, EquivalenceResults};
use specband::verify::lemmas::{hl_operator_norm, MaximalResults};
use specband::verify::{
    equivalence_experiment, fit_decay_constants, gaussian_bound_fit, gaussian_probes, gaussian_report, hebisch_check, make_corpus,
    maximal_characterization, maximal_lemma_check, parseval_deviation, sobolev_experiment, system_independence, Corpus,
    DecayOptions, GaussianSearch, HeatSamples, HebischOptions, LemmaOptions, Status, Table, VerificationReport,
};

use crate::config::{PotentialEntry, RunConfig};
use crate::error::CliError;

pub const EXPERIMENTS: [&str; 8] =
    ["validate-dyadic", "decay", "mehler", "gaussian-bound", "hebisch", "equivalence", "maximal", "sobolev"];

/// A configuration plus lazily built, shared numerical state.
pub struct Context {
    cfg: RunConfig,
    potential: PotentialSpec,
    eigen: OnceLock<Result<Arc<EigenDecomposition>, String>>,
    corpus: OnceLock<Result<Arc<Corpus>, String>>,
}

impl Context {
    /// Tabulated potentials are read here, so a bad path fails early.
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let nodes = cfg.grid.points.pow(cfg.grid.dimension as u32);
        let potential = match cfg.potential.entry() {
            PotentialEntry::Zero => PotentialSpec::Zero,
            PotentialEntry::Hermite => PotentialSpec::Hermite,
            PotentialEntry::PoschlTeller { nu } => PotentialSpec::PoschlTeller { nu },
            PotentialEntry::Tabulated { path } => load_tabulated(&path, nodes).map_err(|e| match e {
                specband::Error::Io(source) => CliError::Io { path: path.clone(), source },
                other => CliError::Invalid { key: "potential.path".into(), message: other.to_string() },
            })?,
        };
        Ok(Self { cfg, potential, eigen: OnceLock::new(), corpus: OnceLock::new() })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn grid(&self, points: usize) -> Result<Arc<Grid>, CliError> {
        let g = &self.cfg.grid;
        Ok(make_grid(g.dimension, g.halfwidth, points)?)
    }

    fn build_eigen(&self) -> Result<Arc<EigenDecomposition>, CliError> {
        let grid = self.grid(self.cfg.grid.points)?;
        let potential = make_potential(self.potential.clone(), &grid)?;
        let stencil = StencilOrder::from_order(self.cfg.grid.stencil_order)?;
        let op = assemble_with_stencil(grid, potential, stencil)?;
        Ok(Arc::new(eigendecompose(&op)?))
    }

    pub fn eigen(&self) -> Result<Arc<EigenDecomposition>, CliError> {
        self.eigen
            .get_or_init(|| self.build_eigen().map_err(|e| e.to_string()))
            .clone()
            .map_err(|e| CliError::Core(specband::Error::Eigensolver(e)))
    }

    pub fn corpus(&self) -> Result<Arc<Corpus>, CliError> {
        self.corpus
            .get_or_init(|| {
                let ed = self.eigen().map_err(|e| e.to_string())?;
                let c = &self.cfg.corpus;
                make_corpus(&ed, c.kind.into(), c.count, c.seed, self.cfg.band())
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(|e| CliError::Core(specband::Error::InvalidParameter(e)))
    }

    pub fn system_with(&self, profile: crate::config::ProfileConfig, shape: DyadicShape) -> Result<DyadicSystem, CliError> {
        let d = &self.cfg.dyadic;
        Ok(make_system(profile.profile(), shape, d.j_min, d.j_max, d.k_max)?)
    }

    pub fn system(&self) -> Result<DyadicSystem, CliError> {
        self.system_with(self.cfg.dyadic.profile, DyadicShape::Difference)
    }

    fn require_hermite(&self, experiment: &str) -> Result<(), CliError> {
        if self.cfg.potential.is_hermite() {
            Ok(())
        } else {
            Err(CliError::Unsupported { experiment: experiment.into(), requirement: "the Hermite potential".into() })
        }
    }
}

/// Warnings for blocks reaching past the median eigenvalue, above which the
/// finite-difference spectrum is not trusted, or past the top of the spectrum.
pub fn range_warnings(ed: &EigenDecomposition, system: &DyadicSystem) -> Vec<String> {
    let resolved = ed.resolved_cutoff(0.5);
    let top = ed.eigenvalues()[ed.len() - 1];
    system
        .indices()
        .filter_map(|j| {
            let hi = DyadicSystem::block_support(j).1;
            if hi > top {
                Some(format!("block j={j} extends to {hi} beyond the largest eigenvalue {top:.4}"))
            } else if hi > resolved {
                Some(format!("block j={j} extends to {hi} beyond the resolved spectrum {resolved:.4}"))
            } else {
                None
            }
        })
        .collect()
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Run one experiment by name.
pub fn run_experiment(ctx: &Context, name: &str) -> Result<VerificationReport, CliError> {
    let mut report = match name {
        "validate-dyadic" => validate_dyadic(ctx),
        "decay" => decay(ctx),
        "mehler" => mehler(ctx),
        "gaussian-bound" => gaussian(ctx),
        "hebisch" => hebisch(ctx),
        "equivalence" => equivalence(ctx),
        "maximal" => maximal(ctx),
        "sobolev" => sobolev(ctx),
        other => Err(CliError::Invalid { key: "command".into(), message: format!("unknown experiment {other}") }),
    }?;
    stamp(ctx, &mut report);
    Ok(report)
}

/// A failed report carrying the error, so partial runs still leave a trace.
pub fn error_report(ctx: &Context, name: &str, err: &CliError) -> VerificationReport {
    let mut r = VerificationReport::new(name, Status::Fail);
    r.warnings.push(format!("experiment aborted: {err}"));
    stamp(ctx, &mut r);
    r
}

fn stamp(ctx: &Context, r: &mut VerificationReport) {
    r.config = ctx.cfg.echo();
    r.seed = Some(ctx.cfg.corpus.seed);
    r.timestamp = std::env::var("SOURCE_DATE_EPOCH").ok();
}

fn validate_dyadic(ctx: &Context) -> Result<VerificationReport, CliError> {
    let shape = if ctx.cfg.negative_control { DyadicShape::PlateauRemoved } else { DyadicShape::Difference };
    let system = ctx.system_with(ctx.cfg.dyadic.profile, shape)?;
    let opts = ValidationOptions {
        lambda_range: system.covered_range(),
        sample_density: DEFAULT_SAMPLE_DENSITY,
        k_max: ctx.cfg.dyadic.k_max,
        sum_floor: 0.0,
    };
    let v = validate_system(&system, &opts)?;
    let mut r = VerificationReport::new("validate-dyadic", status(v.passed));
    let mut cols = vec!["j".to_owned()];
    cols.extend((0..=opts.k_max).map(|k| format!("c_{k}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("derivative_bounds", &col_refs);
    for (j, b) in &v.per_index_bounds {
        let mut row = vec![(*j).into()];
        row.extend(b.iter().map(|&x| x.into()));
        t.push(row)?;
    }
    r.set("support_violations", v.support_violations);
    r.set("sum_lower", v.sum_lower);
    r.set("sum_upper", v.sum_upper);
    r.set("range_lo", opts.lambda_range.0);
    r.set("range_hi", opts.lambda_range.1);
    for (k, c) in v.derivative_bounds.iter().enumerate() {
        r.set(&format!("c_{k}"), *c);
    }
    r.tables.push(t);
    Ok(r)
}

fn decay(ctx: &Context) -> Result<VerificationReport, CliError> {
    let ed = ctx.eigen()?;
    let profile = if ctx.cfg.negative_control { ctx.cfg.dyadic.negative_profile } else { ctx.cfg.dyadic.profile };
    let system = ctx.system_with(profile, DyadicShape::Difference)?;
    let d = &ctx.cfg.decay;
    let opts = DecayOptions {
        n_list: d.n_list.clone(),
        alphas: d.alphas.clone(),
        lambda_cut: d.lambda_cut,
        min_block_weight: d.min_block_weight,
        ceiling: ctx.cfg.ceilings.decay,
        // Below zero energy only the high-energy blocks are claimed.
        exploratory_below: (ed.potential_min() < 0.0).then_some(0),
    };
    let fit = fit_decay_constants(&ed, &system, &opts)?;
    let mut r = fit.report()?;
    r.set("negative_control", ctx.cfg.negative_control);
    r.warnings.extend(range_warnings(&ed, &system));
    Ok(r)
}

/// Exact Hermite eigenvalues in `n` dimensions, ascending.
pub fn hermite_spectrum(dimension: usize, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = if dimension == 1 {
        (0..count).map(|k| 2.0 * k as f64 + 1.0).collect()
    } else {
        (0..count).flat_map(|a| (0..count).map(move |b| 2.0 * (a + b) as f64 + 2.0)).collect()
    };
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v
}

/// `max |a − b| / max |b|` over node pairs with both points in the window,
/// for the values and (when present) the gradient magnitude components.
fn window_errors(grid: &Grid, a: &Kernel, b: &Kernel, window: f64) -> (f64, Option<f64>) {
    let nodes: Vec<usize> = (0..grid.len())
        .filter(|&k| grid.point(k)[..grid.dimension()].iter().all(|x| x.abs() <= window + 1e-12))
        .collect();
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for &x in &nodes {
        for &y in &nodes {
            diff = diff.max((a.value(x, y) - b.value(x, y)).abs());
            scale = scale.max(b.value(x, y).abs());
        }
    }
    let grad = match (a.gradient(), b.gradient()) {
        (Some(ga), Some(gb)) => {
            let (mut d, mut s) = (0.0f64, 0.0f64);
            for (ma, mb) in ga.iter().zip(gb) {
                for &x in &nodes {
                    for &y in &nodes {
                        d = d.max((ma[(x, y)] - mb[(x, y)]).abs());
                        s = s.max(mb[(x, y)].abs());
                    }
                }
            }
            Some(d / s)
        }
        _ => None,
    };
    (diff / scale, grad)
}

fn mehler(ctx: &Context) -> Result<VerificationReport, CliError> {
    ctx.require_hermite("mehler")?;
    let ed = ctx.eigen()?;
    let m = &ctx.cfg.mehler;
    let grid = ed.grid().clone();
    let exact = hermite_spectrum(grid.dimension(), m.eigen_count.min(ed.len()));
    let mut eig = Table::new("eigenvalues", &["k", "lambda", "exact", "abs_error"]);
    let mut eig_err = 0.0f64;
    for (k, &e) in exact.iter().enumerate() {
        let l = ed.eigenvalues()[k];
        eig_err = eig_err.max((l - e).abs());
        eig.push(vec![k.into(), l.into(), e.into(), (l - e).abs().into()])?;
    }
    let mut ker = Table::new("kernels", &["t", "kernel_rel_error", "gradient_rel_error"]);
    let (mut kmax, mut gmax) = (0.0f64, 0.0f64);
    for &t in &m.times {
        let series = heat_kernel_eigen(&ed, t, true)?;
        let closed = mehler_kernel(&grid, t, true)?;
        // Analytic gradient as reference, finite differences under test.
        let (k_err, g_err) = window_errors(&grid, &series, &closed, m.window);
        let g_err = g_err.unwrap_or(f64::NAN);
        kmax = kmax.max(k_err);
        gmax = gmax.max(g_err);
        ker.push(vec![t.into(), k_err.into(), g_err.into()])?;
    }
    let ok = eig_err <= m.eigen_tolerance && kmax <= m.kernel_tolerance && gmax <= m.gradient_tolerance;
    let mut r = VerificationReport::new("mehler", status(ok));
    r.set("max_eigen_error", eig_err);
    r.set("eigen_tolerance", m.eigen_tolerance);
    r.set("max_kernel_rel_error", kmax);
    r.set("kernel_tolerance", m.kernel_tolerance);
    r.set("max_gradient_rel_error", gmax);
    r.set("gradient_tolerance", m.gradient_tolerance);
    r.tables = vec![ker, eig];
    Ok(r)
}

fn gaussian(ctx: &Context) -> Result<VerificationReport, CliError> {
    ctx.require_hermite("gaussian-bound")?;
    let g = &ctx.cfg.gaussian;
    let search = GaussianSearch { c_max: g.c_max, ..Default::default() };
    let fits = [0u8, 1]
        .iter()
        .map(|&alpha| {
            let samples = HeatSamples::mehler(ctx.cfg.grid.dimension, alpha, &g.times, g.window, g.step)?;
            gaussian_bound_fit(&samples, &search)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(gaussian_report(&fits)?)
}

fn hebisch(ctx: &Context) -> Result<VerificationReport, CliError> {
    let ed = ctx.eigen()?;
    if ed.potential_min() < 0.0 {
        return Err(CliError::Unsupported { experiment: "hebisch".into(), requirement: "a nonnegative potential".into() });
    }
    let system = ctx.system()?;
    let h = &ctx.cfg.hebisch;
    let opts = HebischOptions {
        betas: h.betas.clone(),
        sobolev_index: h.sobolev_index,
        j_min: ctx.cfg.dyadic.j_min,
        j_max: ctx.cfg.dyadic.j_max,
        ceiling: ctx.cfg.ceilings.hebisch,
    };
    let out = hebisch_check(&ed, &|x| system.base(x), &opts)?;
    Ok(out.report()?)
}

fn equivalence(ctx: &Context) -> Result<VerificationReport, CliError> {
    let ed = ctx.eigen()?;
    let corpus = ctx.corpus()?;
    let system = ctx.system()?;
    let p_list = &ctx.cfg.equivalence.p_list;
    let square = ctx.system_with(ctx.cfg.dyadic.profile, DyadicShape::SquareNormalized)?;
    let alt = ctx.system_with(ctx.cfg.dyadic.alt_profile, DyadicShape::Difference)?;
    let results = EquivalenceResults {
        lp: equivalence_experiment(&corpus, &ed, &system, p_list)?,
        lp_ceiling: ctx.cfg.ceilings.equivalence,
        parseval: parseval_deviation(&corpus, &ed, &square)?,
        parseval_tolerance: ctx.cfg.equivalence.parseval_tolerance,
        independence: system_independence(&corpus, &ed, &system, &alt, p_list)?,
        independence_ceiling: ctx.cfg.ceilings.independence,
    };
    let mut r = results.report()?;
    r.warnings.extend(range_warnings(&ed, &system));
    Ok(r)
}

fn maximal(ctx: &Context) -> Result<VerificationReport, CliError> {
    let ed = ctx.eigen()?;
    let corpus = ctx.corpus()?;
    let system = ctx.system()?;
    let m = &ctx.cfg.maximal;
    let c = &ctx.cfg.ceilings;
    let mut p_all = m.p_list.clone();
    if m.include_p_infinity {
        p_all.push(f64::INFINITY);
    }
    let opts = LemmaOptions {
        r_list: m.r_list.clone(),
        p_list: p_all.clone(),
        q: m.q,
        bernstein_s: m.bernstein_s,
        bernstein_ceiling: c.bernstein,
        peetre_hl_ceiling: c.peetre_hl,
        maximal_ceiling: c.maximal,
    };
    let lemmas = maximal_lemma_check(&corpus, &ed, &system, &opts)?;
    let pq: Vec<(f64, f64)> = m.pq_list.iter().map(|&[p, q]| (p, q)).collect();
    let characterization = maximal_characterization(&corpus, &ed, &system, &pq, 0.0, m.s_offset)?;
    let points = ctx.cfg.grid.points;
    let fine = gaussian_probes(&ctx.grid(points)?, m.probe_count, ctx.cfg.corpus.seed)?;
    let coarse = gaussian_probes(&ctx.grid(points / 2)?, m.probe_count, ctx.cfg.corpus.seed)?;
    let resolution = p_all
        .iter()
        .map(|&p| Ok((p, hl_operator_norm(&fine, p)?, hl_operator_norm(&coarse, p)?)))
        .collect::<Result<Vec<_>, specband::Error>>()?;
    let results = MaximalResults {
        lemmas,
        characterization,
        characterization_ceiling: c.characterization,
        resolution,
        resolution_tolerance: m.resolution_tolerance,
    };
    let mut r = results.report()?;
    r.warnings.extend(range_warnings(&ed, &system));
    Ok(r)
}

fn sobolev(ctx: &Context) -> Result<VerificationReport, CliError> {
    let ed = ctx.eigen()?;
    let corpus = ctx.corpus()?;
    let system = ctx.system()?;
    let s = &ctx.cfg.sobolev;
    let mut r = VerificationReport::new("sobolev", Status::Exploratory);
    r.set("s", s.s);
    match sobolev_experiment(&corpus, &ed, &system, s.s, &s.p_list) {
        Ok(tables) => {
            let (rows, summary, _) = ratio_tables("sobolev_ratio", &tables, None)?;
            r.tables = vec![summary, rows];
        }
        Err(e) => r.warnings.push(format!("not computed: {e}")),
    }
    r.warnings.extend(range_warnings(&ed, &system));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_spectra() {
        assert_eq!(hermite_spectrum(1, 4), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(hermite_spectrum(2, 6), vec![2.0, 4.0, 4.0, 6.0, 6.0, 6.0]);
    }
}
