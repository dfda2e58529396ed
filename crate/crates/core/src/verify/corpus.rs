//! Seeded test-function corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use std::sync::Arc;

use crate::grid::{lp_norm, Grid, GridFunction};
use crate::operator::EigenDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    /// Gaussian random coefficients on every eigenfunction of the band.
    BandLimited,
    /// Randomly placed and scaled Gaussians projected onto the band.
    Gaussian,
    /// Random combinations of at most three eigenfunctions of the band.
    Eigenfunctions,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub kind: CorpusKind,
    pub seed: u64,
    pub band: (f64, f64),
    pub members: Vec<GridFunction>,
}

/// `count` functions with unit `L²` norm and spectrum in `band`
/// (closed interval of eigenvalues).
pub fn make_corpus(ed: &EigenDecomposition, kind: CorpusKind, count: usize, seed: u64, band: (f64, f64)) -> Result<Corpus> {
    if count == 0 {
        return Err(Error::Empty("corpus"));
    }
    if !(band.0 <= band.1) {
        return Err(invalid(format!("band [{}, {}] is empty", band.0, band.1)));
    }
    let idx: Vec<usize> = ed.band(band.0, band.1).collect();
    if idx.is_empty() {
        return Err(invalid(format!("no eigenvalue lies in [{}, {}]", band.0, band.1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = ed.grid().dimension();
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let mut coef = vec![0.0; ed.len()];
        match kind {
            CorpusKind::BandLimited => {
                for &k in &idx {
                    coef[k] = rng.sample(StandardNormal);
                }
            }
            CorpusKind::Gaussian => {
                let width: f64 = rng.random_range(0.5..2.0);
                let mut centre = [0.0; 2];
                for c in centre.iter_mut().take(dim) {
                    *c = rng.random_range(-3.0..3.0);
                }
                let g = GridFunction::from_fn(ed.grid().clone(), |x| {
                    let r2: f64 = (0..dim).map(|a| (x[a] - centre[a]).powi(2)).sum();
                    (-r2 / (2.0 * width * width)).exp()
                })?;
                let all = ed.coefficients(&g)?;
                for &k in &idx {
                    coef[k] = all[k];
                }
            }
            CorpusKind::Eigenfunctions => {
                let terms = rng.random_range(1..=3.min(idx.len()));
                for _ in 0..terms {
                    let k = idx[rng.random_range(0..idx.len())];
                    coef[k] += rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        let f = ed.synthesize(&coef);
        let norm = lp_norm(&f, 2.0)?;
        if !(norm > 1e-300) {
            return Err(invalid("a corpus member vanished on the band; widen it or change the seed"));
        }
        members.push(f.scale(1.0 / norm));
    }
    Ok(Corpus { kind, seed, band, members })
}

/// Raw Gaussians `e^{−|x−c|²/(2w²)}` with seeded centres in `[−3, 3]^n` and
/// widths in `[0.5, 2)`, sampled on `grid`. The same seed gives the same
/// continuum functions on any grid.
pub fn gaussian_probes(grid: &Arc<Grid>, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    if count == 0 {
        return Err(Error::Empty("probe set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.dimension();
    (0..count)
        .map(|_| {
            let width: f64 = rng.random_range(0.5..2.0);
            let centre: [f64; 2] = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            GridFunction::from_fn(grid.clone(), |x| {
                let r2: f64 = (0..dim).map(|a| (x[a] - centre[a]).powi(2)).sum();
                (-r2 / (2.0 * width * width)).exp()
            })
        })
        .collect()
}
