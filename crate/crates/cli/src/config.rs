//! Run configuration: JSON in, validated and defaulted.

use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use specband::dyadic::BumpProfile;
use specband::verify::gaussian::default_times;
use specband::verify::CorpusKind;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    Zero,
    Hermite,
    PoschlTeller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialEntry {
    Zero,
    Hermite,
    PoschlTeller {
        #[serde(default = "default_nu")]
        nu: u32,
    },
    /// Node values from a CSV file (`index,value` rows, optional header).
    Tabulated { path: PathBuf },
}

fn default_nu() -> u32 {
    1
}

/// `"hermite"` or `{"kind": "poschl_teller", "nu": 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum PotentialConfig {
    Name(PotentialName),
    Entry(PotentialEntry),
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig::Name(PotentialName::Hermite)
    }
}

impl PotentialConfig {
    pub fn entry(&self) -> PotentialEntry {
        match self {
            PotentialConfig::Name(PotentialName::Zero) => PotentialEntry::Zero,
            PotentialConfig::Name(PotentialName::Hermite) => PotentialEntry::Hermite,
            PotentialConfig::Name(PotentialName::PoschlTeller) => PotentialEntry::PoschlTeller { nu: default_nu() },
            PotentialConfig::Entry(e) => e.clone(),
        }
    }

    pub fn is_hermite(&self) -> bool {
        self.entry() == PotentialEntry::Hermite
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dimension: usize,
    pub halfwidth: f64,
    pub points: usize,
    /// Order of the finite-difference Laplacian: 2, 4, 6 or 8.
    pub stencil_order: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dimension: 1, halfwidth: 12.0, points: 1024, stencil_order: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Mollifier {
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    Indicator {
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
}

fn default_sharpness() -> f64 {
    1.0
}

fn default_cutoff() -> f64 {
    0.7
}

impl ProfileConfig {
    pub fn profile(self) -> BumpProfile {
        match self {
            ProfileConfig::Mollifier { sharpness } => BumpProfile::Mollifier { sharpness },
            ProfileConfig::Indicator { cutoff } => BumpProfile::Indicator { cutoff },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct DyadicConfig {
    pub j_min: i32,
    pub j_max: i32,
    pub k_max: usize,
    /// Profile of the main system.
    pub profile: ProfileConfig,
    /// Second admissible profile for the system-independence comparison.
    pub alt_profile: ProfileConfig,
    /// Discontinuous profile used with `--negative-control`.
    pub negative_profile: ProfileConfig,
}

impl Default for DyadicConfig {
    fn default() -> Self {
        Self {
            j_min: 0,
            j_max: 8,
            k_max: 4,
            profile: ProfileConfig::Mollifier { sharpness: 1.0 },
            alt_profile: ProfileConfig::Mollifier { sharpness: 0.5 },
            negative_profile: ProfileConfig::Indicator { cutoff: 0.7 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKindConfig {
    BandLimited,
    Gaussian,
    Eigenfunctions,
}

impl From<CorpusKindConfig> for CorpusKind {
    fn from(k: CorpusKindConfig) -> Self {
        match k {
            CorpusKindConfig::BandLimited => CorpusKind::BandLimited,
            CorpusKindConfig::Gaussian => CorpusKind::Gaussian,
            CorpusKindConfig::Eigenfunctions => CorpusKind::Eigenfunctions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub kind: CorpusKindConfig,
    pub count: usize,
    pub seed: u64,
    /// Eigenvalue band `[lo, hi]`; defaults to `[0, 2^{j_max − 1}]`.
    pub band: Option<[f64; 2]>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { kind: CorpusKindConfig::BandLimited, count: 50, seed: 42, band: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub n_list: Vec<u32>,
    pub alphas: Vec<u8>,
    /// Resolved-spectrum cutoff; defaults to the median discrete eigenvalue.
    pub lambda_cut: Option<f64>,
    pub min_block_weight: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { n_list: vec![1, 2, 4], alphas: vec![0, 1], lambda_cut: None, min_block_weight: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MehlerConfig {
    pub times: Vec<f64>,
    pub window: f64,
    /// Eigenvalues `λ_0 .. λ_{count−1}` compared with the exact spectrum.
    pub eigen_count: usize,
    pub eigen_tolerance: f64,
    pub kernel_tolerance: f64,
    pub gradient_tolerance: f64,
}

impl Default for MehlerConfig {
    fn default() -> Self {
        Self {
            times: vec![0.1, 0.5, 1.0],
            window: 4.0,
            eigen_count: 21,
            eigen_tolerance: 1e-3,
            kernel_tolerance: 1e-6,
            gradient_tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub times: Vec<f64>,
    pub window: f64,
    pub step: f64,
    pub c_max: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self { times: default_times(), window: 6.0, step: 0.1, c_max: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct HebischConfig {
    pub betas: Vec<f64>,
    pub sobolev_index: f64,
}

impl Default for HebischConfig {
    fn default() -> Self {
        Self { betas: vec![0.0, 2.0], sobolev_index: 3.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceConfig {
    /// Exponents in `(1, ∞)`.
    pub p_list: Vec<f64>,
    pub parseval_tolerance: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self { p_list: vec![1.5, 2.0, 3.0, 4.0], parseval_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MaximalConfigSection {
    pub r_list: Vec<f64>,
    /// Finite exponents in `(1, ∞)`.
    pub p_list: Vec<f64>,
    /// Also estimate `C_∞`.
    pub include_p_infinity: bool,
    pub q: f64,
    pub bernstein_s: f64,
    /// `(p, q)` pairs for the maximal characterization; `s = n/p + s_offset`.
    pub pq_list: Vec<[f64; 2]>,
    pub s_offset: f64,
    /// Gaussian probes for the two-resolution `C_p` comparison.
    pub probe_count: usize,
    pub resolution_tolerance: f64,
}

impl Default for MaximalConfigSection {
    fn default() -> Self {
        Self {
            r_list: vec![1.0, 2.0],
            p_list: vec![1.5, 2.0, 3.0, 4.0],
            include_p_infinity: true,
            q: 2.0,
            bernstein_s: 2.0,
            pq_list: vec![[2.0, 2.0], [4.0, 2.0]],
            s_offset: 1.0,
            probe_count: 20,
            resolution_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevConfig {
    pub s: f64,
    pub p_list: Vec<f64>,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        Self { s: 1.0, p_list: vec![1.5, 2.0, 3.0, 4.0] }
    }
}

/// Ceilings turning "uniform constant" claims into bounded-spread checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Ceilings {
    pub decay: f64,
    pub equivalence: f64,
    pub independence: f64,
    pub bernstein: f64,
    pub peetre_hl: f64,
    pub maximal: f64,
    pub characterization: f64,
    pub hebisch: f64,
}

impl Default for Ceilings {
    fn default() -> Self {
        Self {
            decay: 50.0,
            equivalence: 10.0,
            independence: 10.0,
            bernstein: 10.0,
            peetre_hl: 10.0,
            maximal: 10.0,
            characterization: 10.0,
            hebisch: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("reports"), format: OutputFormat::Both }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    pub dyadic: DyadicConfig,
    pub corpus: CorpusConfig,
    pub decay: DecayConfig,
    pub mehler: MehlerConfig,
    pub gaussian: GaussianConfig,
    pub hebisch: HebischConfig,
    pub equivalence: EquivalenceConfig,
    pub maximal: MaximalConfigSection,
    pub sobolev: SobolevConfig,
    pub ceilings: Ceilings,
    pub output: OutputConfig,
    /// Swap in the negative-control profile (decay) or plateau-free shape
    /// (validate-dyadic).
    pub negative_control: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            potential: PotentialConfig::default(),
            grid: GridConfig::default(),
            dyadic: DyadicConfig::default(),
            corpus: CorpusConfig::default(),
            decay: DecayConfig::default(),
            mehler: MehlerConfig::default(),
            gaussian: GaussianConfig::default(),
            hebisch: HebischConfig::default(),
            equivalence: EquivalenceConfig::default(),
            maximal: MaximalConfigSection::default(),
            sobolev: SobolevConfig::default(),
            ceilings: Ceilings::default(),
            output: OutputConfig::default(),
            negative_control: false,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Invalid { key: key.to_owned(), message: msg.into() }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be a positive finite number, got {v}")))
    }
}

fn open_exponents(key: &str, list: &[f64]) -> Result<(), CliError> {
    if list.is_empty() {
        return Err(bad(key, "must not be empty"));
    }
    match list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
        Some(p) => Err(bad(key, format!("p = {p} is outside (1, ∞)"))),
        None => Ok(()),
    }
}

impl RunConfig {
    /// Parse JSON text, apply defaults and validate.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.finalize()?;
        Ok(cfg)
    }

    /// Fill derived defaults and validate.
    pub fn finalize(&mut self) -> Result<(), CliError> {
        if self.corpus.band.is_none() {
            self.corpus.band = Some([0.0, f64::from(self.dyadic.j_max - 1).exp2()]);
        }
        self.validate()
    }

    pub fn band(&self) -> (f64, f64) {
        let [lo, hi] = self.corpus.band.unwrap_or([0.0, f64::from(self.dyadic.j_max - 1).exp2()]);
        (lo, hi)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(bad("version", format!("unsupported config version {}", self.version)));
        }
        let g = &self.grid;
        if !(1..=2).contains(&g.dimension) {
            return Err(bad("grid.dimension", "must be 1 or 2"));
        }
        positive("grid.halfwidth", g.halfwidth)?;
        if g.points < 8 {
            return Err(bad("grid.points", "needs at least 8 points per axis"));
        }
        if ![2, 4, 6, 8].contains(&g.stencil_order) {
            return Err(bad("grid.stencil_order", "must be 2, 4, 6 or 8"));
        }
        let d = &self.dyadic;
        if d.j_min > d.j_max {
            return Err(bad("dyadic.j_min", "must not exceed dyadic.j_max"));
        }
        for (key, p) in [("dyadic.profile", d.profile), ("dyadic.alt_profile", d.alt_profile), ("dyadic.negative_profile", d.negative_profile)] {
            p.profile().validate().map_err(|e| bad(key, e.to_string()))?;
        }
        if self.corpus.count == 0 {
            return Err(bad("corpus.count", "must be positive"));
        }
        let (lo, hi) = self.band();
        if !(lo <= hi && hi.is_finite()) {
            return Err(bad("corpus.band", "must be a finite interval [lo, hi]"));
        }
        if self.decay.n_list.is_empty() || self.decay.alphas.is_empty() || self.decay.alphas.iter().any(|&a| a > 1) {
            return Err(bad("decay", "n_list must be non-empty and alphas a non-empty subset of {0, 1}"));
        }
        if self.mehler.times.is_empty() {
            return Err(bad("mehler.times", "must not be empty"));
        }
        for &t in &self.mehler.times {
            positive("mehler.times", t)?;
        }
        positive("mehler.window", self.mehler.window)?;
        for &t in &self.gaussian.times {
            positive("gaussian.times", t)?;
        }
        positive("gaussian.window", self.gaussian.window)?;
        positive("gaussian.step", self.gaussian.step)?;
        positive("gaussian.c_max", self.gaussian.c_max)?;
        if self.hebisch.betas.iter().any(|b| !(*b >= 0.0)) {
            return Err(bad("hebisch.betas", "must be ≥ 0"));
        }
        open_exponents("equivalence.p_list", &self.equivalence.p_list)?;
        open_exponents("maximal.p_list", &self.maximal.p_list)?;
        open_exponents("sobolev.p_list", &self.sobolev.p_list)?;
        for &r in &self.maximal.r_list {
            positive("maximal.r_list", r)?;
        }
        for [p, q] in &self.maximal.pq_list {
            positive("maximal.pq_list", *p)?;
            positive("maximal.pq_list", *q)?;
        }
        if self.maximal.probe_count == 0 {
            return Err(bad("maximal.probe_count", "must be positive"));
        }
        let c = &self.ceilings;
        for (key, v) in [
            ("ceilings.decay", c.decay),
            ("ceilings.equivalence", c.equivalence),
            ("ceilings.independence", c.independence),
            ("ceilings.bernstein", c.bernstein),
            ("ceilings.peetre_hl", c.peetre_hl),
            ("ceilings.maximal", c.maximal),
            ("ceilings.characterization", c.characterization),
            ("ceilings.hebisch", c.hebisch),
        ] {
            positive(key, v)?;
        }
        Ok(())
    }

    /// The effective configuration as JSON, echoed into every report.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_owned(), source: e })?;
    RunConfig::from_json(&text)
}

/// The published JSON schema of [`RunConfig`].
pub fn config_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
}
