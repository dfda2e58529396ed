//! Command-line runner for the specband verification experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use specband::verify::Status;

pub use config::{config_schema, load_config, RunConfig};
pub use error::CliError;
pub use experiments::{run_experiment, Context, EXPERIMENTS};

#[derive(Debug, Parser)]
#[command(name = "specband", version, about = "Numerical checks of spectral multipliers and dyadic function spaces")]
pub struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Corpus seed (overrides `corpus.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<config::OutputFormat>,
    /// Run the negative control instead of the admissible system.
    #[arg(long, global = true)]
    pub negative_control: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check support, derivative and partition-of-unity conditions.
    ValidateDyadic,
    /// Fit kernel decay constants per dyadic block.
    Decay,
    /// Compare the heat kernel with the closed-form Mehler kernel.
    Mehler,
    /// Fit a two-sided Gaussian bound to heat kernels.
    GaussianBound,
    /// Weighted L¹ bounds for rescaled multipliers.
    Hebisch,
    /// Littlewood-Paley equivalence, Parseval and system independence.
    Equivalence,
    /// Maximal-function lemmas and the maximal characterization.
    Maximal,
    /// Exploratory Sobolev-norm comparison.
    Sobolev,
    /// Every experiment in turn.
    All,
    /// Print the JSON schema of the config file.
    Schema,
}

impl Command {
    pub fn experiment(self) -> Option<&'static str> {
        Some(match self {
            Command::ValidateDyadic => "validate-dyadic",
            Command::Decay => "decay",
            Command::Mehler => "mehler",
            Command::GaussianBound => "gaussian-bound",
            Command::Hebisch => "hebisch",
            Command::Equivalence => "equivalence",
            Command::Maximal => "maximal",
            Command::Sobolev => "sobolev",
            Command::All | Command::Schema => return None,
        })
    }
}

/// Effective config: file (or defaults), then flag overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.corpus.seed = seed;
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    cfg.negative_control |= cli.negative_control;
    cfg.finalize()?;
    Ok(cfg)
}

fn init_threads() {
    if let Some(n) = std::env::var("SPECBAND_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which leaves that pool in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parse arguments, run, write reports; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    if cli.command == Command::Schema {
        println!("{}", serde_json::to_string_pretty(&config_schema()).expect("schema serializes"));
        return Ok(0);
    }
    let cfg = effective_config(cli)?;
    init_threads();
    let names: Vec<&str> = match cli.command.experiment() {
        Some(name) => vec![name],
        None => EXPERIMENTS.to_vec(),
    };
    let hash = emit::config_hash(&cfg);
    let dir = cfg.output.dir.clone();
    let format = cfg.output.format;
    let ctx = Context::new(cfg)?;
    let mut code = 0;
    for name in names {
        let report = match run_experiment(&ctx, name) {
            Ok(r) => r,
            // Skipped experiments in `all` are not failures of the run.
            Err(e @ CliError::Unsupported { .. }) if cli.command == Command::All => {
                eprintln!("{name}: skipped: {e}");
                continue;
            }
            Err(e) if e.exit_code() == 2 => return Err(e),
            Err(e) => {
                eprintln!("{name}: {e}");
                experiments::error_report(&ctx, name, &e)
            }
        };
        for path in emit::emit_report(&report, format, &dir, &hash)? {
            println!("{}", path.display());
        }
        let label = match report.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Exploratory => "exploratory",
        };
        eprintln!("{name}: {label}");
        if report.status == Status::Fail {
            code = 1;
        }
    }
    Ok(code)
}
