//! Report files: `<experiment>_<hash>.json` and `.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use specband::verify::{Table, VerificationReport};

use crate::config::{OutputFormat, RunConfig};
use crate::error::CliError;

/// First 16 hex digits of the SHA-256 of the effective config, without the
/// output section so the same run hashes the same wherever it is written.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut echo = cfg.echo();
    if let Some(obj) = echo.as_object_mut() {
        obj.remove("output");
    }
    let digest = Sha256::digest(echo.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// The primary CSV: the first table, or the summary as `key,value` rows
/// when the report has no tables.
pub fn primary_csv(report: &VerificationReport) -> String {
    match report.tables.first() {
        Some(t) => t.to_csv(),
        None => {
            let mut t = Table::new("summary", &["key", "value"]);
            for (k, v) in &report.summary {
                t.rows.push(vec![k.as_str().into(), v.clone()]);
            }
            t.to_csv()
        }
    }
}

/// Write a report; returns the paths written. Tables after the first go to
/// `<experiment>_<hash>.<table>.csv`.
pub fn emit_report(report: &VerificationReport, format: OutputFormat, dir: &Path, hash: &str) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    let stem = format!("{}_{hash}", report.experiment);
    let mut out = Vec::new();
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let mut json = report.to_json()?;
        json.push('\n');
        out.push(write(dir.join(format!("{stem}.json")), &json)?);
    }
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        out.push(write(dir.join(format!("{stem}.csv")), &primary_csv(report))?);
        for t in report.tables.iter().skip(1) {
            out.push(write(dir.join(format!("{stem}.{}.csv", t.name)), &t.to_csv())?);
        }
    }
    Ok(out)
}
