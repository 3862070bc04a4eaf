//! CSV and JSON result files and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use detc_core::{CellInfo, ExperimentConfig, ResultRow, ResultTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const CSV_HEADER: &str = "policy,horizon,replications,mean_regret,se_regret,mean_rounds,max_rounds,regret_per_logT,lower_bound_rate,upper_bound_eq5";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("refusing to write an empty result table")]
    EmptyTable,
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read results from {}: {msg}", path.display())]
    Read { path: PathBuf, msg: String },
}

/// Provenance of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical JSON form of the validated config.
    pub config_digest: String,
    pub version: String,
    /// Keys that took their default value.
    pub defaults: Vec<String>,
    /// Seed and wall time of every cell.
    pub cells: Vec<CellInfo>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, defaults: Vec<String>, cells: Vec<CellInfo>) -> Self {
        Self {
            config_digest: config_digest(config),
            version: env!("CARGO_PKG_VERSION").to_string(),
            defaults,
            cells,
        }
    }
}

/// Everything a JSON result file holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub table: ResultTable,
    pub manifest: RunManifest,
}

/// Digest of the semantic content of a config. Formatting, key order and
/// aliases in the source document do not affect it.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

/// The result table as CSV; floats carry 17 significant digits.
pub fn csv_string(table: &ResultTable) -> Result<String, OutputError> {
    if table.rows.is_empty() {
        return Err(OutputError::EmptyTable);
    }
    let mut out = String::with_capacity(64 * (table.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        push_row(&mut out, row);
    }
    Ok(out)
}

fn push_row(out: &mut String, r: &ResultRow) {
    let upper = r
        .upper_bound
        .map(|u| format!("{u:.16e}"))
        .unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
        r.policy.name(),
        r.horizon,
        r.replications,
        r.mean_regret,
        r.se_regret,
        r.mean_rounds,
        r.max_rounds,
        r.regret_per_log_t,
        r.lower_bound_rate,
        upper
    )
    .expect("writing to a String cannot fail");
}

pub fn json_string(record: &RunRecord) -> String {
    serde_json::to_string_pretty(record).expect("record serializes")
}

/// Writes whichever outputs have a path.
pub fn write_results(
    record: &RunRecord,
    csv_path: Option<&Path>,
    json_path: Option<&Path>,
) -> Result<(), OutputError> {
    let csv = csv_string(&record.table)?;
    if let Some(path) = csv_path {
        write_file(path, &csv)?;
    }
    if let Some(path) = json_path {
        write_file(path, &json_string(record))?;
    }
    Ok(())
}

pub fn read_json(path: &Path) -> Result<RunRecord, OutputError> {
    let read_err = |msg: String| OutputError::Read {
        path: path.to_path_buf(),
        msg,
    };
    let text = fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}
