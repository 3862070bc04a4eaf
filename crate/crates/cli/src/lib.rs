//! Configuration, result files and self checks behind the `detc` binary.

pub mod config;
pub mod output;
pub mod selftest;

pub use config::{parse_config, ConfigError, ParsedConfig};
pub use output::{
    config_digest, csv_string, json_string, read_json, write_results, OutputError, RunManifest,
    RunRecord, CSV_HEADER,
};

/// Runs a parsed config and packages the results with their manifest.
pub fn execute(parsed: &ParsedConfig, workers: usize) -> detc_core::Result<RunRecord> {
    let out = detc_core::run_experiment(&parsed.config, workers)?;
    Ok(RunRecord {
        config: parsed.config.clone(),
        manifest: RunManifest::new(&parsed.config, parsed.defaults.clone(), out.cells),
        table: out.table,
    })
}
