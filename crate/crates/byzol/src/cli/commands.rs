//! Command entry points shared by the binary and the examples.

use std::fs;
use std::path::{Path, PathBuf};

use crate::aggregators::AggregationRule;
use crate::cli::certification::{run_certification, CertificationReport};
use crate::cli::config::{ExperimentConfig, RawConfig, ResolvedExperiment};
use crate::cli::io::{write_run_outputs, ResultFiles};
use crate::cli::presets::preset_config;
use crate::cli::replicate::{run_replication, ReplicationReport};
use crate::engine::{estimate_xi_sq, run_experiment, EnsembleResult};
use crate::error::{Error, Result};

/// Default trial parallelism: the `BYZ_THREADS` environment variable, else 1.
pub fn default_threads() -> usize {
    std::env::var("BYZ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

/// Load config text from a file path or a `preset:NAME` reference.
pub fn load_config_text(source: &str) -> Result<String> {
    if let Some(name) = source.strip_prefix("preset:") {
        return preset_config(name).ok_or_else(|| Error::InvalidConfig {
            field: "config".into(),
            reason: format!("unknown preset `{name}`"),
        });
    }
    fs::read_to_string(source).map_err(Error::Io)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: ResultFiles,
    pub result: EnsembleResult,
    pub resolved: ResolvedExperiment,
    pub xi_sq: Option<f64>,
}

/// Parse, validate, execute and persist one experiment.
pub fn cmd_run(
    config_source: &str,
    overrides: &[(String, String)],
    out_dir: &Path,
    threads: usize,
) -> Result<RunOutcome> {
    let text = load_config_text(config_source)?;
    let mut raw = RawConfig::parse(&text)?;
    for (key, value) in overrides {
        raw.set(key, value);
    }
    let config = ExperimentConfig::from_raw(raw)?;
    let resolved = config.resolve()?;
    let result = run_experiment(&resolved.plan, threads)?;
    let xi_sq = estimate_xi_sq(&resolved.plan, 0).ok();
    let files = write_run_outputs(out_dir, &result.traces, &result.reduced, &resolved, xi_sq)?;
    Ok(RunOutcome {
        files,
        result,
        resolved,
        xi_sq,
    })
}

/// Run the certification battery and write its CSV.
pub fn cmd_certify(
    rule: AggregationRule,
    n: usize,
    b: usize,
    dim: usize,
    cases: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<(CertificationReport, PathBuf)> {
    let report = run_certification(rule, n, b, dim, cases, seed)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("certify_{rule}.csv"));
    fs::write(&path, report.to_csv())?;
    Ok((report, path))
}

/// Run a counter-example replication and write its CSV.
pub fn cmd_replicate(example: u8, out_dir: &Path, threads: usize) -> Result<(ReplicationReport, PathBuf)> {
    let report = run_replication(example, threads)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("replicate_{example}.csv"));
    fs::write(&path, report.to_csv())?;
    Ok((report, path))
}
