//! Result persistence: per-trial and ensemble CSVs plus the metadata record
//! that suffices to replay a run bit-identically.

use std::fs;
use std::path::{Path, PathBuf};

use crate::cli::config::ResolvedExperiment;
use crate::engine::{EnsemblePoint, RegretTrace};
use crate::error::{Error, Result};

/// Full double precision: 17 significant digits keep determinism audits
/// meaningful.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRIALS_CSV_HEADER: &str = "trial,step,cum_honest_loss,adversarial_regret,stochastic_regret";
pub const ENSEMBLE_CSV_HEADER: &str = "step,cum_honest_loss_mean,cum_honest_loss_max,\
adversarial_regret_mean,adversarial_regret_max,stochastic_regret_mean,stochastic_regret_max";

pub fn trials_csv(traces: &[RegretTrace]) -> String {
    let mut out = String::from(TRIALS_CSV_HEADER);
    out.push('\n');
    for trace in traces {
        for p in &trace.points {
            out.push_str(&trace.trial.to_string());
            out.push(',');
            out.push_str(&p.step.to_string());
            out.push(',');
            out.push_str(&fmt_f64(p.cum_honest_loss));
            out.push(',');
            out.push_str(&fmt_f64(p.adversarial_regret));
            out.push(',');
            if let Some(s) = p.stochastic_regret {
                out.push_str(&fmt_f64(s));
            }
            out.push('\n');
        }
    }
    out
}

pub fn ensemble_csv(reduced: &[EnsemblePoint]) -> String {
    let mut out = String::from(ENSEMBLE_CSV_HEADER);
    out.push('\n');
    for p in reduced {
        out.push_str(&p.step.to_string());
        out.push(',');
        out.push_str(&fmt_f64(p.mean_cum_honest_loss));
        out.push(',');
        out.push_str(&fmt_f64(p.max_cum_honest_loss));
        out.push(',');
        out.push_str(&fmt_f64(p.mean_adversarial_regret));
        out.push(',');
        out.push_str(&fmt_f64(p.max_adversarial_regret));
        out.push(',');
        if let Some(s) = p.mean_stochastic_regret {
            out.push_str(&fmt_f64(s));
        }
        out.push(',');
        if let Some(s) = p.max_stochastic_regret {
            out.push_str(&fmt_f64(s));
        }
        out.push('\n');
    }
    out
}

/// The metadata record: empirical constants as comments, then the resolved
/// config. Feeding this file back to `run` reproduces the CSVs byte for
/// byte.
pub fn metadata_text(resolved: &ResolvedExperiment, xi_sq: Option<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# metadata record (byzol {})\n",
        env!("CARGO_PKG_VERSION")
    ));
    out.push_str(&format!(
        "# empirical smoothness L = {}\n",
        fmt_f64(resolved.constants.smoothness)
    ));
    out.push_str(&format!(
        "# strong convexity mu = {}\n",
        fmt_f64(resolved.constants.strong_convexity)
    ));
    out.push_str(&format!(
        "# gradient deviation sigma^2 = {}\n",
        fmt_f64(resolved.constants.deviation_sigma_sq)
    ));
    if let Some(xi) = xi_sq {
        out.push_str(&format!(
            "# gradient bound xi^2 at hindsight minimizer = {}\n",
            fmt_f64(xi)
        ));
    }
    for warning in &resolved.warnings {
        out.push_str(&format!("# warning: {warning}\n"));
    }
    out.push_str(&resolved.resolved.to_flat_string());
    out
}

/// Files produced by one `run` invocation.
#[derive(Debug, Clone)]
pub struct ResultFiles {
    pub trials_csv: PathBuf,
    pub ensemble_csv: PathBuf,
    pub metadata: PathBuf,
}

pub fn write_run_outputs(
    out_dir: &Path,
    traces: &[RegretTrace],
    reduced: &[EnsemblePoint],
    resolved: &ResolvedExperiment,
    xi_sq: Option<f64>,
) -> Result<ResultFiles> {
    fs::create_dir_all(out_dir)?;
    let files = ResultFiles {
        trials_csv: out_dir.join("trials.csv"),
        ensemble_csv: out_dir.join("ensemble.csv"),
        metadata: out_dir.join("metadata.conf"),
    };
    fs::write(&files.trials_csv, trials_csv(traces))?;
    fs::write(&files.ensemble_csv, ensemble_csv(reduced))?;
    fs::write(&files.metadata, metadata_text(resolved, xi_sq))?;
    Ok(files)
}

/// Minimal CSV reader for the crate's own outputs (no quoting or escapes).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedCsv {
            path: display.clone(),
            reason: "empty file".into(),
        })?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(Error::MalformedCsv {
                path: display,
                reason: format!(
                    "row {} has {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                ),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}
