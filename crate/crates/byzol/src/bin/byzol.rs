//! Thin command-line front end over the `byzol` library.
//!
//! Exit codes: 0 success, 2 config error, 3 certification failure,
//! 4 replication failure, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use byzol::aggregators::AggregationRule;
use byzol::cli::{cmd_certify, cmd_plot, cmd_replicate, cmd_run, default_threads};
use byzol::Error;

#[derive(Parser)]
#[command(name = "byzol", version, about = "Byzantine-robust distributed online learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file (or `preset:NAME`).
    Run {
        #[arg(long)]
        config: String,
        /// Override a config key, e.g. `--set aggregator.rule=krum`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify a rule's bounded-aggregation property on randomized cases.
    Certify {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replicate one of the three counter-example systems.
    Replicate {
        #[arg(long)]
        example: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render regret curves from result CSVs to an SVG file.
    Plot {
        /// Comma-separated list of input CSVs.
        #[arg(long = "in", value_name = "CSV[,CSV...]")]
        input: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        logy: bool,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    if err.is_config_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = default_threads();
    match cli.command {
        Command::Run { config, set, out } => {
            let mut overrides = Vec::new();
            for entry in &set {
                match entry.split_once('=') {
                    Some((k, v)) => overrides.push((k.trim().to_string(), v.trim().to_string())),
                    None => {
                        eprintln!("error: --set expects KEY=VALUE, got `{entry}`");
                        return ExitCode::from(2);
                    }
                }
            }
            match cmd_run(&config, &overrides, &out, threads) {
                Ok(outcome) => {
                    for warning in &outcome.resolved.warnings {
                        eprintln!("warning: {warning}");
                    }
                    let last = outcome.result.reduced.last().expect("at least one row");
                    println!(
                        "ran {} trials over {} steps; final mean adversarial regret {:.6}, worst {:.6}",
                        outcome.resolved.plan.trials,
                        outcome.resolved.plan.horizon,
                        last.mean_adversarial_regret,
                        last.max_adversarial_regret
                    );
                    if let Some(s) = last.mean_stochastic_regret {
                        println!("final mean stochastic regret {s:.6}");
                    }
                    println!(
                        "wrote {}, {}, {}",
                        outcome.files.trials_csv.display(),
                        outcome.files.ensemble_csv.display(),
                        outcome.files.metadata.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Certify {
            rule,
            n,
            b,
            dim,
            cases,
            seed,
            out,
        } => {
            let rule: AggregationRule = match rule.parse() {
                Ok(rule) => rule,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match cmd_certify(rule, n, b, dim, cases, seed, &out) {
                Ok((report, path)) => {
                    println!("{}", report.summary());
                    println!("wrote {}", path.display());
                    if report.rule.is_robust() && report.failures > 0 {
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Replicate { example, out } => match cmd_replicate(example, &out, threads) {
            Ok((report, path)) => {
                for row in &report.rows {
                    println!(
                        "example {} rule {:<8} {} = {:.6} (target {} {:.6}): {}",
                        report.example,
                        row.rule.to_string(),
                        row.metric,
                        row.value,
                        if row.exact { "==" } else { ">=" },
                        row.target,
                        if row.pass { "pass" } else { "FAIL" }
                    );
                }
                println!("wrote {}", path.display());
                if report.pass() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(4)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
        Command::Plot { input, out, logy } => {
            let inputs: Vec<PathBuf> = input.split(',').map(PathBuf::from).collect();
            match cmd_plot(&inputs, &out, logy) {
                Ok(report) => {
                    for (label, slope) in &report.slopes {
                        println!("series {label}: fitted slope {slope:.9}");
                    }
                    println!("wrote {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
    }
}
