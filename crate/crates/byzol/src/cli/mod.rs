//! Experiment orchestration: config files, the run/certify/replicate/plot
//! commands, CSV persistence, and static SVG plots.

pub mod certification;
pub mod commands;
pub mod config;
pub mod io;
pub mod plot;
pub mod presets;
pub mod replicate;

pub use certification::{run_certification, CertificationReport};
pub use commands::{cmd_certify, cmd_replicate, cmd_run, default_threads, load_config_text, RunOutcome};
pub use config::{ExperimentConfig, RawConfig, ResolvedExperiment, ScheduleKind};
pub use io::{ensemble_csv, metadata_text, read_csv, trials_csv, ResultFiles};
pub use plot::{cmd_plot, extract_series, fitted_slope, render_svg, PlotReport, Series};
pub use presets::{preset_config, synthetic_cell, NAMED_PRESETS, SYNTHETIC_NOISE_STD};
pub use replicate::{run_replication, ReplicationReport, COUNTER_EXAMPLE_RULES, EXACT_REL_TOL};
