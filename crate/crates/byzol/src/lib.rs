//! Byzantine-robust distributed online learning.
//!
//! A server aggregates one message per participant each step; some
//! participants are Byzantine and send whatever an omniscient adversary
//! wants. This crate simulates distributed online gradient descent and its
//! momentum variant under configurable robust aggregation rules and attacks,
//! measures adversarial and stochastic regret against exact hindsight
//! minimizers, and empirically certifies the bounded-aggregation property of
//! each rule against its closed-form constant.
//!
//! Modules:
//! - [`core`]: decision vectors, messages, cohort structure, keyed random
//!   streams.
//! - [`aggregators`]: the eight aggregation rules, their bound constants and
//!   the certifier.
//! - [`environment`]: synthetic least-squares and counter-example loss
//!   streams, analytic constants, closed-form hindsight minimization.
//! - [`attacks`]: static and adaptive Byzantine message generation.
//! - [`engine`]: schedules, the simulation loop, trial ensembles.
//! - [`cli`]: config files, presets, the run/certify/replicate/plot
//!   commands, CSV and SVG output.
//!
//! Start with the runnable examples (`cargo run --example aggregator_tour`)
//! or the `byzol` binary.

pub mod aggregators;
pub mod attacks;
pub mod cli;
pub mod core;
pub mod engine;
pub mod environment;
pub mod error;

pub use error::{Error, Result};
