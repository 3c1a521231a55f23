//! Step-size and momentum schedules.

use std::str::FromStr;

use crate::error::{Error, Result};

/// Step-size schedules. Config names: `constant`, `inv_sqrt_t`,
/// `diminishing`, `piecewise_experiment`.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// eta_t = eta for all t.
    Constant { eta: f64 },
    /// eta_t = c / sqrt(T).
    InvSqrtT { c: f64 },
    /// eta_t = min(1/(4L), 8/(mu t)).
    Diminishing { smoothness: f64, strong_convexity: f64 },
    /// A fixed warmup value for the first `warmup_steps`, then
    /// `tail_numerator / t`.
    PiecewiseExperiment {
        warmup_steps: usize,
        warmup_value: f64,
        tail_numerator: f64,
    },
}

impl Schedule {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::InvSqrtT { .. } => "inv_sqrt_t",
            Schedule::Diminishing { .. } => "diminishing",
            Schedule::PiecewiseExperiment { .. } => "piecewise_experiment",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Schedule::Constant { eta } => eta.is_finite() && *eta > 0.0,
            Schedule::InvSqrtT { c } => c.is_finite() && *c > 0.0,
            Schedule::Diminishing {
                smoothness,
                strong_convexity,
            } => *smoothness > 0.0 && *strong_convexity > 0.0,
            Schedule::PiecewiseExperiment {
                warmup_value,
                tail_numerator,
                ..
            } => *warmup_value > 0.0 && *tail_numerator > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                field: "schedule".into(),
                reason: "every produced step size must be positive".into(),
            })
        }
    }

    pub fn eta(&self, t: usize, horizon: usize) -> f64 {
        debug_assert!(t >= 1 && t <= horizon);
        match self {
            Schedule::Constant { eta } => *eta,
            Schedule::InvSqrtT { c } => c / (horizon as f64).sqrt(),
            Schedule::Diminishing {
                smoothness,
                strong_convexity,
            } => (1.0 / (4.0 * smoothness)).min(8.0 / (strong_convexity * t as f64)),
            Schedule::PiecewiseExperiment {
                warmup_steps,
                warmup_value,
                tail_numerator,
            } => {
                if t <= *warmup_steps {
                    *warmup_value
                } else {
                    tail_numerator / t as f64
                }
            }
        }
    }
}

/// How the momentum parameter follows the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentumCoupling {
    /// nu_t = min(1, (8 sqrt(3) L^2 / mu) eta_t).
    TheoremConformant { smoothness: f64, strong_convexity: f64 },
    /// nu_t = eta_t, the synthetic-experiment convention.
    EqualToEta,
}

/// Evaluate the step size and momentum parameter at step `t` of `horizon`.
pub fn schedule_eval(
    schedule: &Schedule,
    coupling: &MomentumCoupling,
    t: usize,
    horizon: usize,
) -> (f64, f64) {
    let eta = schedule.eta(t, horizon);
    let nu = match coupling {
        MomentumCoupling::TheoremConformant {
            smoothness,
            strong_convexity,
        } => {
            let factor = 8.0 * 3.0f64.sqrt() * smoothness * smoothness / strong_convexity;
            (factor * eta).min(1.0)
        }
        MomentumCoupling::EqualToEta => eta.min(1.0),
    };
    (eta, nu)
}

/// Execution mode: theorem-conformant schedules/momentum coupling, or the
/// synthetic-experiment hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Theorem,
    Experimental,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Theorem => "theorem",
            Mode::Experimental => "experimental",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(Mode::Theorem),
            "experimental" => Ok(Mode::Experimental),
            other => Err(Error::InvalidConfig {
                field: "experiment.mode".into(),
                reason: format!("unknown mode `{other}`"),
            }),
        }
    }
}
