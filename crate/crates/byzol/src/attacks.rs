//! Byzantine message generation: the three static attacks plus the
//! omniscient adaptive attacks against the counter-example environments.
//!
//! Attackers read a snapshot of everything an omniscient adversary could
//! observe (honest messages, the current decision, step size, the rule under
//! attack, environment scale) and produce one message per Byzantine
//! participant. They never write honest state.

use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::aggregators::AggregationRule;
use crate::core::{Cohort, DecisionVector, Message, ParticipantId, RandomStream};
use crate::error::{Error, Result};

/// Attack kinds. Config names: `none`, `signflip`, `gaussian`, `dup`, `ex1`,
/// `ex3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    None,
    SignFlipping,
    Gaussian,
    SampleDuplicating,
    Example1Adaptive,
    Example3Adaptive,
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::SignFlipping => "signflip",
            AttackKind::Gaussian => "gaussian",
            AttackKind::SampleDuplicating => "dup",
            AttackKind::Example1Adaptive => "ex1",
            AttackKind::Example3Adaptive => "ex3",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(
            self,
            AttackKind::Example1Adaptive | AttackKind::Example3Adaptive
        )
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AttackKind::None),
            "signflip" => Ok(AttackKind::SignFlipping),
            "gaussian" => Ok(AttackKind::Gaussian),
            "dup" => Ok(AttackKind::SampleDuplicating),
            "ex1" => Ok(AttackKind::Example1Adaptive),
            "ex3" => Ok(AttackKind::Example3Adaptive),
            other => Err(Error::InvalidConfig {
                field: "attack.kind".into(),
                reason: format!("unknown attack `{other}`"),
            }),
        }
    }
}

/// Victim choice for the sample-duplicating attack; fixed for the whole
/// experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VictimSelector {
    FirstHonest,
    Participant(ParticipantId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Sign-flipping multiplier kappa.
    pub coefficient: f64,
    /// Per-coordinate variance of the Gaussian attack.
    pub noise_var: f64,
    pub victim: VictimSelector,
}

pub const DEFAULT_SIGNFLIP_COEFFICIENT: f64 = -3.0;
pub const DEFAULT_GAUSSIAN_VARIANCE: f64 = 500.0;

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            coefficient: DEFAULT_SIGNFLIP_COEFFICIENT,
            noise_var: DEFAULT_GAUSSIAN_VARIANCE,
            victim: VictimSelector::FirstHonest,
        }
    }

    pub fn validate(&self, cohort: &Cohort) -> Result<()> {
        if !self.coefficient.is_finite() {
            return Err(Error::InvalidConfig {
                field: "attack.coefficient".into(),
                reason: "must be finite".into(),
            });
        }
        if self.kind == AttackKind::Gaussian && !(self.noise_var > 0.0 && self.noise_var.is_finite())
        {
            return Err(Error::InvalidConfig {
                field: "attack.noise_var".into(),
                reason: "gaussian attack needs a positive finite variance".into(),
            });
        }
        if let VictimSelector::Participant(id) = self.victim {
            if !cohort.is_honest(id) || id.0 > cohort.n() || id.0 < 1 {
                return Err(Error::InvalidConfig {
                    field: "attack.victim".into(),
                    reason: format!("victim {id} is not an honest participant"),
                });
            }
        }
        Ok(())
    }

    pub fn resolve_victim(&self, cohort: &Cohort) -> Result<ParticipantId> {
        match self.victim {
            VictimSelector::Participant(id) if cohort.is_honest(id) => Ok(id),
            VictimSelector::Participant(id) => Err(Error::AttackInapplicable(format!(
                "victim {id} is not honest"
            ))),
            VictimSelector::FirstHonest => cohort.honest_ids().next().ok_or(Error::EmptyHonestSet),
        }
    }
}

/// Read-only snapshot handed to the attackers at one step.
#[derive(Debug, Clone, Copy)]
pub struct AttackView<'a> {
    /// Honest messages of this round, ordered by sender.
    pub honest_messages: &'a [Message],
    /// The Byzantine participants' own prescribed updates (what they would
    /// have sent if honest), ordered by sender. Consumed by sign-flipping.
    pub byzantine_true_messages: &'a [Message],
    /// Current global decision w_t.
    pub current_decision: &'a DecisionVector,
    pub step: usize,
    pub step_size: f64,
    /// Rule under attack; adaptive attacks tailor payloads to it.
    pub rule: AggregationRule,
    /// Counter-example deviation scale of the environment.
    pub env_sigma: f64,
}

/// Produce one message per Byzantine participant (ascending id order).
///
/// `stream` must be scoped to (attack domain, trial); draws are keyed by
/// (participant, step) below it.
pub fn byzantine_messages(
    spec: &AttackSpec,
    view: &AttackView<'_>,
    cohort: &Cohort,
    stream: &RandomStream,
) -> Result<Vec<Message>> {
    let dim = view.current_decision.dim();
    let mut out = Vec::with_capacity(cohort.byzantine_count());
    match spec.kind {
        // behave honestly: send the prescribed update
        AttackKind::None => {
            for m in view.byzantine_true_messages {
                out.push(m.clone());
            }
        }
        AttackKind::SignFlipping => {
            for m in view.byzantine_true_messages {
                out.push(Message::new(m.sender, m.payload.scale(spec.coefficient)?));
            }
        }
        AttackKind::Gaussian => {
            let normal = Normal::new(0.0, spec.noise_var.sqrt()).map_err(|_| {
                Error::InvalidConfig {
                    field: "attack.noise_var".into(),
                    reason: "gaussian attack needs a positive finite variance".into(),
                }
            })?;
            for id in cohort.byzantine_ids() {
                let mut rng = stream
                    .scoped(id.0 as u64)
                    .scoped(view.step as u64)
                    .rng();
                let payload = DecisionVector::new(
                    (0..dim).map(|_| normal.sample(&mut rng)).collect::<Vec<f64>>(),
                )?;
                out.push(Message::new(id, payload));
            }
        }
        AttackKind::SampleDuplicating => {
            let victim = spec.resolve_victim(cohort)?;
            let payload = view
                .honest_messages
                .iter()
                .find(|m| m.sender == victim)
                .ok_or_else(|| {
                    Error::AttackInapplicable(format!("victim {victim} sent no message"))
                })?
                .payload
                .clone();
            for id in cohort.byzantine_ids() {
                out.push(Message::new(id, payload.clone()));
            }
        }
        AttackKind::Example1Adaptive => {
            let sigma = view.env_sigma;
            if dim != 1 || view.honest_messages.len() != 2 {
                return Err(Error::AttackInapplicable(
                    "ex1 expects the scalar two-honest counter-example environment".into(),
                ));
            }
            // majority-style rules are pinned by sigma itself; centered
            // clipping needs the overshoot that cancels the honest pull
            let value = if view.rule == AggregationRule::CenteredClipping {
                sigma + 2.0 * view.step_size * sigma
            } else {
                sigma
            };
            for id in cohort.byzantine_ids() {
                out.push(Message::new(id, DecisionVector::scalar(value)?));
            }
        }
        AttackKind::Example3Adaptive => {
            let sigma = view.env_sigma;
            if dim != 1 || view.honest_messages.len() != 2 {
                return Err(Error::AttackInapplicable(
                    "ex3 expects the scalar two-honest counter-example environment".into(),
                ));
            }
            let w = view.current_decision[0];
            let eta = view.step_size;
            let z1 = &view.honest_messages[0].payload;
            let z2 = &view.honest_messages[1].payload;
            let value = if view.rule == AggregationRule::CenteredClipping {
                if z1 == z2 {
                    z1[0]
                } else {
                    (1.0 - eta) * w + 3.0 * eta * sigma
                }
            } else {
                (1.0 - eta) * w + eta * sigma
            };
            for id in cohort.byzantine_ids() {
                out.push(Message::new(id, DecisionVector::scalar(value)?));
            }
        }
    }
    Ok(out)
}

/// Per-coordinate sample mean and unbiased variance of generated Gaussian
/// attack payloads. Requires at least 10^4 samples for the estimate to be
/// meaningful.
pub fn gaussian_attack_audit(
    spec: &AttackSpec,
    samples: &[DecisionVector],
) -> Result<(DecisionVector, DecisionVector)> {
    if spec.kind != AttackKind::Gaussian {
        return Err(Error::AttackInapplicable(
            "audit applies to the gaussian attack".into(),
        ));
    }
    if samples.len() < 10_000 {
        return Err(Error::AttackInapplicable(format!(
            "audit needs at least 10000 samples, got {}",
            samples.len()
        )));
    }
    let mean = DecisionVector::mean_of(samples.iter())?;
    let dim = mean.dim();
    let mut var = vec![0.0; dim];
    for s in samples {
        s.check_dim(dim)?;
        for (v, (x, m)) in var.iter_mut().zip(s.iter().zip(mean.iter())) {
            *v += (x - m) * (x - m);
        }
    }
    let denom = (samples.len() - 1) as f64;
    let var = DecisionVector::new(var.into_iter().map(|v| v / denom).collect())?;
    Ok((mean, var))
}
