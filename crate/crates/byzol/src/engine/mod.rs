//! The simulation loop: honest updates, Byzantine message injection, server
//! aggregation, and per-trial regret traces with multi-trial reduction.
//!
//! Trials are independent units of work and safe to execute in parallel;
//! within a trial execution is strictly sequential. All randomness is keyed
//! by (seed, trial, participant, step), so serial and parallel ensembles
//! produce bit-identical results.

mod schedule;

pub use schedule::{schedule_eval, Mode, MomentumCoupling, Schedule};

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aggregators::{aggregate, AggregatorSpec};
use crate::attacks::{byzantine_messages, AttackSpec, AttackView};
use crate::core::{domain, Cohort, DecisionVector, Message, ParticipantId, RandomStream};
use crate::environment::{gradient, HindsightAccumulator, LossSample, LossStream, LossStreamSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ogd,
    Momentum,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ogd => "ogd",
            Algorithm::Momentum => "momentum",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ogd" => Ok(Algorithm::Ogd),
            "momentum" => Ok(Algorithm::Momentum),
            other => Err(Error::InvalidConfig {
                field: "experiment.algorithm".into(),
                reason: format!("unknown algorithm `{other}`"),
            }),
        }
    }
}

/// How the centered-clipping radius follows the step size. `Fixed` keeps the
/// configured `tau`; `EtaProportional` uses `tau * eta_t`, which keeps the
/// clip radius commensurate with the message spread under diminishing steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauSchedule {
    Fixed,
    EtaProportional,
}

impl TauSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            TauSchedule::Fixed => "fixed",
            TauSchedule::EtaProportional => "eta_proportional",
        }
    }
}

impl FromStr for TauSchedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(TauSchedule::Fixed),
            "eta_proportional" => Ok(TauSchedule::EtaProportional),
            other => Err(Error::InvalidConfig {
                field: "aggregator.tau_schedule".into(),
                reason: format!("unknown tau schedule `{other}`"),
            }),
        }
    }
}

/// One participant's mutable state: the momentum vector (momentum runs only;
/// it stays zero under plain gradient descent).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantState {
    pub momentum: DecisionVector,
}

/// One gradient-descent update: `w - eta * grad f(w)`.
pub fn ogd_step(w: &DecisionVector, sample: &LossSample, eta: f64) -> Result<DecisionVector> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "schedule".into(),
            reason: format!("step size must be positive, got {eta}"),
        });
    }
    let g = gradient(sample, w)?;
    w.add_scaled(&g, -eta)
}

/// One momentum update: refresh `m = nu * grad + (1 - nu) * m`, then move
/// `w - eta * m`. Returns the new momentum and the local decision.
pub fn momentum_step(
    state: &ParticipantState,
    sample: &LossSample,
    w: &DecisionVector,
    eta: f64,
    nu: f64,
) -> Result<(ParticipantState, DecisionVector)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "schedule".into(),
            reason: format!("step size must be positive, got {eta}"),
        });
    }
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidConfig {
            field: "schedule".into(),
            reason: format!("momentum parameter must lie in (0, 1], got {nu}"),
        });
    }
    let g = gradient(sample, w)?;
    let momentum = state.momentum.scale(1.0 - nu)?.add_scaled(&g, nu)?;
    let decision = w.add_scaled(&momentum, -eta)?;
    Ok((ParticipantState { momentum }, decision))
}

/// Steps at which the hindsight minimizer is recomputed and a trace row is
/// emitted: every step up to 2000, then a geometric grid with one hundred
/// points per decade (which contains every power of ten).
pub fn checkpoint_steps(horizon: usize) -> Vec<usize> {
    if horizon <= 2000 {
        return (1..=horizon).collect();
    }
    let mut steps: Vec<usize> = (1..=100).collect();
    let mut k = 1u32;
    loop {
        let t = (100.0 * 10f64.powf(k as f64 / 100.0)).round() as usize;
        if t >= horizon {
            break;
        }
        steps.push(t);
        k += 1;
    }
    steps.push(horizon);
    steps.dedup();
    steps
}

/// One trace row: cumulative honest loss and the regrets at a checkpoint.
/// `stochastic_regret` is present only when the environment has an expected
/// loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub cum_honest_loss: f64,
    pub adversarial_regret: f64,
    pub stochastic_regret: Option<f64>,
}

/// Per-trial regret trace, one row per checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub trial: usize,
    pub points: Vec<TracePoint>,
}

impl RegretTrace {
    /// Row at an exact step, if that step is a checkpoint.
    pub fn at_step(&self, step: usize) -> Option<&TracePoint> {
        self.points.iter().find(|p| p.step == step)
    }

    pub fn final_point(&self) -> &TracePoint {
        self.points.last().expect("horizon >= 1 yields a row")
    }
}

/// Cross-trial reduction at one checkpoint: the mean curve approximates the
/// stochastic regret, the worst case the adversarial one.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePoint {
    pub step: usize,
    pub mean_cum_honest_loss: f64,
    pub max_cum_honest_loss: f64,
    pub mean_adversarial_regret: f64,
    pub max_adversarial_regret: f64,
    pub mean_stochastic_regret: Option<f64>,
    pub max_stochastic_regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub traces: Vec<RegretTrace>,
    pub reduced: Vec<EnsemblePoint>,
}

/// A fully resolved, validated experiment. Construction goes through config
/// validation; the engine assumes cross-module consistency.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub seed: u64,
    pub horizon: usize,
    pub trials: usize,
    pub cohort: Cohort,
    pub algorithm: Algorithm,
    pub aggregator: AggregatorSpec,
    pub tau_schedule: TauSchedule,
    pub attack: AttackSpec,
    pub environment: LossStreamSpec,
    pub schedule: Schedule,
    pub coupling: MomentumCoupling,
    pub initial_decision: DecisionVector,
    pub momentum_init: BTreeMap<ParticipantId, DecisionVector>,
}

fn honest_state_hash(w: &DecisionVector, honest_messages: &[Message]) -> u64 {
    let mut h = w.bits_hash();
    for m in honest_messages {
        h = h
            .rotate_left(7)
            .wrapping_add(m.payload.bits_hash())
            .wrapping_add(m.sender.0 as u64);
    }
    h
}

/// Execute one trial and record its regret trace.
pub fn run_trial(plan: &RunPlan, trial: usize) -> Result<RegretTrace> {
    let root = RandomStream::new(plan.seed);
    let env = LossStream::new(&plan.environment, &plan.cohort, trial, &root)?;
    let attack_stream = root.scoped(domain::ATTACK).scoped(trial as u64);
    let dim = plan.environment.dim;
    plan.initial_decision.check_dim(dim)?;

    let mut decision = plan.initial_decision.clone();
    let mut states: BTreeMap<ParticipantId, ParticipantState> = plan
        .cohort
        .participants()
        .map(|id| {
            let momentum = plan
                .momentum_init
                .get(&id)
                .cloned()
                .unwrap_or_else(|| DecisionVector::zeros(dim));
            (id, ParticipantState { momentum })
        })
        .collect();

    let stochastic = env.has_stochastic_model();
    let expected_best = if stochastic {
        Some(env.expected_loss(&env.expected_minimizer()?)?)
    } else {
        None
    };

    let mut hindsight = HindsightAccumulator::new(dim);
    let mut cum_loss = 0.0;
    let mut cum_stochastic = 0.0;
    let checkpoints = checkpoint_steps(plan.horizon);
    let mut next_checkpoint = 0usize;
    let mut points = Vec::with_capacity(checkpoints.len());
    let inv_h = 1.0 / plan.cohort.honest_count() as f64;

    for t in 1..=plan.horizon {
        let samples = env
            .draw_losses(t, &plan.cohort)
            .map_err(|e| e.at_step(t))?;

        // losses revealed at the current decision feed the regret
        let mut step_loss = 0.0;
        for id in plan.cohort.honest_ids() {
            step_loss += samples[&id].loss(&decision).map_err(|e| e.at_step(t))?;
        }
        cum_loss += step_loss * inv_h;
        if let Some(best) = expected_best {
            cum_stochastic += env.expected_loss(&decision).map_err(|e| e.at_step(t))? - best;
        }
        hindsight
            .push_step(plan.cohort.honest_ids().map(|id| &samples[&id]))
            .map_err(|e| e.at_step(t))?;

        if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            let (_, best_total) = hindsight.minimizer().map_err(|e| e.at_step(t))?;
            points.push(TracePoint {
                step: t,
                cum_honest_loss: cum_loss,
                adversarial_regret: cum_loss - best_total,
                stochastic_regret: stochastic.then_some(cum_stochastic),
            });
            next_checkpoint += 1;
        }

        // every participant computes its prescribed update; byzantine ones
        // only reveal theirs to the attack module
        let (eta, nu) = schedule_eval(&plan.schedule, &plan.coupling, t, plan.horizon);
        let mut honest_messages = Vec::with_capacity(plan.cohort.honest_count());
        let mut byzantine_true = Vec::with_capacity(plan.cohort.byzantine_count());
        for id in plan.cohort.participants() {
            let sample = &samples[&id];
            let message = match plan.algorithm {
                Algorithm::Ogd => ogd_step(&decision, sample, eta).map_err(|e| e.at_step(t))?,
                Algorithm::Momentum => {
                    let state = states.get_mut(&id).expect("state per participant");
                    let (new_state, z) = momentum_step(state, sample, &decision, eta, nu)
                        .map_err(|e| e.at_step(t))?;
                    *state = new_state;
                    z
                }
            };
            if plan.cohort.is_honest(id) {
                honest_messages.push(Message::new(id, message));
            } else {
                byzantine_true.push(Message::new(id, message));
            }
        }

        let view = AttackView {
            honest_messages: &honest_messages,
            byzantine_true_messages: &byzantine_true,
            current_decision: &decision,
            step: t,
            step_size: eta,
            rule: plan.aggregator.rule,
            env_sigma: plan.environment.sigma,
        };
        let state_hash = honest_state_hash(&decision, &honest_messages);
        let byzantine = byzantine_messages(&plan.attack, &view, &plan.cohort, &attack_stream)
            .map_err(|e| e.at_step(t))?;
        debug_assert_eq!(
            state_hash,
            honest_state_hash(&decision, &honest_messages),
            "attack mutated honest state"
        );

        let mut round: Vec<Message> = honest_messages;
        round.extend(byzantine);
        round.sort_by_key(|m| m.sender);

        let mut agg = plan.aggregator.clone();
        if plan.tau_schedule == TauSchedule::EtaProportional {
            agg.tau = plan.aggregator.tau * eta;
        }
        decision = aggregate(&agg, &round, &decision).map_err(|e| e.at_step(t))?;
    }

    Ok(RegretTrace { trial, points })
}

/// Run all trials and reduce the traces to mean and worst-case curves.
/// `threads` caps trial parallelism; 0 or 1 runs serially. Results are
/// identical either way.
pub fn run_experiment(plan: &RunPlan, threads: usize) -> Result<EnsembleResult> {
    let traces: Vec<RegretTrace> = if threads <= 1 {
        (0..plan.trials)
            .map(|trial| run_trial(plan, trial))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig {
                field: "threads".into(),
                reason: e.to_string(),
            })?;
        pool.install(|| {
            (0..plan.trials)
                .into_par_iter()
                .map(|trial| run_trial(plan, trial))
                .collect::<Result<_>>()
        })?
    };
    let reduced = reduce_traces(&traces)?;
    Ok(EnsembleResult { traces, reduced })
}

/// Mean over trials, exact when every trial produced the same value so that
/// deterministic ensembles collapse to their single trace.
fn trial_mean(values: &[f64]) -> f64 {
    if values[1..].iter().all(|v| v.to_bits() == values[0].to_bits()) {
        return values[0];
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn trial_max(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn reduce_traces(traces: &[RegretTrace]) -> Result<Vec<EnsemblePoint>> {
    let first = traces.first().ok_or(Error::EmptyHistory)?;
    let rows = first.points.len();
    let mut reduced = Vec::with_capacity(rows);
    for row in 0..rows {
        let step = first.points[row].step;
        let mut losses = Vec::with_capacity(traces.len());
        let mut adversarial = Vec::with_capacity(traces.len());
        let mut stochastic = Vec::with_capacity(traces.len());
        for trace in traces {
            let p = &trace.points[row];
            if p.step != step {
                return Err(Error::MalformedMessages(
                    "traces disagree on checkpoint steps".into(),
                ));
            }
            losses.push(p.cum_honest_loss);
            adversarial.push(p.adversarial_regret);
            if let Some(s) = p.stochastic_regret {
                stochastic.push(s);
            }
        }
        let has_stochastic = stochastic.len() == traces.len();
        reduced.push(EnsemblePoint {
            step,
            mean_cum_honest_loss: trial_mean(&losses),
            max_cum_honest_loss: trial_max(&losses),
            mean_adversarial_regret: trial_mean(&adversarial),
            max_adversarial_regret: trial_max(&adversarial),
            mean_stochastic_regret: has_stochastic.then(|| trial_mean(&stochastic)),
            max_stochastic_regret: has_stochastic.then(|| trial_max(&stochastic)),
        });
    }
    Ok(reduced)
}

/// Empirical bound on the mean honest gradient at the hindsight minimizer,
/// measured over one trial's loss history. Reported in run metadata.
pub fn estimate_xi_sq(plan: &RunPlan, trial: usize) -> Result<f64> {
    let root = RandomStream::new(plan.seed);
    let env = LossStream::new(&plan.environment, &plan.cohort, trial, &root)?;
    let dim = plan.environment.dim;
    let mut hindsight = HindsightAccumulator::new(dim);
    for t in 1..=plan.horizon {
        let samples = env.draw_losses(t, &plan.cohort)?;
        hindsight.push_step(plan.cohort.honest_ids().map(|id| &samples[&id]))?;
    }
    let (w_star, _) = hindsight.minimizer()?;
    let inv_h = 1.0 / plan.cohort.honest_count() as f64;
    let mut xi_sq: f64 = 0.0;
    for t in 1..=plan.horizon {
        let samples = env.draw_losses(t, &plan.cohort)?;
        let mut mean_grad = DecisionVector::zeros(dim);
        for id in plan.cohort.honest_ids() {
            mean_grad = mean_grad.add_scaled(&gradient(&samples[&id], &w_star)?, inv_h)?;
        }
        xi_sq = xi_sq.max(mean_grad.norm_sq());
    }
    Ok(xi_sq)
}

#[cfg(test)]
mod tests;
