//! Experiment configuration: a flat, diff-friendly key-value text format
//! with dotted section names, strict validation, and lossless round-trips.
//!
//! Every cross-module constraint is checked in [`ExperimentConfig::resolve`]
//! before any trial starts; the engine receives only validated plans.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::aggregators::{
    AggregationRule, AggregatorSpec, DEFAULT_INNER_ITERS, DEFAULT_TAU, DEFAULT_WEISZFELD_MAX_ITERS,
    DEFAULT_WEISZFELD_TOL,
};
use crate::attacks::{
    AttackKind, AttackSpec, VictimSelector, DEFAULT_GAUSSIAN_VARIANCE,
    DEFAULT_SIGNFLIP_COEFFICIENT,
};
use crate::core::{domain, Cohort, DecisionVector, ParticipantId, RandomStream};
use crate::engine::{
    Algorithm, Mode, MomentumCoupling, RunPlan, Schedule, TauSchedule,
};
use crate::environment::{pilot_constants, LossKind, LossStreamSpec, StreamConstants};
use crate::error::{Error, Result};

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Raw `key = value` map parsed from config text. Full-line `#` comments and
/// blank lines are ignored; duplicate keys are rejected.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                bad(
                    "config",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                )
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(bad(&key, "duplicate key"));
            }
        }
        Ok(Self { map })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.map.insert(key.trim().to_string(), value.trim().to_string());
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| bad(key, format!("cannot parse `{raw}`"))),
        }
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(key, format!("cannot parse `{part}` as a number")))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    fn take_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => {
                if raw.trim().is_empty() {
                    return Ok(Some(Vec::new()));
                }
                raw.split(',')
                    .map(|part| {
                        part.trim()
                            .parse::<usize>()
                            .map_err(|_| bad(key, format!("cannot parse `{part}` as an index")))
                    })
                    .collect::<Result<Vec<usize>>>()
                    .map(Some)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    InvSqrtT,
    Diminishing,
    PiecewiseExperiment,
}

impl ScheduleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::InvSqrtT => "inv_sqrt_t",
            ScheduleKind::Diminishing => "diminishing",
            ScheduleKind::PiecewiseExperiment => "piecewise_experiment",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ScheduleKind::Constant),
            "inv_sqrt_t" => Ok(ScheduleKind::InvSqrtT),
            "diminishing" => Ok(ScheduleKind::Diminishing),
            "piecewise_experiment" => Ok(ScheduleKind::PiecewiseExperiment),
            other => Err(bad("schedule.kind", format!("unknown schedule `{other}`"))),
        }
    }
}

/// Typed experiment description, one field per config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub algorithm: Algorithm,
    /// Scalar entries broadcast to the full dimension.
    pub initial_decision: Option<Vec<f64>>,
    pub n: usize,
    pub byzantine_ids: Option<Vec<usize>>,
    pub byzantine_count: Option<usize>,
    pub rule: AggregationRule,
    pub q: Option<usize>,
    pub tau: f64,
    pub tau_schedule: TauSchedule,
    pub inner_iters: usize,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iters: usize,
    pub attack: AttackKind,
    pub coefficient: f64,
    pub noise_var: f64,
    pub victim: VictimSelector,
    pub env_kind: LossKind,
    pub noise_std: f64,
    pub sigma: f64,
    pub ground_truth: Option<Vec<f64>>,
    pub schedule_kind: ScheduleKind,
    pub eta: Option<f64>,
    pub c: Option<f64>,
    pub warmup_steps: usize,
    pub warmup_value: f64,
    pub tail_numerator: f64,
    pub momentum_init: BTreeMap<usize, Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_raw(mut raw: RawConfig) -> Result<Self> {
        let dimension = raw
            .take_parsed("experiment.dimension")?
            .ok_or_else(|| bad("experiment.dimension", "required"))?;
        let horizon = raw
            .take_parsed("experiment.horizon")?
            .ok_or_else(|| bad("experiment.horizon", "required"))?;
        let trials = raw.take_parsed("experiment.trials")?.unwrap_or(1);
        let seed = raw.take_parsed("experiment.seed")?.unwrap_or(0);
        let mode = raw
            .take_parsed::<Mode>("experiment.mode")?
            .unwrap_or(Mode::Experimental);
        let algorithm = raw
            .take_parsed::<Algorithm>("experiment.algorithm")?
            .unwrap_or(Algorithm::Ogd);
        let initial_decision = raw.take_f64_list("experiment.initial_decision")?;
        let n = raw
            .take_parsed("cohort.n")?
            .ok_or_else(|| bad("cohort.n", "required"))?;
        let byzantine_ids = raw.take_usize_list("cohort.byzantine_ids")?;
        let byzantine_count = raw.take_parsed("cohort.byzantine_count")?;
        let rule = raw
            .take_parsed::<AggregationRule>("aggregator.rule")?
            .ok_or_else(|| bad("aggregator.rule", "required"))?;
        let q = raw.take_parsed("aggregator.q")?;
        let tau = raw.take_parsed("aggregator.tau")?.unwrap_or(DEFAULT_TAU);
        let tau_schedule = raw
            .take_parsed::<TauSchedule>("aggregator.tau_schedule")?
            .unwrap_or(TauSchedule::Fixed);
        let inner_iters = raw
            .take_parsed("aggregator.inner_iters")?
            .unwrap_or(DEFAULT_INNER_ITERS);
        let weiszfeld_tol = raw
            .take_parsed("aggregator.weiszfeld_tol")?
            .unwrap_or(DEFAULT_WEISZFELD_TOL);
        let weiszfeld_max_iters = raw
            .take_parsed("aggregator.weiszfeld_max_iters")?
            .unwrap_or(DEFAULT_WEISZFELD_MAX_ITERS);
        let attack = raw
            .take_parsed::<AttackKind>("attack.kind")?
            .unwrap_or(AttackKind::None);
        let coefficient = raw
            .take_parsed("attack.coefficient")?
            .unwrap_or(DEFAULT_SIGNFLIP_COEFFICIENT);
        let noise_var = raw
            .take_parsed("attack.noise_var")?
            .unwrap_or(DEFAULT_GAUSSIAN_VARIANCE);
        let victim = match raw.take("attack.victim") {
            None => VictimSelector::FirstHonest,
            Some(v) if v == "first_honest" => VictimSelector::FirstHonest,
            Some(v) => VictimSelector::Participant(ParticipantId(
                v.parse::<usize>()
                    .map_err(|_| bad("attack.victim", format!("expected `first_honest` or an index, got `{v}`")))?,
            )),
        };
        let env_kind = raw
            .take_parsed::<LossKind>("environment.kind")?
            .ok_or_else(|| bad("environment.kind", "required"))?;
        let noise_std = raw.take_parsed("environment.noise_std")?.unwrap_or(0.0);
        let sigma = raw.take_parsed("environment.sigma")?.unwrap_or(1.0);
        let ground_truth = raw.take_f64_list("environment.ground_truth")?;
        let schedule_kind = raw
            .take_parsed::<ScheduleKind>("schedule.kind")?
            .ok_or_else(|| bad("schedule.kind", "required"))?;
        let eta = raw.take_parsed("schedule.eta")?;
        let c = raw.take_parsed("schedule.c")?;
        let warmup_steps = raw.take_parsed("schedule.warmup_steps")?.unwrap_or(500);
        let warmup_value = raw.take_parsed("schedule.warmup_value")?.unwrap_or(0.008);
        let tail_numerator = raw.take_parsed("schedule.tail_numerator")?.unwrap_or(4.0);

        let mut momentum_init = BTreeMap::new();
        let m0_keys: Vec<String> = raw
            .map
            .keys()
            .filter(|k| k.starts_with("momentum.m0."))
            .cloned()
            .collect();
        for key in m0_keys {
            let id: usize = key["momentum.m0.".len()..]
                .parse()
                .map_err(|_| bad(&key, "expected a participant index suffix"))?;
            let value = raw
                .take_f64_list(&key)?
                .expect("key existed a moment ago");
            momentum_init.insert(id, value);
        }

        if let Some(unknown) = raw.map.keys().next() {
            return Err(bad(unknown, "unknown config key"));
        }

        Ok(Self {
            dimension,
            horizon,
            trials,
            seed,
            mode,
            algorithm,
            initial_decision,
            n,
            byzantine_ids,
            byzantine_count,
            rule,
            q,
            tau,
            tau_schedule,
            inner_iters,
            weiszfeld_tol,
            weiszfeld_max_iters,
            attack,
            coefficient,
            noise_var,
            victim,
            env_kind,
            noise_std,
            sigma,
            ground_truth,
            schedule_kind,
            eta,
            c,
            warmup_steps,
            warmup_value,
            tail_numerator,
            momentum_init,
        })
    }

    /// Emit the config as flat key-value text; parsing it back yields an
    /// equal config.
    pub fn to_flat_string(&self) -> String {
        fn join_f64(values: &[f64]) -> String {
            values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(",")
        }
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("experiment.dimension", self.dimension.to_string());
        push("experiment.horizon", self.horizon.to_string());
        push("experiment.trials", self.trials.to_string());
        push("experiment.seed", self.seed.to_string());
        push("experiment.mode", self.mode.to_string());
        push("experiment.algorithm", self.algorithm.to_string());
        if let Some(w) = &self.initial_decision {
            push("experiment.initial_decision", join_f64(w));
        }
        push("cohort.n", self.n.to_string());
        if let Some(ids) = &self.byzantine_ids {
            push(
                "cohort.byzantine_ids",
                ids.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        if let Some(count) = self.byzantine_count {
            push("cohort.byzantine_count", count.to_string());
        }
        push("aggregator.rule", self.rule.to_string());
        if let Some(q) = self.q {
            push("aggregator.q", q.to_string());
        }
        push("aggregator.tau", format!("{:?}", self.tau));
        push("aggregator.tau_schedule", self.tau_schedule.name().into());
        push("aggregator.inner_iters", self.inner_iters.to_string());
        push("aggregator.weiszfeld_tol", format!("{:?}", self.weiszfeld_tol));
        push(
            "aggregator.weiszfeld_max_iters",
            self.weiszfeld_max_iters.to_string(),
        );
        push("attack.kind", self.attack.to_string());
        push("attack.coefficient", format!("{:?}", self.coefficient));
        push("attack.noise_var", format!("{:?}", self.noise_var));
        push(
            "attack.victim",
            match self.victim {
                VictimSelector::FirstHonest => "first_honest".to_string(),
                VictimSelector::Participant(id) => id.to_string(),
            },
        );
        push("environment.kind", self.env_kind.to_string());
        push("environment.noise_std", format!("{:?}", self.noise_std));
        push("environment.sigma", format!("{:?}", self.sigma));
        if let Some(gt) = &self.ground_truth {
            push("environment.ground_truth", join_f64(gt));
        }
        push("schedule.kind", self.schedule_kind.name().into());
        if let Some(eta) = self.eta {
            push("schedule.eta", format!("{eta:?}"));
        }
        if let Some(c) = self.c {
            push("schedule.c", format!("{c:?}"));
        }
        push("schedule.warmup_steps", self.warmup_steps.to_string());
        push("schedule.warmup_value", format!("{:?}", self.warmup_value));
        push("schedule.tail_numerator", format!("{:?}", self.tail_numerator));
        for (id, value) in &self.momentum_init {
            push(&format!("momentum.m0.{id}"), join_f64(value));
        }
        out
    }

    fn broadcast(&self, values: &[f64], field: &str) -> Result<DecisionVector> {
        let full = if values.len() == 1 && self.dimension > 1 {
            vec![values[0]; self.dimension]
        } else if values.len() == self.dimension {
            values.to_vec()
        } else {
            return Err(bad(
                field,
                format!(
                    "expected 1 or {} entries, got {}",
                    self.dimension,
                    values.len()
                ),
            ));
        };
        DecisionVector::new(full)
    }

    /// Validate every cross-module constraint and assemble the run plan plus
    /// the stream constants. Nothing here touches the trial loop.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.dimension < 1 {
            return Err(bad("experiment.dimension", "must be at least 1"));
        }
        if self.horizon < 1 {
            return Err(bad("experiment.horizon", "must be at least 1"));
        }
        if self.trials < 1 {
            return Err(bad("experiment.trials", "must be at least 1"));
        }

        let byzantine_ids: Vec<usize> = match (&self.byzantine_ids, self.byzantine_count) {
            (Some(_), Some(_)) => {
                return Err(bad(
                    "cohort.byzantine_count",
                    "give either byzantine_ids or byzantine_count, not both",
                ));
            }
            (Some(ids), None) => ids.clone(),
            (None, Some(count)) => choose_byzantine(self.seed, self.n, count),
            (None, None) => Vec::new(),
        };
        let cohort = Cohort::new(self.n, byzantine_ids.iter().copied())?;

        let ground_truth = self
            .ground_truth
            .as_ref()
            .map(|v| self.broadcast(v, "environment.ground_truth"))
            .transpose()?;
        let environment = LossStreamSpec {
            kind: self.env_kind,
            dim: self.dimension,
            ground_truth,
            noise_std: self.noise_std,
            sigma: self.sigma,
        };
        environment.validate(&cohort)?;

        match self.attack {
            AttackKind::Example1Adaptive if self.env_kind != LossKind::Example1Fixed => {
                return Err(bad(
                    "attack.kind",
                    "ex1 runs only against the example1 environment",
                ));
            }
            AttackKind::Example3Adaptive if self.env_kind != LossKind::Example3RandomPair => {
                return Err(bad(
                    "attack.kind",
                    "ex3 runs only against the example3 environment",
                ));
            }
            _ => {}
        }

        let initial_decision = match &self.initial_decision {
            None => DecisionVector::zeros(self.dimension),
            Some(v) => self.broadcast(v, "experiment.initial_decision")?,
        };

        let mut aggregator = AggregatorSpec::new(self.rule, self.q.unwrap_or(cohort.byzantine_count()));
        aggregator.tau = self.tau;
        aggregator.inner_iters = self.inner_iters;
        aggregator.weiszfeld_tol = self.weiszfeld_tol;
        aggregator.weiszfeld_max_iters = self.weiszfeld_max_iters;
        aggregator.validate(cohort.n())?;
        // faba's removal analysis needs a sub-third byzantine fraction no
        // matter what q was configured
        if self.rule == AggregationRule::Faba && 3 * cohort.byzantine_count() >= cohort.n() {
            return Err(Error::RuleDomain(format!(
                "faba requires alpha < 1/3, got {}/{}",
                cohort.byzantine_count(),
                cohort.n()
            )));
        }

        let attack = AttackSpec {
            kind: self.attack,
            coefficient: self.coefficient,
            noise_var: self.noise_var,
            victim: self.victim,
        };
        attack.validate(&cohort)?;

        if !self.momentum_init.is_empty() && self.algorithm != Algorithm::Momentum {
            return Err(bad(
                "momentum.m0",
                "momentum initialization needs experiment.algorithm = momentum",
            ));
        }
        let mut momentum_init = BTreeMap::new();
        for (id, value) in &self.momentum_init {
            if *id < 1 || *id > self.n {
                return Err(bad(
                    &format!("momentum.m0.{id}"),
                    format!("participant outside 1..={}", self.n),
                ));
            }
            momentum_init.insert(
                ParticipantId(*id),
                self.broadcast(value, &format!("momentum.m0.{id}"))?,
            );
        }

        // everything cheap is validated; the pilot draw comes last
        let constants = pilot_constants(
            &environment,
            &RandomStream::new(self.seed),
            &initial_decision,
        )?;

        let schedule = match self.schedule_kind {
            ScheduleKind::Constant => Schedule::Constant {
                eta: self
                    .eta
                    .ok_or_else(|| bad("schedule.eta", "required for the constant schedule"))?,
            },
            ScheduleKind::InvSqrtT => Schedule::InvSqrtT {
                c: self
                    .c
                    .ok_or_else(|| bad("schedule.c", "required for the inv_sqrt_t schedule"))?,
            },
            ScheduleKind::Diminishing => Schedule::Diminishing {
                smoothness: constants.smoothness,
                strong_convexity: constants.strong_convexity,
            },
            ScheduleKind::PiecewiseExperiment => Schedule::PiecewiseExperiment {
                warmup_steps: self.warmup_steps,
                warmup_value: self.warmup_value,
                tail_numerator: self.tail_numerator,
            },
        };
        schedule.validate()?;

        let coupling = match self.mode {
            Mode::Theorem => MomentumCoupling::TheoremConformant {
                smoothness: constants.smoothness,
                strong_convexity: constants.strong_convexity,
            },
            Mode::Experimental => MomentumCoupling::EqualToEta,
        };

        let mut warnings = Vec::new();
        if self.mode == Mode::Theorem {
            if let Schedule::Constant { eta } = schedule {
                let ogd_cap = 1.0 / (4.0 * constants.smoothness);
                if self.algorithm == Algorithm::Ogd && eta > ogd_cap {
                    warnings.push(format!(
                        "constant step {eta} exceeds the theorem range (0, {ogd_cap:.3e}]"
                    ));
                }
                let momentum_cap =
                    constants.strong_convexity / (16.0 * constants.smoothness * constants.smoothness);
                if self.algorithm == Algorithm::Momentum && eta >= momentum_cap {
                    warnings.push(format!(
                        "constant step {eta} is outside the momentum theorem range (0, {momentum_cap:.3e})"
                    ));
                }
            }
        }

        let plan = RunPlan {
            seed: self.seed,
            horizon: self.horizon,
            trials: self.trials,
            cohort,
            algorithm: self.algorithm,
            aggregator,
            tau_schedule: self.tau_schedule,
            attack,
            environment,
            schedule,
            coupling,
            initial_decision,
            momentum_init,
        };

        let mut resolved = self.clone();
        resolved.byzantine_ids = Some(byzantine_ids);
        resolved.byzantine_count = None;
        resolved.q = Some(plan.aggregator.q);
        resolved.initial_decision = Some(plan.initial_decision.as_slice().to_vec());

        Ok(ResolvedExperiment {
            plan,
            constants,
            warnings,
            resolved,
        })
    }
}

/// Seeded no-replacement choice of Byzantine participants.
fn choose_byzantine(seed: u64, n: usize, count: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (1..=n).collect();
    let mut rng = RandomStream::new(seed).scoped(domain::COHORT_CHOICE).rng();
    ids.shuffle(&mut rng);
    let mut chosen: Vec<usize> = ids.into_iter().take(count).collect();
    chosen.sort_unstable();
    chosen
}

/// A validated experiment: the engine plan, the stream constants, and the
/// fully resolved config (seeded choices materialized) for the metadata
/// record.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub plan: RunPlan,
    pub constants: StreamConstants,
    pub warnings: Vec<String>,
    pub resolved: ExperimentConfig,
}
