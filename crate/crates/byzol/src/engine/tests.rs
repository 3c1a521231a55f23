use super::*;
use crate::aggregators::AggregationRule;
use crate::attacks::AttackKind;
use crate::environment::{hindsight_minimizer, LossKind};

fn example1_plan(rule: AggregationRule, horizon: usize) -> RunPlan {
    RunPlan {
        seed: 7,
        horizon,
        trials: 1,
        cohort: Cohort::new(3, [3]).unwrap(),
        algorithm: Algorithm::Ogd,
        aggregator: AggregatorSpec::new(rule, 1),
        tau_schedule: TauSchedule::Fixed,
        attack: AttackSpec::new(AttackKind::Example1Adaptive),
        environment: LossStreamSpec::counter_example(LossKind::Example1Fixed, 1.0),
        schedule: Schedule::Constant { eta: 0.1 },
        coupling: MomentumCoupling::EqualToEta,
        initial_decision: DecisionVector::scalar(1.0).unwrap(),
        momentum_init: BTreeMap::new(),
    }
}

#[test]
fn ogd_step_examples() {
    // counter-example participant 2 at w = sigma = 1, eta = 0.1
    let sample = LossSample::Quadratic { center: -1.0 };
    let w = DecisionVector::scalar(1.0).unwrap();
    let z = ogd_step(&w, &sample, 0.1).unwrap();
    assert!((z[0] - 0.8).abs() < 1e-15);

    // zero gradient leaves the decision unchanged
    let stationary = LossSample::Quadratic { center: 1.0 };
    assert_eq!(ogd_step(&w, &stationary, 0.1).unwrap().as_slice(), &[1.0]);

    assert!(ogd_step(&w, &sample, 0.0).is_err());
}

#[test]
fn momentum_step_examples() {
    let w = DecisionVector::scalar(1.0).unwrap();

    // nu = 1 collapses to plain gradient descent
    let sample = LossSample::Quadratic { center: -1.0 };
    let zero_state = ParticipantState {
        momentum: DecisionVector::scalar(5.0).unwrap(),
    };
    let (_, z) = momentum_step(&zero_state, &sample, &w, 0.1, 1.0).unwrap();
    assert_eq!(z, ogd_step(&w, &sample, 0.1).unwrap());

    // participant 1 at t = 1: m0 = 0 and a zero gradient keep it at sigma
    let s1 = LossSample::Quadratic { center: 1.0 };
    let state = ParticipantState {
        momentum: DecisionVector::zeros(1),
    };
    let (new_state, z) = momentum_step(&state, &s1, &w, 0.1, 0.1).unwrap();
    assert_eq!(new_state.momentum.as_slice(), &[0.0]);
    assert_eq!(z.as_slice(), &[1.0]);

    // participant 2 at t = 1: m0 = 2 sigma is a fixed point of the update
    let s2 = LossSample::Quadratic { center: -1.0 };
    let state = ParticipantState {
        momentum: DecisionVector::scalar(2.0).unwrap(),
    };
    let (new_state, z) = momentum_step(&state, &s2, &w, 0.1, 0.1).unwrap();
    assert!((new_state.momentum[0] - 2.0).abs() < 1e-15);
    assert!((z[0] - 0.8).abs() < 1e-15);

    assert!(momentum_step(&state, &s2, &w, 0.1, 0.0).is_err());
    assert!(momentum_step(&state, &s2, &w, 0.1, 1.5).is_err());
}

#[test]
fn checkpoint_grid() {
    assert_eq!(checkpoint_steps(5), vec![1, 2, 3, 4, 5]);
    assert_eq!(checkpoint_steps(2000).len(), 2000);
    let grid = checkpoint_steps(10_000);
    assert!(grid.contains(&1000));
    assert!(grid.contains(&10_000));
    assert!(grid.len() < 400);
    assert!(grid.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn example1_trace_is_exactly_linear() {
    for rule in [
        AggregationRule::Geomed,
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Phocas,
        AggregationRule::CenteredClipping,
    ] {
        let plan = example1_plan(rule, 1000);
        let trace = run_trial(&plan, 0).unwrap();
        let last = trace.final_point();
        assert_eq!(last.step, 1000);
        assert!(
            (last.adversarial_regret - 500.0).abs() <= 1e-6 * 500.0,
            "{rule}: regret {}",
            last.adversarial_regret
        );
        // the decision is pinned, so the regret is linear all the way
        let mid = trace.at_step(500).unwrap();
        assert!((mid.adversarial_regret - 250.0).abs() <= 1e-6 * 250.0, "{rule}");
    }
}

#[test]
fn already_optimal_run_has_zero_regret() {
    let gt = DecisionVector::new(vec![0.4, -0.2, 1.0]).unwrap();
    let plan = RunPlan {
        seed: 3,
        horizon: 50,
        trials: 1,
        cohort: Cohort::all_honest(1).unwrap(),
        algorithm: Algorithm::Ogd,
        aggregator: AggregatorSpec::new(AggregationRule::Mean, 0),
        tau_schedule: TauSchedule::Fixed,
        attack: AttackSpec::new(AttackKind::None),
        environment: LossStreamSpec {
            kind: LossKind::IidLeastSquares,
            dim: 3,
            ground_truth: Some(gt.clone()),
            noise_std: 0.0,
            sigma: 0.0,
        },
        schedule: Schedule::Constant { eta: 0.01 },
        coupling: MomentumCoupling::EqualToEta,
        initial_decision: gt,
        momentum_init: BTreeMap::new(),
    };
    let trace = run_trial(&plan, 0).unwrap();
    assert!(trace.final_point().cum_honest_loss.abs() < 1e-18);
    assert!(trace.final_point().adversarial_regret.abs() < 1e-9);
}

#[test]
fn example2_momentum_stays_pinned() {
    let mut plan = example1_plan(AggregationRule::Geomed, 1000);
    plan.algorithm = Algorithm::Momentum;
    plan.momentum_init = BTreeMap::from([
        (ParticipantId(1), DecisionVector::zeros(1)),
        (ParticipantId(2), DecisionVector::scalar(2.0).unwrap()),
        (ParticipantId(3), DecisionVector::zeros(1)),
    ]);
    let trace = run_trial(&plan, 0).unwrap();
    // the honest average loss is deterministic here, so the adversarial
    // regret equals the stochastic one: sigma^2 T / 2
    assert!((trace.final_point().adversarial_regret - 500.0).abs() <= 1e-6 * 500.0);
}

#[test]
fn momentum_with_unit_nu_matches_ogd_trajectory() {
    let base = RunPlan {
        seed: 11,
        horizon: 200,
        trials: 1,
        cohort: Cohort::all_honest(5).unwrap(),
        algorithm: Algorithm::Ogd,
        aggregator: AggregatorSpec::new(AggregationRule::Mean, 0),
        tau_schedule: TauSchedule::Fixed,
        attack: AttackSpec::new(AttackKind::None),
        environment: LossStreamSpec::iid(4, 0.1),
        schedule: Schedule::Constant { eta: 0.01 },
        coupling: MomentumCoupling::EqualToEta,
        initial_decision: DecisionVector::zeros(4),
        momentum_init: BTreeMap::new(),
    };
    let ogd_trace = run_trial(&base, 0).unwrap();

    let mut momentum = base.clone();
    momentum.algorithm = Algorithm::Momentum;
    // a large smoothness forces the coupled nu to its cap of 1
    momentum.coupling = MomentumCoupling::TheoremConformant {
        smoothness: 100.0,
        strong_convexity: 1.0,
    };
    let momentum_trace = run_trial(&momentum, 0).unwrap();
    assert_eq!(ogd_trace.points, momentum_trace.points);
}

#[test]
fn trials_are_deterministic_and_parallel_safe() {
    let mut plan = example1_plan(AggregationRule::Coomed, 100);
    plan.environment = LossStreamSpec::counter_example(LossKind::Example3RandomPair, 1.0);
    plan.attack = AttackSpec::new(AttackKind::Example3Adaptive);
    plan.initial_decision = DecisionVector::scalar(0.5).unwrap();
    plan.trials = 6;

    let a = run_trial(&plan, 2).unwrap();
    let b = run_trial(&plan, 2).unwrap();
    assert_eq!(a, b);

    let serial = run_experiment(&plan, 1).unwrap();
    let parallel = run_experiment(&plan, 4).unwrap();
    assert_eq!(serial, parallel);
    // distinct trials draw distinct losses
    assert_ne!(serial.traces[0].points, serial.traces[1].points);
}

#[test]
fn deterministic_ensemble_collapses_mean_and_max() {
    let mut plan = example1_plan(AggregationRule::Geomed, 50);
    plan.trials = 10;
    let result = run_experiment(&plan, 1).unwrap();
    for (row, point) in result.reduced.iter().enumerate() {
        let single = &result.traces[0].points[row];
        assert_eq!(point.mean_adversarial_regret, point.max_adversarial_regret);
        assert_eq!(point.mean_adversarial_regret, single.adversarial_regret);
    }
}

#[test]
fn single_trial_reduction_is_identity() {
    let plan = example1_plan(AggregationRule::Trimean, 30);
    let result = run_experiment(&plan, 1).unwrap();
    assert_eq!(result.traces.len(), 1);
    for (point, row) in result.reduced.iter().zip(result.traces[0].points.iter()) {
        assert_eq!(point.mean_cum_honest_loss, row.cum_honest_loss);
        assert_eq!(point.max_cum_honest_loss, row.cum_honest_loss);
    }
}

/// The regret recorded at a checkpoint equals the cumulative loss minus the
/// independently recomputed hindsight total.
#[test]
fn regret_matches_independent_hindsight() {
    let plan = RunPlan {
        seed: 21,
        horizon: 300,
        trials: 1,
        cohort: Cohort::new(5, [5]).unwrap(),
        algorithm: Algorithm::Ogd,
        aggregator: AggregatorSpec::new(AggregationRule::Coomed, 1),
        tau_schedule: TauSchedule::Fixed,
        attack: AttackSpec::new(AttackKind::Gaussian),
        environment: LossStreamSpec::iid(3, 0.2),
        schedule: Schedule::Constant { eta: 0.05 },
        coupling: MomentumCoupling::EqualToEta,
        initial_decision: DecisionVector::zeros(3),
        momentum_init: BTreeMap::new(),
    };
    let trace = run_trial(&plan, 0).unwrap();

    // replay the environment draws and rebuild the regret by hand
    let root = RandomStream::new(plan.seed);
    let env = LossStream::new(&plan.environment, &plan.cohort, 0, &root).unwrap();
    let mut history: Vec<Vec<LossSample>> = Vec::new();
    for t in 1..=plan.horizon {
        let samples = env.draw_losses(t, &plan.cohort).unwrap();
        history.push(
            plan.cohort
                .honest_ids()
                .map(|id| samples[&id].clone())
                .collect(),
        );
    }
    for &probe in &[50usize, 150, 300] {
        let row = trace.at_step(probe).unwrap();
        let (_, best_total) = hindsight_minimizer(&history[..probe]).unwrap();
        let expected = row.cum_honest_loss - best_total;
        assert!(
            (row.adversarial_regret - expected).abs()
                <= 1e-9 * (1.0 + expected.abs()),
            "step {probe}: trace {} vs recomputed {expected}",
            row.adversarial_regret
        );
    }
}

#[test]
fn cumulative_losses_are_monotone() {
    let mut plan = example1_plan(AggregationRule::Geomed, 200);
    plan.environment = LossStreamSpec::counter_example(LossKind::Example3RandomPair, 1.0);
    plan.attack = AttackSpec::new(AttackKind::Example3Adaptive);
    plan.initial_decision = DecisionVector::scalar(0.5).unwrap();
    let trace = run_trial(&plan, 0).unwrap();
    for pair in trace.points.windows(2) {
        assert!(pair[1].cum_honest_loss >= pair[0].cum_honest_loss);
        assert!(pair[1].stochastic_regret.unwrap() >= pair[0].stochastic_regret.unwrap());
    }
}
