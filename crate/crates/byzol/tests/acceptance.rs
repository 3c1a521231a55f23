//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p byzol --test acceptance -- --nocapture` to see the
//! lines; every tolerance is pinned in code.

use std::collections::BTreeMap;
use std::time::Instant;

use byzol::aggregators::{
    aggregate, AggregationRule, AggregatorSpec, DEFAULT_WEISZFELD_TOL,
};
use byzol::attacks::{AttackKind, AttackSpec};
use byzol::cli::{
    cmd_run, preset_config, run_certification, run_replication, ExperimentConfig,
};
use byzol::core::{Cohort, DecisionVector, Message, ParticipantId, RandomStream};
use byzol::engine::{
    run_experiment, Algorithm, MomentumCoupling, RunPlan, Schedule, TauSchedule,
};
use byzol::environment::{LossKind, LossStreamSpec};

use rand_distr::{Distribution, Normal};

fn report(criterion: &str, pass: bool, detail: &str, started: Instant) {
    let line = format!(
        "criterion {criterion}: {} ({detail}; {:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    println!("{line}");
    assert!(pass, "{line}");
}

/// Example-1 exactness: the adaptive attacker pins the decision, so the
/// adversarial regret is exactly half of sigma^2 T.
#[test]
fn criterion_1_example1_exactness() {
    let started = Instant::now();
    let reportable = run_replication(1, 1).expect("replication runs");
    let mut detail = String::new();
    let mut pass = true;
    for rule in [
        AggregationRule::Geomed,
        AggregationRule::Coomed,
        AggregationRule::Trimean,
    ] {
        let row = reportable
            .rows
            .iter()
            .find(|r| r.rule == rule)
            .expect("rule replicated");
        pass &= row.pass;
        detail.push_str(&format!("{}={:.9} ", rule, row.value));
    }
    pass &= started.elapsed().as_secs_f64() < 1.0;
    report("1 (example-1 exactness)", pass, detail.trim(), started);
}

/// Example-2 exactness: momentum with the prescribed initialization stays
/// pinned; the stochastic regret is exactly half of sigma^2 T.
#[test]
fn criterion_2_example2_exactness() {
    let started = Instant::now();
    let reportable = run_replication(2, 1).expect("replication runs");
    let mut detail = String::new();
    let mut pass = true;
    for rule in [
        AggregationRule::Geomed,
        AggregationRule::Coomed,
        AggregationRule::Trimean,
    ] {
        let row = reportable
            .rows
            .iter()
            .find(|r| r.rule == rule)
            .expect("rule replicated");
        pass &= row.pass;
        detail.push_str(&format!("{}={:.9} ", rule, row.value));
    }
    pass &= started.elapsed().as_secs_f64() < 1.0;
    report("2 (example-2 exactness)", pass, detail.trim(), started);
}

/// Example-3 lower bound: without momentum the mean stochastic regret stays
/// at least 0.1 sigma^2 T (the constructed bound is sigma^2 T / 8).
#[test]
fn criterion_3_example3_lower_bound() {
    let started = Instant::now();
    let reportable = run_replication(3, 1).expect("replication runs");
    let geomed = reportable
        .rows
        .iter()
        .find(|r| r.rule == AggregationRule::Geomed)
        .expect("geomed replicated");
    let pass = reportable.pass() && started.elapsed().as_secs_f64() < 30.0;
    report(
        "3 (example-3 lower bound)",
        pass,
        &format!(
            "geomed mean stochastic regret {:.3} >= {:.1}; all {} rules pass",
            geomed.value,
            geomed.target,
            reportable.rows.len()
        ),
        started,
    );
}

/// Bounded-aggregation certification: zero violations over randomized cases
/// including magnitude sweeps to 1e9. Centered clipping's bound domain
/// (alpha <= 0.1) excludes both stated cells, so it is certified at
/// (n=30, b=3), the largest admissible fraction.
#[test]
fn criterion_4_certification() {
    let started = Instant::now();
    let cases = 10_000;
    let mut detail = String::new();
    let mut pass = true;
    let mut cells: Vec<(AggregationRule, usize, usize, usize)> = vec![
        (AggregationRule::CenteredClipping, 30, 3, 10),
    ];
    for rule in [
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Geomed,
        AggregationRule::Krum,
        AggregationRule::Phocas,
        AggregationRule::Faba,
    ] {
        cells.push((rule, 30, 5, 10));
    }
    // the scalar three-participant cell, where the rule's domain permits
    for rule in [
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Geomed,
        AggregationRule::Phocas,
    ] {
        cells.push((rule, 3, 1, 1));
    }
    for (rule, n, b, d) in cells {
        let report = run_certification(rule, n, b, d, cases, 2024).expect("battery runs");
        pass &= report.failures == 0;
        detail.push_str(&format!("{rule}@({n},{b},{d})={} ", report.failures));
    }
    pass &= started.elapsed().as_secs_f64() < 300.0;
    report(
        "4 (bounded-aggregation certification)",
        pass,
        &format!("violations per cell: {}", detail.trim()),
        started,
    );
}

/// Byzantine-free sublinearity: attack-free mean aggregation with the
/// theorem diminishing step halves its per-step regret between 10^3 and
/// 10^4 steps.
#[test]
fn criterion_5_byzantine_free_sublinearity() {
    let started = Instant::now();
    let config = ExperimentConfig::from_text(&preset_config("sublinear-baseline").unwrap())
        .expect("preset parses");
    let resolved = config.resolve().expect("preset resolves");
    let result = run_experiment(&resolved.plan, 1).expect("experiment runs");
    let at = |step: usize| -> f64 {
        result
            .reduced
            .iter()
            .find(|p| p.step == step)
            .expect("checkpoint recorded")
            .mean_adversarial_regret
    };
    let early = at(1_000) / 1_000.0;
    let late = at(10_000) / 10_000.0;
    let pass = late < 0.5 * early && started.elapsed().as_secs_f64() < 120.0;
    report(
        "5 (byzantine-free sublinearity)",
        pass,
        &format!("R/T at 1e3 = {early:.6}, at 1e4 = {late:.6}, ratio {:.3}", late / early),
        started,
    );
}

/// Momentum sublinear stochastic regret: every (attack, robust rule) cell of
/// the synthetic i.i.d. grid with the experimental diminishing schedule
/// halves its per-step stochastic regret between 10^3 and 10^4 steps.
#[test]
fn criterion_6_momentum_sublinearity_grid() {
    let started = Instant::now();
    let mut pass = true;
    let mut worst: (String, f64) = (String::new(), 0.0);
    for attack in ["signflip", "gaussian", "dup"] {
        for rule in AggregationRule::ROBUST {
            let cell_started = Instant::now();
            let name = format!("synthetic-iid-momentum-diminishing-{attack}-{rule}");
            let text = preset_config(&name).expect("cell preset exists");
            let config = ExperimentConfig::from_text(&text).expect("cell parses");
            let resolved = config.resolve().expect("cell resolves");
            let result = run_experiment(&resolved.plan, 1).expect("cell runs");
            let at = |step: usize| -> f64 {
                result
                    .reduced
                    .iter()
                    .find(|p| p.step == step)
                    .expect("checkpoint recorded")
                    .mean_stochastic_regret
                    .expect("iid stream has an expected loss")
            };
            let early = at(1_000) / 1_000.0;
            let late = at(10_000) / 10_000.0;
            let ratio = late / early;
            let cell_ok = late < 0.5 * early;
            let cell_seconds = cell_started.elapsed().as_secs_f64();
            println!(
                "  cell {attack}/{rule}: S/T 1e3 = {early:.6e}, 1e4 = {late:.6e}, ratio {ratio:.3} ({cell_seconds:.1}s) {}",
                if cell_ok { "ok" } else { "FAIL" }
            );
            pass &= cell_ok && cell_seconds < 60.0;
            if ratio > worst.1 {
                worst = (format!("{attack}/{rule}"), ratio);
            }
        }
    }
    pass &= started.elapsed().as_secs_f64() < 1200.0;
    report(
        "6 (momentum sublinear grid)",
        pass,
        &format!("21 cells, worst ratio {:.3} at {}", worst.1, worst.0),
        started,
    );
}

/// Linear-regret contrast: plain gradient descent under the adaptive attack
/// keeps a constant per-step regret (within 5%) between 10^3 and 10^4
/// steps, for every rule the three-participant system admits.
#[test]
fn criterion_7_linear_regret_contrast() {
    let started = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for rule in [
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Geomed,
        AggregationRule::Phocas,
        AggregationRule::CenteredClipping,
    ] {
        let plan = RunPlan {
            seed: 7,
            horizon: 10_000,
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
        };
        let result = run_experiment(&plan, 1).expect("experiment runs");
        let at = |step: usize| -> f64 {
            result
                .reduced
                .iter()
                .find(|p| p.step == step)
                .expect("checkpoint recorded")
                .mean_adversarial_regret
        };
        let early = at(1_000) / 1_000.0;
        let late = at(10_000) / 10_000.0;
        let cell_ok = (late - early).abs() <= 0.05 * early;
        pass &= cell_ok;
        detail.push_str(&format!("{rule}:{:.4}/{:.4} ", early, late));
    }
    pass &= started.elapsed().as_secs_f64() < 60.0;
    report(
        "7 (linear-regret contrast)",
        pass,
        &format!("per-step regret 1e3/1e4 per rule: {}", detail.trim()),
        started,
    );
}

mod oracles {
    use super::*;

    /// Sum payloads in value order, mirroring the crate's canonical
    /// accumulation so subset means compare bit-exactly.
    pub fn value_ordered_mean(payloads: &[&DecisionVector]) -> DecisionVector {
        let mut sorted: Vec<&DecisionVector> = payloads.to_vec();
        sorted.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b.iter()) {
                match f64::total_cmp(x, y) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        });
        let dim = sorted[0].dim();
        if sorted[1..].iter().all(|p| p.as_slice() == sorted[0].as_slice()) {
            return (*sorted[0]).clone();
        }
        let mut acc = vec![0.0; dim];
        for p in &sorted {
            for (a, x) in acc.iter_mut().zip(p.iter()) {
                *a += x;
            }
        }
        DecisionVector::new(acc.into_iter().map(|a| a / payloads.len() as f64).collect()).unwrap()
    }

    pub fn coomed(messages: &[Message]) -> DecisionVector {
        let dim = messages[0].payload.dim();
        let mut out = Vec::new();
        for k in 0..dim {
            let mut column: Vec<f64> = messages.iter().map(|m| m.payload[k]).collect();
            column.sort_by(f64::total_cmp);
            let n = column.len();
            out.push(if n % 2 == 1 {
                column[n / 2]
            } else {
                0.5 * (column[n / 2 - 1] + column[n / 2])
            });
        }
        DecisionVector::new(out).unwrap()
    }

    pub fn trimean(messages: &[Message], q: usize) -> DecisionVector {
        let dim = messages[0].payload.dim();
        let n = messages.len();
        let mut out = Vec::new();
        for k in 0..dim {
            let mut column: Vec<f64> = messages.iter().map(|m| m.payload[k]).collect();
            column.sort_by(f64::total_cmp);
            let kept = &column[q..n - q];
            out.push(kept.iter().sum::<f64>() / kept.len() as f64);
        }
        DecisionVector::new(out).unwrap()
    }

    pub fn krum(messages: &[Message], q: usize) -> DecisionVector {
        let mut sorted: Vec<&Message> = messages.iter().collect();
        sorted.sort_by_key(|m| m.sender);
        let n = sorted.len();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            let mut dists: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| sorted[i].payload.dist_sq(&sorted[j].payload).unwrap())
                .collect();
            dists.sort_by(f64::total_cmp);
            let score: f64 = dists[..n - q - 2].iter().sum();
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, i));
            }
        }
        sorted[best.unwrap().1].payload.clone()
    }

    pub fn phocas(messages: &[Message], q: usize) -> DecisionVector {
        let anchor = trimean(messages, q);
        let mut sorted: Vec<&Message> = messages.iter().collect();
        sorted.sort_by_key(|m| m.sender);
        let mut ranked: Vec<(f64, usize)> = sorted
            .iter()
            .enumerate()
            .map(|(i, m)| (anchor.dist_sq(&m.payload).unwrap(), i))
            .collect();
        ranked.sort_by(|a, b| f64::total_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
        let selected: Vec<&DecisionVector> = ranked[..messages.len() - q]
            .iter()
            .map(|&(_, i)| &sorted[i].payload)
            .collect();
        value_ordered_mean(&selected)
    }

    pub fn faba(messages: &[Message], q: usize) -> DecisionVector {
        let mut remaining: Vec<&Message> = messages.iter().collect();
        remaining.sort_by_key(|m| m.sender);
        for _ in 0..q {
            let payloads: Vec<&DecisionVector> = remaining.iter().map(|m| &m.payload).collect();
            let center = value_ordered_mean(&payloads);
            let mut worst = (0usize, -1.0f64);
            for (i, m) in remaining.iter().enumerate() {
                let d = center.dist_sq(&m.payload).unwrap();
                if d > worst.1 {
                    worst = (i, d);
                }
            }
            remaining.remove(worst.0);
        }
        let payloads: Vec<&DecisionVector> = remaining.iter().map(|m| &m.payload).collect();
        value_ordered_mean(&payloads)
    }

    /// Multi-resolution grid search of the summed-distance objective. The
    /// data points themselves join the candidate set, so kink minima (the
    /// median sitting on an input) are located exactly.
    pub fn geomed_grid(messages: &[Message], dim: usize) -> DecisionVector {
        let objective = |point: &[f64]| -> f64 {
            messages
                .iter()
                .map(|m| {
                    m.payload
                        .iter()
                        .zip(point.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum()
        };
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for m in messages {
            for k in 0..dim {
                lo[k] = lo[k].min(m.payload[k]);
                hi[k] = hi[k].max(m.payload[k]);
            }
        }
        for k in 0..dim {
            lo[k] -= 1.0;
            hi[k] += 1.0;
        }
        let per_axis = if dim == 1 { 400 } else { 40 };
        let rounds = if dim == 1 { 8 } else { 16 };
        let mut best = vec![0.0; dim];
        let mut best_val = f64::INFINITY;
        for m in messages {
            let value = objective(m.payload.as_slice());
            if value < best_val {
                best_val = value;
                best = m.payload.as_slice().to_vec();
            }
        }
        for _ in 0..rounds {
            let steps: Vec<f64> = (0..dim)
                .map(|k| (hi[k] - lo[k]) / per_axis as f64)
                .collect();
            let mut point = vec![0.0; dim];
            let mut index = vec![0usize; dim];
            'grid: loop {
                for k in 0..dim {
                    point[k] = lo[k] + steps[k] * index[k] as f64;
                }
                let value = objective(&point);
                if value < best_val {
                    best_val = value;
                    best.copy_from_slice(&point);
                }
                for slot in index.iter_mut() {
                    *slot += 1;
                    if *slot <= per_axis {
                        continue 'grid;
                    }
                    *slot = 0;
                }
                break;
            }
            for k in 0..dim {
                lo[k] = best[k] - 3.0 * steps[k];
                hi[k] = best[k] + 3.0 * steps[k];
            }
        }
        DecisionVector::new(best).unwrap()
    }
}

/// Aggregator oracle equivalence: the order-statistic and removal rules
/// match a brute-force transcription of their definitions exactly; the
/// Weiszfeld geometric median matches a grid-search oracle within ten times
/// its tolerance.
#[test]
fn criterion_8_aggregator_oracles() {
    let started = Instant::now();
    let normal = Normal::new(0.0, 2.0).unwrap();
    let root = RandomStream::new(88);
    let mut pass = true;
    let mut checked = 0usize;

    for case in 0..1000usize {
        let mut rng = root.scoped(case as u64).rng();
        let n = 4 + case % 4; // 4..=7
        let d = 1 + case % 3;
        let messages: Vec<Message> = (1..=n)
            .map(|i| {
                let payload: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
                Message::new(ParticipantId(i), DecisionVector::new(payload).unwrap())
            })
            .collect();
        let q_trim = 1 + case % ((n - 1) / 2); // 2q < n
        let q_krum = 1 + case % (n - 3).max(1).min(n.div_ceil(2) - 1); // q <= n-3, q < n/2
        let q_faba = 1 + case % ((n - 1) / 3).max(1); // 3q < n

        pass &= coomed_matches(&messages);
        pass &= aggregate_matches(
            trimean_spec(q_trim),
            &messages,
            oracles::trimean(&messages, q_trim),
        );
        pass &= aggregate_matches(
            AggregatorSpec::new(AggregationRule::Krum, q_krum),
            &messages,
            oracles::krum(&messages, q_krum),
        );
        pass &= aggregate_matches(
            AggregatorSpec::new(AggregationRule::Phocas, q_trim),
            &messages,
            oracles::phocas(&messages, q_trim),
        );
        if 3 * q_faba < n {
            pass &= aggregate_matches(
                AggregatorSpec::new(AggregationRule::Faba, q_faba),
                &messages,
                oracles::faba(&messages, q_faba),
            );
        }
        checked += 1;
        assert!(pass, "combinatorial oracle mismatch at case {case}");
    }

    // geometric median against the grid oracle: odd counts in 1-D (unique
    // minimizer), general position in 2-D. Kink minima are exact on both
    // sides; smooth 2-D minima cannot be value-localized below about
    // sqrt(machine epsilon), so the 2-D comparison runs at a configured
    // tolerance of 1e-8.
    let mut geomed_checked = 0usize;
    for case in 0..100usize {
        let mut rng = root.scoped(10_000 + case as u64).rng();
        let d = 1 + case % 2;
        let n = if d == 1 { [3, 5, 7][case % 3] } else { 3 + case % 5 };
        let messages: Vec<Message> = (1..=n)
            .map(|i| {
                let payload: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
                Message::new(ParticipantId(i), DecisionVector::new(payload).unwrap())
            })
            .collect();
        let tol = if d == 1 { DEFAULT_WEISZFELD_TOL } else { 1e-8 };
        let mut spec = AggregatorSpec::new(AggregationRule::Geomed, 1);
        spec.weiszfeld_tol = tol;
        spec.weiszfeld_max_iters = 200_000;
        let out = aggregate(&spec, &messages, &DecisionVector::zeros(d)).unwrap();
        let oracle = oracles::geomed_grid(&messages, d);
        let err = out.dist_sq(&oracle).unwrap().sqrt();
        let ok = err <= 10.0 * tol;
        if !ok {
            println!("  geomed case {case}: |impl - oracle| = {err:.3e}");
        }
        pass &= ok;
        geomed_checked += 1;
    }

    pass &= started.elapsed().as_secs_f64() < 30.0;
    report(
        "8 (aggregator oracle equivalence)",
        pass,
        &format!("{checked} combinatorial instances exact, {geomed_checked} geomed instances within 10*tol"),
        started,
    );
}

fn trimean_spec(q: usize) -> AggregatorSpec {
    AggregatorSpec::new(AggregationRule::Trimean, q)
}

fn coomed_matches(messages: &[Message]) -> bool {
    let spec = AggregatorSpec::new(AggregationRule::Coomed, 1);
    let out = aggregate(&spec, messages, &DecisionVector::zeros(messages[0].payload.dim())).unwrap();
    out == oracles::coomed(messages)
}

fn aggregate_matches(spec: AggregatorSpec, messages: &[Message], oracle: DecisionVector) -> bool {
    let prev = DecisionVector::zeros(messages[0].payload.dim());
    let out = aggregate(&spec, messages, &prev).unwrap();
    if out != oracle {
        println!(
            "  {} mismatch: impl {out} vs oracle {oracle}",
            spec.rule
        );
        return false;
    }
    true
}

/// Determinism: a preset run twice yields byte-identical CSVs, and serial
/// versus parallel ensembles agree byte for byte.
#[test]
fn criterion_9_determinism() {
    let started = Instant::now();
    let dirs: Vec<tempfile::TempDir> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let overrides = vec![("experiment.trials".to_string(), "8".to_string())];

    let a = cmd_run("preset:example3", &overrides, dirs[0].path(), 1).unwrap();
    let b = cmd_run("preset:example3", &overrides, dirs[1].path(), 1).unwrap();
    let serial = std::fs::read(&a.files.trials_csv).unwrap();
    let repeat = std::fs::read(&b.files.trials_csv).unwrap();
    let mut pass = serial == repeat;
    pass &= std::fs::read(&a.files.ensemble_csv).unwrap()
        == std::fs::read(&b.files.ensemble_csv).unwrap();

    let c = cmd_run("preset:example3", &overrides, dirs[2].path(), 4).unwrap();
    let parallel = std::fs::read(&c.files.trials_csv).unwrap();
    pass &= serial == parallel;

    // replaying the emitted metadata record reproduces the bytes too
    let metadata_path = a.files.metadata.to_string_lossy().into_owned();
    let d = cmd_run(&metadata_path, &[], dirs[3].path(), 2).unwrap();
    pass &= std::fs::read(&d.files.trials_csv).unwrap() == serial;

    pass &= started.elapsed().as_secs_f64() < 60.0;
    report(
        "9 (determinism)",
        pass,
        "repeat, parallel and metadata-replay runs byte-identical",
        started,
    );
}

/// The shipped example1 preset lands exactly on the pinned regret value in
/// its ensemble CSV.
#[test]
fn example1_preset_csv_value() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let outcome = cmd_run("preset:example1", &[], dir.path(), 1).unwrap();
    let (header, rows) = byzol::cli::read_csv(&outcome.files.ensemble_csv).unwrap();
    let col = header
        .iter()
        .position(|h| h == "adversarial_regret_mean")
        .unwrap();
    let last: f64 = rows.last().unwrap()[col].parse().unwrap();
    let pass = (last - 500.0).abs() <= 1e-6 * 500.0;
    report(
        "run-example1-preset",
        pass,
        &format!("final adversarial regret {last}"),
        started,
    );
}

/// Plot smoke check tied to the example1 run: the regret curve is a straight
/// line with slope one half.
#[test]
fn plot_slope_of_example1_curve() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let outcome = cmd_run("preset:example1", &[], dir.path(), 1).unwrap();
    let out_svg = dir.path().join("example1.svg");
    let plot = byzol::cli::cmd_plot(
        std::slice::from_ref(&outcome.files.ensemble_csv),
        &out_svg,
        false,
    )
    .unwrap();
    let slope = plot
        .slopes
        .iter()
        .find(|(label, _)| label.contains("adversarial_regret_mean"))
        .map(|(_, s)| *s)
        .unwrap();
    let svg = std::fs::read_to_string(&out_svg).unwrap();
    let pass = (slope - 0.5).abs() <= 1e-6 && svg.starts_with("<svg") && svg.contains("</svg>");
    report(
        "plot-example1-slope",
        pass,
        &format!("fitted slope {slope:.9}"),
        started,
    );
}
