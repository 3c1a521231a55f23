//! Built-in experiment presets, addressable as `preset:NAME` wherever a
//! config path is accepted.
//!
//! The synthetic grid covers every least-squares cell:
//! `synthetic-{iid|noniid}-{ogd|momentum}-{constant|diminishing}-{none|signflip|gaussian|dup}-{rule}`.

use crate::aggregators::AggregationRule;

/// Label-noise standard deviation of the synthetic streams (variance 0.1).
pub const SYNTHETIC_NOISE_STD: f64 = 0.31622776601683794;

pub const NAMED_PRESETS: [&str; 4] = ["example1", "example2", "example3", "sublinear-baseline"];

fn example1_text(momentum: bool) -> String {
    let mut text = String::from(
        "# three-participant counter-example: one adaptive attacker pins the decision\n\
         experiment.dimension = 1\n\
         experiment.horizon = 1000\n\
         experiment.trials = 1\n\
         experiment.seed = 7\n\
         experiment.mode = experimental\n",
    );
    text.push_str(if momentum {
        "experiment.algorithm = momentum\n"
    } else {
        "experiment.algorithm = ogd\n"
    });
    text.push_str(
        "experiment.initial_decision = 1.0\n\
         cohort.n = 3\n\
         cohort.byzantine_ids = 3\n\
         aggregator.rule = geomed\n\
         attack.kind = ex1\n\
         environment.kind = example1\n\
         environment.sigma = 1.0\n\
         schedule.kind = constant\n\
         schedule.eta = 0.1\n",
    );
    if momentum {
        text.push_str("momentum.m0.1 = 0.0\nmomentum.m0.2 = 2.0\nmomentum.m0.3 = 0.0\n");
    }
    text
}

fn example3_text() -> String {
    "# i.i.d. pair environment without momentum: the expected decision stays off-center\n\
     experiment.dimension = 1\n\
     experiment.horizon = 2000\n\
     experiment.trials = 100\n\
     experiment.seed = 13\n\
     experiment.mode = experimental\n\
     experiment.algorithm = ogd\n\
     experiment.initial_decision = 0.5\n\
     cohort.n = 3\n\
     cohort.byzantine_ids = 3\n\
     aggregator.rule = geomed\n\
     attack.kind = ex3\n\
     environment.kind = example3\n\
     environment.sigma = 1.0\n\
     schedule.kind = constant\n\
     schedule.eta = 0.1\n"
        .to_string()
}

fn sublinear_baseline_text() -> String {
    format!(
        "# attack-free mean aggregation with the theorem diminishing step\n\
         experiment.dimension = 10\n\
         experiment.horizon = 10000\n\
         experiment.trials = 10\n\
         experiment.seed = 42\n\
         experiment.mode = theorem\n\
         experiment.algorithm = ogd\n\
         cohort.n = 30\n\
         aggregator.rule = mean\n\
         attack.kind = none\n\
         environment.kind = iid_ls\n\
         environment.noise_std = {SYNTHETIC_NOISE_STD:?}\n\
         schedule.kind = diminishing\n"
    )
}

/// One cell of the synthetic least-squares grid.
pub fn synthetic_cell(
    iid: bool,
    momentum: bool,
    diminishing: bool,
    attack: &str,
    rule: AggregationRule,
) -> String {
    let mut text = String::from("# synthetic least-squares cell\n");
    text.push_str("experiment.dimension = 10\n");
    text.push_str("experiment.horizon = 10000\n");
    text.push_str("experiment.trials = 10\n");
    text.push_str("experiment.seed = 42\n");
    text.push_str("experiment.mode = experimental\n");
    text.push_str(&format!(
        "experiment.algorithm = {}\n",
        if momentum { "momentum" } else { "ogd" }
    ));
    text.push_str("cohort.n = 30\n");
    text.push_str(&format!(
        "cohort.byzantine_count = {}\n",
        if attack == "none" { 0 } else { 5 }
    ));
    text.push_str(&format!("aggregator.rule = {rule}\n"));
    if rule == AggregationRule::CenteredClipping {
        // keep the clip radius commensurate with the shrinking message spread
        text.push_str("aggregator.tau = 1.0\n");
        text.push_str("aggregator.tau_schedule = eta_proportional\n");
    }
    text.push_str(&format!("attack.kind = {attack}\n"));
    text.push_str(&format!(
        "environment.kind = {}\n",
        if iid { "iid_ls" } else { "noniid_ls" }
    ));
    text.push_str(&format!("environment.noise_std = {SYNTHETIC_NOISE_STD:?}\n"));
    if diminishing {
        text.push_str("schedule.kind = piecewise_experiment\n");
        text.push_str("schedule.warmup_steps = 500\n");
        text.push_str("schedule.warmup_value = 0.008\n");
        text.push_str("schedule.tail_numerator = 4.0\n");
    } else {
        text.push_str("schedule.kind = constant\n");
        text.push_str(&format!(
            "schedule.eta = {}\n",
            if iid { "0.01" } else { "0.005" }
        ));
    }
    text
}

/// Resolve a preset name to its config text.
pub fn preset_config(name: &str) -> Option<String> {
    match name {
        "example1" => return Some(example1_text(false)),
        "example2" => return Some(example1_text(true)),
        "example3" => return Some(example3_text()),
        "sublinear-baseline" => return Some(sublinear_baseline_text()),
        _ => {}
    }
    let rest = name.strip_prefix("synthetic-")?;
    let parts: Vec<&str> = rest.split('-').collect();
    if parts.len() != 5 {
        return None;
    }
    let iid = match parts[0] {
        "iid" => true,
        "noniid" => false,
        _ => return None,
    };
    let momentum = match parts[1] {
        "ogd" => false,
        "momentum" => true,
        _ => return None,
    };
    let diminishing = match parts[2] {
        "constant" => false,
        "diminishing" => true,
        _ => return None,
    };
    let attack = match parts[3] {
        a @ ("none" | "signflip" | "gaussian" | "dup") => a,
        _ => return None,
    };
    let rule: AggregationRule = parts[4].parse().ok()?;
    Some(synthetic_cell(iid, momentum, diminishing, attack, rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::ExperimentConfig;

    #[test]
    fn named_presets_resolve() {
        for name in NAMED_PRESETS {
            let text = preset_config(name).unwrap();
            let config = ExperimentConfig::from_text(&text).unwrap();
            config.resolve().unwrap();
        }
    }

    #[test]
    fn every_synthetic_cell_is_valid() {
        let mut count = 0;
        for iid in [true, false] {
            for momentum in [true, false] {
                for diminishing in [true, false] {
                    for attack in ["none", "signflip", "gaussian", "dup"] {
                        for rule in AggregationRule::ALL {
                            let name = format!(
                                "synthetic-{}-{}-{}-{attack}-{rule}",
                                if iid { "iid" } else { "noniid" },
                                if momentum { "momentum" } else { "ogd" },
                                if diminishing { "diminishing" } else { "constant" },
                            );
                            let text = preset_config(&name).unwrap();
                            let config = ExperimentConfig::from_text(&text).unwrap();
                            config.resolve().unwrap();
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count, 256);
    }

    #[test]
    fn unknown_preset_is_none() {
        assert!(preset_config("synthetic-iid-ogd-constant-none-bulyan").is_none());
        assert!(preset_config("nope").is_none());
    }

    #[test]
    fn shipped_preset_files_match_builtins() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
        let mut seen = 0;
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_stem().unwrap().to_str().unwrap().to_string();
            let content = std::fs::read_to_string(&path).unwrap();
            assert_eq!(content, preset_config(&name).unwrap(), "{name}");
            seen += 1;
        }
        assert!(seen >= NAMED_PRESETS.len());
    }
}
