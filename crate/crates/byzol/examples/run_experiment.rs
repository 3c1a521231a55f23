//! Run one synthetic least-squares experiment end to end.
//!
//! Thirty participants, five of them sign-flipping attackers, geometric
//! median aggregation, momentum updates with the diminishing schedule. The
//! run writes the usual CSVs and prints the regret at a few checkpoints.
//!
//! ```bash
//! cargo run --release --example run_experiment
//! ```

use byzol::cli::cmd_run;

fn main() -> byzol::Result<()> {
    let out_dir = std::env::temp_dir().join("byzol-example-run");
    // shorten the preset horizon so the example finishes in a blink
    let overrides = vec![
        ("experiment.horizon".to_string(), "2000".to_string()),
        ("experiment.trials".to_string(), "5".to_string()),
    ];
    let outcome = cmd_run(
        "preset:synthetic-iid-momentum-diminishing-signflip-geomed",
        &overrides,
        &out_dir,
        1,
    )?;

    println!(
        "environment constants: L = {:.3}, mu = {:.3}, gradient deviation^2 = {:.3}",
        outcome.resolved.constants.smoothness,
        outcome.resolved.constants.strong_convexity,
        outcome.resolved.constants.deviation_sigma_sq,
    );
    if let Some(xi) = outcome.xi_sq {
        println!("gradient bound xi^2 at the hindsight minimizer: {xi:.6}");
    }
    println!("\n{:>6} {:>16} {:>16} {:>16}", "step", "mean adv regret", "worst adv regret", "mean sto regret");
    for point in outcome
        .result
        .reduced
        .iter()
        .filter(|p| p.step % 400 == 0)
    {
        println!(
            "{:>6} {:>16.4} {:>16.4} {:>16.4}",
            point.step,
            point.mean_adversarial_regret,
            point.max_adversarial_regret,
            point.mean_stochastic_regret.unwrap_or(f64::NAN),
        );
    }
    println!(
        "\nwrote {} and {}",
        outcome.files.trials_csv.display(),
        outcome.files.ensemble_csv.display()
    );
    Ok(())
}
