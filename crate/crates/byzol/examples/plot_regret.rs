//! Run the pinned counter-example, then render its regret curve to SVG.
//!
//! The curve is a straight line of slope one half: per-step regret never
//! decays while the attacker holds the decision in place.
//!
//! ```bash
//! cargo run --example plot_regret
//! ```

use byzol::cli::{cmd_plot, cmd_run};

fn main() -> byzol::Result<()> {
    let out_dir = std::env::temp_dir().join("byzol-example-plot");
    let outcome = cmd_run("preset:example1", &[], &out_dir, 1)?;
    let svg_path = out_dir.join("example1.svg");
    let report = cmd_plot(std::slice::from_ref(&outcome.files.ensemble_csv), &svg_path, false)?;
    for (label, slope) in &report.slopes {
        println!("{label}: fitted slope {slope:.9}");
    }
    println!("wrote {}", svg_path.display());
    Ok(())
}
