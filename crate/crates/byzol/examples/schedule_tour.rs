//! Print the step sizes and momentum parameters the schedules produce.
//!
//! ```bash
//! cargo run --example schedule_tour
//! ```

use byzol::engine::{schedule_eval, MomentumCoupling, Schedule};

fn main() {
    let horizon = 10_000;
    let schedules = [
        ("constant 0.01", Schedule::Constant { eta: 0.01 }),
        ("c/sqrt(T), c=1", Schedule::InvSqrtT { c: 1.0 }),
        (
            "min{1/(4L), 8/(mu t)}, L=mu=1",
            Schedule::Diminishing {
                smoothness: 1.0,
                strong_convexity: 1.0,
            },
        ),
        (
            "0.008 until 500, then 4/t",
            Schedule::PiecewiseExperiment {
                warmup_steps: 500,
                warmup_value: 0.008,
                tail_numerator: 4.0,
            },
        ),
    ];
    let couplings = [
        (
            "theorem nu = min(1, 8*sqrt(3)*L^2/mu * eta)",
            MomentumCoupling::TheoremConformant {
                smoothness: 1.0,
                strong_convexity: 1.0,
            },
        ),
        ("experimental nu = eta", MomentumCoupling::EqualToEta),
    ];

    for (name, schedule) in &schedules {
        println!("schedule {name}:");
        for (coupling_name, coupling) in &couplings {
            print!("  {coupling_name:<44}");
            for t in [1usize, 10, 100, 500, 1000, 10_000] {
                let (eta, nu) = schedule_eval(schedule, coupling, t, horizon);
                print!("  t={t}: ({eta:.5}, {nu:.5})");
            }
            println!();
        }
    }
}
