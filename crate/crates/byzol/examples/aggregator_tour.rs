//! Feed one round of messages through every aggregation rule.
//!
//! Five honest senders cluster near [1, 2]; two colluding senders push a far
//! point. Robust rules stay with the cluster, the plain mean does not.
//!
//! ```bash
//! cargo run --example aggregator_tour
//! ```

use byzol::aggregators::{aggregate, AggregationRule, AggregatorSpec};
use byzol::core::{honest_mean, max_honest_deviation, Cohort, DecisionVector, Message, ParticipantId};

fn main() -> byzol::Result<()> {
    let payloads: [&[f64]; 7] = [
        &[1.0, 2.0],
        &[1.1, 2.2],
        &[0.9, 1.9],
        &[1.2, 2.1],
        &[0.8, 1.8],
        &[250.0, -250.0],
        &[250.0, -250.0],
    ];
    let messages: Vec<Message> = payloads
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(Message::new(
                ParticipantId(i + 1),
                DecisionVector::new(p.to_vec())?,
            ))
        })
        .collect::<byzol::Result<_>>()?;
    let cohort = Cohort::new(7, [6, 7])?;
    let prev_decision = DecisionVector::new(vec![1.0, 2.0])?;

    let mean = honest_mean(&messages, &cohort)?;
    println!("honest mean            {mean}");
    println!(
        "largest honest deviation^2 = {:.6}\n",
        max_honest_deviation(&messages, &cohort)?
    );

    for rule in AggregationRule::ALL {
        let spec = AggregatorSpec::new(rule, cohort.byzantine_count());
        let output = aggregate(&spec, &messages, &prev_decision)?;
        let deviation = output.dist_sq(&mean)?.sqrt();
        println!("{rule:<8} -> {output}   (distance to honest mean {deviation:.4})");
    }
    Ok(())
}
