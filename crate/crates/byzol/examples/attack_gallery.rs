//! Show what each attack sends for one fixed round.
//!
//! ```bash
//! cargo run --example attack_gallery
//! ```

use byzol::aggregators::AggregationRule;
use byzol::attacks::{byzantine_messages, gaussian_attack_audit, AttackKind, AttackSpec, AttackView};
use byzol::core::{domain, Cohort, DecisionVector, Message, ParticipantId, RandomStream};

fn main() -> byzol::Result<()> {
    let cohort = Cohort::new(3, [3])?;
    let sigma = 1.0;
    let eta = 0.1;
    let decision = DecisionVector::scalar(sigma)?;
    // the two honest updates of the pinned counter-example round
    let honest = [
        Message::new(ParticipantId(1), DecisionVector::scalar(sigma)?),
        Message::new(ParticipantId(2), DecisionVector::scalar(sigma - 2.0 * eta * sigma)?),
    ];
    // what the byzantine participant would have sent if honest
    let byz_true = [Message::new(ParticipantId(3), DecisionVector::scalar(0.7)?)];
    let stream = RandomStream::new(1).scoped(domain::ATTACK).scoped(0);

    for kind in [
        AttackKind::None,
        AttackKind::SignFlipping,
        AttackKind::Gaussian,
        AttackKind::SampleDuplicating,
        AttackKind::Example1Adaptive,
        AttackKind::Example3Adaptive,
    ] {
        let spec = AttackSpec::new(kind);
        let view = AttackView {
            honest_messages: &honest,
            byzantine_true_messages: &byz_true,
            current_decision: &decision,
            step: 1,
            step_size: eta,
            rule: AggregationRule::Geomed,
            env_sigma: sigma,
        };
        let sent = byzantine_messages(&spec, &view, &cohort, &stream)?;
        println!("{:<9} participant 3 sends {}", kind.to_string(), sent[0].payload);
    }

    // the centered-clipping variants differ
    for kind in [AttackKind::Example1Adaptive, AttackKind::Example3Adaptive] {
        let spec = AttackSpec::new(kind);
        let view = AttackView {
            honest_messages: &honest,
            byzantine_true_messages: &byz_true,
            current_decision: &decision,
            step: 1,
            step_size: eta,
            rule: AggregationRule::CenteredClipping,
            env_sigma: sigma,
        };
        let sent = byzantine_messages(&spec, &view, &cohort, &stream)?;
        println!("{:<9} against cc, participant 3 sends {}", kind.to_string(), sent[0].payload);
    }

    // audit the gaussian attack's sample statistics
    let mut spec = AttackSpec::new(AttackKind::Gaussian);
    spec.noise_var = 500.0;
    let mut payloads = Vec::new();
    for step in 1..=20_000 {
        let view = AttackView {
            honest_messages: &honest,
            byzantine_true_messages: &byz_true,
            current_decision: &decision,
            step,
            step_size: eta,
            rule: AggregationRule::Geomed,
            env_sigma: sigma,
        };
        payloads.extend(
            byzantine_messages(&spec, &view, &cohort, &stream)?
                .into_iter()
                .map(|m| m.payload),
        );
    }
    let (mean, var) = gaussian_attack_audit(&spec, &payloads)?;
    println!("\ngaussian audit over {} payloads: mean {mean}, variance {var}", payloads.len());
    Ok(())
}
