//! Randomized bounded-aggregation certification battery.
//!
//! Each case draws an honest message cloud at one of three spread scales and
//! injects Byzantine payloads from a rotating battery: per-coordinate
//! Gaussian noise, a sign-flipped copy of a victim, verbatim duplication, a
//! colluding far point swept over nine orders of magnitude, and the two
//! adaptive blend-in styles. A robust rule must satisfy its bound on every
//! case; the mean rule is certified too, with its failures reported rather
//! than fatal.

use rand_distr::{Distribution, Normal};

use crate::aggregators::{certify, AggregationRule, AggregatorSpec, CertificateRecord};
use crate::core::{domain, Cohort, DecisionVector, Message, ParticipantId, RandomStream};
use crate::error::Result;

const SPREADS: [f64; 3] = [1e-3, 1.0, 1e3];
const BATTERY: [&str; 6] = [
    "gaussian",
    "signflip",
    "dup",
    "collude_far",
    "blend_extreme",
    "blend_affine",
];

#[derive(Debug, Clone)]
pub struct CertificationCase {
    pub case_index: usize,
    pub attack: &'static str,
    pub record: CertificateRecord,
}

#[derive(Debug, Clone)]
pub struct CertificationReport {
    pub rule: AggregationRule,
    pub n: usize,
    pub b: usize,
    pub dim: usize,
    pub cases: Vec<CertificationCase>,
    pub failures: usize,
}

impl CertificationReport {
    pub fn summary(&self) -> String {
        format!(
            "rule {} at n={} b={} d={}: {} cases, {} bound violations{}",
            self.rule,
            self.n,
            self.b,
            self.dim,
            self.cases.len(),
            self.failures,
            if self.rule.is_robust() || self.failures == 0 {
                ""
            } else {
                " (mean is not a bounded rule; failures are expected)"
            }
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,attack,lhs,zeta_sq,bound,pass\n");
        for c in &self.cases {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.case_index,
                c.attack,
                super::io::fmt_f64(c.record.lhs),
                super::io::fmt_f64(c.record.zeta_sq),
                super::io::fmt_f64(c.record.bound),
                c.record.pass
            ));
        }
        out
    }
}

fn unit_direction(rng: &mut impl rand::Rng, dim: usize) -> DecisionVector {
    let normal = Normal::new(0.0, 1.0).unwrap();
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        let v = DecisionVector::new(v).expect("finite draws");
        let norm = v.norm();
        if norm > 1e-12 {
            return v.scale(1.0 / norm).expect("finite");
        }
    }
}

/// Run `case_count` randomized certificates for one rule at one cohort
/// shape.
pub fn run_certification(
    rule: AggregationRule,
    n: usize,
    b: usize,
    dim: usize,
    case_count: usize,
    seed: u64,
) -> Result<CertificationReport> {
    let cohort = Cohort::new(n, n - b + 1..=n)?;
    let h = n - b;
    let alpha = b as f64 / n as f64;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let root = RandomStream::new(seed)
        .scoped(domain::CERTIFICATION)
        .scoped(rule as u64);
    let mut cases = Vec::with_capacity(case_count);
    let mut failures = 0usize;
    let eta = 0.1;

    for case_index in 0..case_count {
        let mut rng = root.scoped(case_index as u64).rng();
        let spread = SPREADS[case_index % SPREADS.len()];
        let center = DecisionVector::new(
            (0..dim)
                .map(|_| 10.0 * spread * normal.sample(&mut rng))
                .collect::<Vec<f64>>(),
        )?;
        let honest: Vec<Message> = (1..=h)
            .map(|i| {
                let payload = DecisionVector::new(
                    (0..dim)
                        .map(|_| spread * normal.sample(&mut rng))
                        .collect::<Vec<f64>>(),
                )
                .expect("finite draws");
                Message::new(ParticipantId(i), center.add_scaled(&payload, 1.0).expect("dims"))
            })
            .collect();
        let prev_decision = {
            let offset = DecisionVector::new(
                (0..dim)
                    .map(|_| spread * normal.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            )?;
            center.add_scaled(&offset, 1.0)?
        };

        let honest_mean = DecisionVector::mean_of(honest.iter().map(|m| &m.payload))?;
        let zeta_sq = honest
            .iter()
            .map(|m| honest_mean.dist_sq(&m.payload).expect("dims"))
            .fold(0.0, f64::max);
        let extreme = honest
            .iter()
            .max_by(|a, b| {
                f64::total_cmp(
                    &honest_mean.dist_sq(&a.payload).expect("dims"),
                    &honest_mean.dist_sq(&b.payload).expect("dims"),
                )
            })
            .expect("honest set non-empty")
            .payload
            .clone();

        let attack = BATTERY[case_index % BATTERY.len()];
        let byz_payload = |rng: &mut rand_chacha::ChaCha8Rng| -> DecisionVector {
            match attack {
                "gaussian" => {
                    let noise = Normal::new(0.0, 500f64.sqrt()).unwrap();
                    DecisionVector::new((0..dim).map(|_| noise.sample(rng)).collect::<Vec<f64>>())
                        .expect("finite draws")
                }
                "signflip" => honest[0].payload.scale(-3.0).expect("finite"),
                "dup" => honest[0].payload.clone(),
                "collude_far" => {
                    let magnitude = 10f64.powi(((case_index / BATTERY.len()) % 10) as i32);
                    let dir = unit_direction(rng, dim);
                    center.add_scaled(&dir, magnitude).expect("finite")
                }
                "blend_extreme" => {
                    // the adaptive style that copies the extreme honest
                    // message, with the clipping overshoot variant
                    if rule == AggregationRule::CenteredClipping {
                        let pull = extreme.sub(&honest_mean).expect("dims");
                        extreme.add_scaled(&pull, 2.0 * eta).expect("finite")
                    } else {
                        extreme.clone()
                    }
                }
                "blend_affine" => {
                    let factor = if rule == AggregationRule::CenteredClipping {
                        3.0 * eta
                    } else {
                        eta
                    };
                    prev_decision
                        .scale(1.0 - eta)
                        .expect("finite")
                        .add_scaled(&extreme, factor)
                        .expect("finite")
                }
                _ => unreachable!(),
            }
        };

        let mut messages = honest.clone();
        let shared = byz_payload(&mut rng);
        for (offset, id) in cohort.byzantine_ids().enumerate() {
            // gaussian attackers draw independently; the rest collude on one
            // payload
            let payload = if attack == "gaussian" && offset > 0 {
                byz_payload(&mut rng)
            } else {
                shared.clone()
            };
            messages.push(Message::new(id, payload));
        }

        let mut spec = AggregatorSpec::new(rule, b);
        if rule == AggregationRule::CenteredClipping {
            // a clip radius on the honest-deviation scale is the regime the
            // bound is stated for
            spec.tau = (zeta_sq / alpha.max(1e-9)).sqrt().max(1e-9);
        }
        let record = certify(&spec, &messages, &cohort, &prev_decision)?;
        if !record.pass {
            failures += 1;
        }
        cases.push(CertificationCase {
            case_index,
            attack,
            record,
        });
    }

    Ok(CertificationReport {
        rule,
        n,
        b,
        dim,
        cases,
        failures,
    })
}
