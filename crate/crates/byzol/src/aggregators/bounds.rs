//! Robustness-bound constants and the empirical bounded-aggregation
//! certifier.
//!
//! A rule is robustly bounded when its output stays within `C^2 * zeta^2` of
//! the honest mean, where `zeta^2` is the largest squared deviation of an
//! honest message from that mean. `bound_constant` evaluates each rule's
//! closed-form constant; `certify` checks one concrete message set against
//! it.

use super::{aggregate, AggregationRule, AggregatorSpec};
use crate::core::{honest_mean, max_honest_deviation, Cohort, DecisionVector, Message};
use crate::error::{Error, Result};

/// Relative slack applied on the bound side of the certificate comparison,
/// absorbing floating-point noise only.
pub const CERTIFY_REL_SLACK: f64 = 1e-9;

/// A rule's bound evaluated at a concrete cohort shape.
///
/// The certified inequality is
/// `lhs <= c_alpha_squared * zeta^2 + v0_term_coeff * ||v0 - honest mean||^2`,
/// where the second term is nonzero only for centered clipping (its `v0` is
/// the previous decision).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstant {
    pub rule: AggregationRule,
    pub alpha: f64,
    pub n: usize,
    pub b: usize,
    pub d: usize,
    pub c_alpha_squared: f64,
    pub v0_term_coeff: f64,
}

/// Evaluate the rule-specific multiplier of `zeta^2` at `(n, b, d)`.
///
/// `spec` supplies the centered-clipping inner iteration count. The rules
/// assume the estimated Byzantine count matches the true one (`q = b`).
pub fn bound_constant(
    rule: AggregationRule,
    n: usize,
    b: usize,
    d: usize,
    spec: &AggregatorSpec,
) -> Result<BoundConstant> {
    if n == 0 || d == 0 {
        return Err(Error::RuleDomain("bound needs n >= 1 and d >= 1".into()));
    }
    let alpha = b as f64 / n as f64;
    if rule.is_robust() && 2 * b >= n {
        return Err(Error::RuleDomain(format!(
            "{rule} bound requires alpha < 1/2, got {b}/{n}"
        )));
    }
    let nf = n as f64;
    let bf = b as f64;
    let mut v0_term_coeff = 0.0;
    let c_alpha_squared = match rule {
        // exact for b = 0; for b > 0 the mean admits no bound independent of
        // the Byzantine payloads, so certification documents its failures
        AggregationRule::Mean => 0.0,
        AggregationRule::Coomed => {
            let delta = (2.0 * (nf - bf).sqrt()).min((d as f64).sqrt());
            let scale = 1.0 / (1.0 - alpha);
            scale * scale * 0.5 * delta * delta
        }
        AggregationRule::Trimean => {
            2.0 * alpha * (1.0 - alpha) / ((1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha))
        }
        AggregationRule::Geomed => {
            let scale = 2.0 * (1.0 - alpha) / (1.0 - 2.0 * alpha);
            scale * scale
        }
        AggregationRule::Krum => {
            if b + 3 > n {
                return Err(Error::RuleDomain(format!(
                    "krum bound requires b <= n-3, got b={b} n={n}"
                )));
            }
            let root = ((1.0 - alpha) / (1.0 - 2.0 * alpha)).sqrt();
            2.0 * (1.0 + root) * (1.0 + root)
        }
        AggregationRule::CenteredClipping => {
            if alpha > 0.1 {
                return Err(Error::RuleDomain(format!(
                    "cc bound requires alpha <= 0.1, got {b}/{n}"
                )));
            }
            v0_term_coeff = (9.7 * alpha).powi(spec.inner_iters as i32);
            8000.0 * alpha
        }
        AggregationRule::Phocas => {
            4.0 + 12.0 * alpha * (1.0 - alpha) / ((1.0 - 2.0 * alpha) * (1.0 - 2.0 * alpha))
        }
        AggregationRule::Faba => {
            if 3 * b >= n {
                return Err(Error::RuleDomain(format!(
                    "faba bound requires alpha < 1/3, got {b}/{n}"
                )));
            }
            if b == 0 {
                // no removals happen, the output is exactly the honest mean
                0.0
            } else {
                let base = 4.0
                    * ((bf + 1.0) / (nf - bf) + (nf + 1.0 - bf) / (nf - bf) * bf / (nf - 3.0 * bf));
                base * base
            }
        }
    };
    if !c_alpha_squared.is_finite() || c_alpha_squared < 0.0 {
        return Err(Error::NonFinite("bound constant"));
    }
    Ok(BoundConstant {
        rule,
        alpha,
        n,
        b,
        d,
        c_alpha_squared,
        v0_term_coeff,
    })
}

/// Outcome of checking one message set against a rule's bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRecord {
    pub rule: AggregationRule,
    /// Squared distance between the aggregate and the honest mean.
    pub lhs: f64,
    /// Largest squared honest deviation.
    pub zeta_sq: f64,
    /// Right-hand side: `c^2 * zeta^2` plus the centered-clipping start term.
    pub bound: f64,
    pub pass: bool,
}

/// Certify one round: aggregate the messages, measure the deviation from the
/// honest mean, and compare against the closed-form bound.
pub fn certify(
    spec: &AggregatorSpec,
    messages: &[Message],
    cohort: &Cohort,
    prev_decision: &DecisionVector,
) -> Result<CertificateRecord> {
    let mean = honest_mean(messages, cohort)?;
    let zeta_sq = max_honest_deviation(messages, cohort)?;
    let constant = bound_constant(
        spec.rule,
        cohort.n(),
        cohort.byzantine_count(),
        mean.dim(),
        spec,
    )?;
    let output = aggregate(spec, messages, prev_decision)?;
    let lhs = output.dist_sq(&mean)?;
    let bound =
        constant.c_alpha_squared * zeta_sq + constant.v0_term_coeff * prev_decision.dist_sq(&mean)?;
    Ok(CertificateRecord {
        rule: spec.rule,
        lhs,
        zeta_sq,
        bound,
        pass: lhs <= bound * (1.0 + CERTIFY_REL_SLACK),
    })
}
