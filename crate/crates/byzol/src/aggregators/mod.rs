//! The eight aggregation rules the server can apply to the received
//! messages, plus their robustness-bound constants and an empirical
//! bounded-aggregation certifier.
//!
//! Every rule is a deterministic, pure function of the message set (ordered
//! by sender for tie-breaking) and, for centered clipping, the previous
//! decision. All tie-breaks resolve to the smallest sender index so that
//! regret traces are reproducible.

mod bounds;

pub use bounds::{bound_constant, certify, BoundConstant, CertificateRecord};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::core::{DecisionVector, Message};
use crate::error::{Error, Result};

/// Aggregation rule identifiers. Config files use the lowercase names
/// `mean`, `coomed`, `trimean`, `geomed`, `krum`, `cc`, `phocas`, `faba`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregationRule {
    Mean,
    Coomed,
    Trimean,
    Geomed,
    Krum,
    CenteredClipping,
    Phocas,
    Faba,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 8] = [
        AggregationRule::Mean,
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Geomed,
        AggregationRule::Krum,
        AggregationRule::CenteredClipping,
        AggregationRule::Phocas,
        AggregationRule::Faba,
    ];

    /// The seven rules with a bounded-aggregation constant (everything but
    /// plain mean).
    pub const ROBUST: [AggregationRule; 7] = [
        AggregationRule::Coomed,
        AggregationRule::Trimean,
        AggregationRule::Geomed,
        AggregationRule::Krum,
        AggregationRule::CenteredClipping,
        AggregationRule::Phocas,
        AggregationRule::Faba,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AggregationRule::Mean => "mean",
            AggregationRule::Coomed => "coomed",
            AggregationRule::Trimean => "trimean",
            AggregationRule::Geomed => "geomed",
            AggregationRule::Krum => "krum",
            AggregationRule::CenteredClipping => "cc",
            AggregationRule::Phocas => "phocas",
            AggregationRule::Faba => "faba",
        }
    }

    pub fn is_robust(&self) -> bool {
        !matches!(self, AggregationRule::Mean)
    }
}

impl fmt::Display for AggregationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(AggregationRule::Mean),
            "coomed" => Ok(AggregationRule::Coomed),
            "trimean" => Ok(AggregationRule::Trimean),
            "geomed" => Ok(AggregationRule::Geomed),
            "krum" => Ok(AggregationRule::Krum),
            "cc" => Ok(AggregationRule::CenteredClipping),
            "phocas" => Ok(AggregationRule::Phocas),
            "faba" => Ok(AggregationRule::Faba),
            other => Err(Error::InvalidConfig {
                field: "aggregator.rule".into(),
                reason: format!("unknown rule `{other}`"),
            }),
        }
    }
}

/// A rule plus its hyperparameters.
///
/// `q` is the estimated Byzantine count consumed by trimean, krum, phocas
/// and faba; it defaults to the true count when resolved from a config, but
/// can be overridden to study misestimation. `tau` and `inner_iters` belong
/// to centered clipping, the Weiszfeld knobs to the geometric median.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorSpec {
    pub rule: AggregationRule,
    pub q: usize,
    pub tau: f64,
    pub inner_iters: usize,
    pub weiszfeld_tol: f64,
    pub weiszfeld_max_iters: usize,
}

pub const DEFAULT_TAU: f64 = 10.0;
pub const DEFAULT_INNER_ITERS: usize = 1;
pub const DEFAULT_WEISZFELD_TOL: f64 = 1e-10;
pub const DEFAULT_WEISZFELD_MAX_ITERS: usize = 1000;

impl AggregatorSpec {
    pub fn new(rule: AggregationRule, q: usize) -> Self {
        Self {
            rule,
            q,
            tau: DEFAULT_TAU,
            inner_iters: DEFAULT_INNER_ITERS,
            weiszfeld_tol: DEFAULT_WEISZFELD_TOL,
            weiszfeld_max_iters: DEFAULT_WEISZFELD_MAX_ITERS,
        }
    }

    /// Structural domain checks against a cohort of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.tau <= 0.0 || !self.tau.is_finite() {
            return Err(Error::RuleDomain(format!(
                "cc clipping radius tau must be positive and finite, got {}",
                self.tau
            )));
        }
        if self.inner_iters < 1 {
            return Err(Error::RuleDomain("cc inner_iters must be >= 1".into()));
        }
        if self.weiszfeld_tol <= 0.0 || !self.weiszfeld_tol.is_finite() {
            return Err(Error::RuleDomain(
                "geomed weiszfeld_tol must be positive".into(),
            ));
        }
        if self.weiszfeld_max_iters < 1 {
            return Err(Error::RuleDomain(
                "geomed weiszfeld_max_iters must be >= 1".into(),
            ));
        }
        match self.rule {
            AggregationRule::Trimean | AggregationRule::Phocas => {
                if 2 * self.q >= n {
                    return Err(Error::RuleDomain(format!(
                        "{} requires 2q < n, got q={} n={n}",
                        self.rule, self.q
                    )));
                }
            }
            AggregationRule::Krum => {
                if 2 * self.q >= n || self.q + 3 > n {
                    return Err(Error::RuleDomain(format!(
                        "krum requires q <= n-3 and q < n/2, got q={} n={n}",
                        self.q
                    )));
                }
            }
            AggregationRule::Faba if 3 * self.q >= n => {
                return Err(Error::RuleDomain(format!(
                    "faba requires q < n/3, got q={} n={n}",
                    self.q
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

fn validated_dim(messages: &[Message]) -> Result<usize> {
    if messages.is_empty() {
        return Err(Error::MalformedMessages("no messages to aggregate".into()));
    }
    let mut seen = BTreeSet::new();
    for m in messages {
        if !seen.insert(m.sender) {
            return Err(Error::MalformedMessages(format!(
                "duplicate sender {}",
                m.sender
            )));
        }
    }
    let dim = messages[0].payload.dim();
    for m in messages {
        m.payload.check_dim(dim)?;
    }
    Ok(dim)
}

/// Messages sorted by sender index; all tie-breaks below rely on this order.
fn by_sender(messages: &[Message]) -> Vec<&Message> {
    let mut sorted: Vec<&Message> = messages.iter().collect();
    sorted.sort_by_key(|m| m.sender);
    sorted
}

/// Messages sorted by payload value (senders only break exact payload
/// ties). Accumulating sums in this order makes every averaging rule a
/// bit-exact function of the payload multiset, independent of sender
/// relabeling.
fn by_payload<'a, I>(messages: I) -> Vec<&'a Message>
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut sorted: Vec<&Message> = messages.into_iter().collect();
    sorted.sort_by(|a, b| {
        for (x, y) in a.payload.iter().zip(b.payload.iter()) {
            match f64::total_cmp(x, y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        a.sender.cmp(&b.sender)
    });
    sorted
}

fn payload_mean<'a, I>(messages: I) -> Result<DecisionVector>
where
    I: IntoIterator<Item = &'a Message>,
{
    DecisionVector::mean_of(by_payload(messages).into_iter().map(|m| &m.payload))
}

/// Mean of a scalar slice, exact when all entries are identical.
fn column_mean(values: &[f64]) -> f64 {
    if values[1..].iter().all(|v| *v == values[0]) {
        return values[0];
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Apply `spec` to one round of messages. `prev_decision` is read only by
/// centered clipping, where it seeds the clipping iteration.
pub fn aggregate(
    spec: &AggregatorSpec,
    messages: &[Message],
    prev_decision: &DecisionVector,
) -> Result<DecisionVector> {
    let n = messages.len();
    spec.validate(n)?;
    match spec.rule {
        AggregationRule::Mean => mean(messages),
        AggregationRule::Coomed => coomed(messages),
        AggregationRule::Trimean => trimean(messages, spec.q),
        AggregationRule::Geomed => geomed(messages, spec.weiszfeld_tol, spec.weiszfeld_max_iters),
        AggregationRule::Krum => krum(messages, spec.q),
        AggregationRule::CenteredClipping => {
            centered_clipping(messages, prev_decision, spec.tau, spec.inner_iters)
        }
        AggregationRule::Phocas => phocas(messages, spec.q),
        AggregationRule::Faba => faba(messages, spec.q),
    }
}

/// Plain coordinate-wise mean. Vulnerable to a single Byzantine payload.
pub fn mean(messages: &[Message]) -> Result<DecisionVector> {
    validated_dim(messages)?;
    payload_mean(messages)
}

/// Coordinate-wise median; for an even count, the average of the two middle
/// order statistics.
pub fn coomed(messages: &[Message]) -> Result<DecisionVector> {
    let dim = validated_dim(messages)?;
    let n = messages.len();
    let mut out = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(n);
    for k in 0..dim {
        column.clear();
        column.extend(messages.iter().map(|m| m.payload[k]));
        column.sort_by(f64::total_cmp);
        let value = if n % 2 == 1 {
            column[n / 2]
        } else {
            0.5 * (column[n / 2 - 1] + column[n / 2])
        };
        out.push(value);
    }
    DecisionVector::new(out)
}

/// Coordinate-wise trimmed mean: drop the `q` largest and `q` smallest
/// values per coordinate and average the remaining `n - 2q`.
pub fn trimean(messages: &[Message], q: usize) -> Result<DecisionVector> {
    let dim = validated_dim(messages)?;
    let n = messages.len();
    if 2 * q >= n {
        return Err(Error::RuleDomain(format!(
            "trimean requires 2q < n, got q={q} n={n}"
        )));
    }
    let mut out = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(n);
    for k in 0..dim {
        column.clear();
        column.extend(messages.iter().map(|m| m.payload[k]));
        column.sort_by(f64::total_cmp);
        out.push(column_mean(&column[q..n - q]));
    }
    DecisionVector::new(out)
}

/// Smoothing added inside every Weiszfeld denominator. Small enough that the
/// bias it introduces stays below the convergence tolerance.
const WEISZFELD_EPS: f64 = 1e-12;

/// A message payload is the exact geometric median when the unit pulls of
/// the other payloads sum to less than its multiplicity (the subgradient
/// optimality condition). Strict inequality keeps tie cases, such as two
/// distinct points, on the iterative path.
fn geomed_vertex(ordered: &[&Message]) -> Result<Option<DecisionVector>> {
    let mut start = 0;
    while start < ordered.len() {
        let payload = &ordered[start].payload;
        let mut multiplicity = 1usize;
        while start + multiplicity < ordered.len()
            && ordered[start + multiplicity].payload.as_slice() == payload.as_slice()
        {
            multiplicity += 1;
        }
        let mut pull = DecisionVector::zeros(payload.dim());
        for other in ordered {
            if other.payload.as_slice() == payload.as_slice() {
                continue;
            }
            let diff = other.payload.sub(payload)?;
            pull = pull.add_scaled(&diff, 1.0 / diff.norm())?;
        }
        if pull.norm() < multiplicity as f64 {
            return Ok(Some(payload.clone()));
        }
        start += multiplicity;
    }
    Ok(None)
}

/// Approximate minimizer of the summed Euclidean distance to the messages.
///
/// A payload satisfying the vertex optimality condition is returned exactly;
/// otherwise smoothed Weiszfeld fixed-point iteration runs from the
/// coordinate mean until the estimated remaining error drops below `tol` or
/// `max_iters` rounds pass. A message set of two points converges to the
/// midpoint (any point on the segment minimizes; the mean start is already
/// stationary).
pub fn geomed(messages: &[Message], tol: f64, max_iters: usize) -> Result<DecisionVector> {
    let dim = validated_dim(messages)?;
    if tol <= 0.0 || max_iters < 1 {
        return Err(Error::RuleDomain(
            "geomed needs tol > 0 and max_iters >= 1".into(),
        ));
    }
    let ordered = by_payload(messages);
    if let Some(vertex) = geomed_vertex(&ordered)? {
        return Ok(vertex);
    }
    // delta form of the fixed-point map: exact at stationary points
    let mut current = mean(messages)?;
    let mut prev_moved = f64::INFINITY;
    for _ in 0..max_iters {
        let mut weight_sum = 0.0;
        let mut shift = vec![0.0; dim];
        for m in &ordered {
            let w = 1.0 / (current.dist_sq(&m.payload)?.sqrt() + WEISZFELD_EPS);
            weight_sum += w;
            for ((acc, x), c) in shift.iter_mut().zip(m.payload.iter()).zip(current.iter()) {
                *acc += w * (x - c);
            }
        }
        let next = DecisionVector::new(
            current
                .iter()
                .zip(shift.iter())
                .map(|(c, s)| c + s / weight_sum)
                .collect(),
        )?;
        let moved = current.dist_sq(&next)?.sqrt();
        current = next;
        // for a linear rate rho the remaining error is about
        // moved * rho / (1 - rho); stop once that estimate is inside tol
        let rho = (moved / prev_moved).min(0.999);
        if moved < tol && moved * rho / (1.0 - rho) < tol {
            break;
        }
        prev_moved = moved;
    }
    Ok(current)
}

/// Krum: score each message by the summed squared distance to its
/// `n - q - 2` nearest other messages and return the payload with the
/// smallest score, ties broken by smallest sender index.
pub fn krum(messages: &[Message], q: usize) -> Result<DecisionVector> {
    validated_dim(messages)?;
    let n = messages.len();
    if n < q + 3 || 2 * q >= n {
        return Err(Error::RuleDomain(format!(
            "krum requires q <= n-3 and q < n/2, got q={q} n={n}"
        )));
    }
    let neighbors = n - q - 2;
    let sorted = by_sender(messages);
    let mut best: Option<(f64, usize)> = None;
    let mut dists = Vec::with_capacity(n - 1);
    for (i, m) in sorted.iter().enumerate() {
        dists.clear();
        for (j, other) in sorted.iter().enumerate() {
            if i != j {
                dists.push(m.payload.dist_sq(&other.payload)?);
            }
        }
        dists.sort_by(f64::total_cmp);
        let score: f64 = dists[..neighbors].iter().sum();
        match best {
            Some((s, _)) if score >= s => {}
            _ => best = Some((score, i)),
        }
    }
    let (_, winner) = best.expect("non-empty message set");
    Ok(sorted[winner].payload.clone())
}

/// Centered clipping: starting from the previous decision, repeatedly move
/// toward the messages with each displacement clipped to radius `tau`. A
/// message equal to the current center contributes nothing (clip factor 1 on
/// a zero displacement).
pub fn centered_clipping(
    messages: &[Message],
    prev_decision: &DecisionVector,
    tau: f64,
    inner_iters: usize,
) -> Result<DecisionVector> {
    let dim = validated_dim(messages)?;
    prev_decision.check_dim(dim)?;
    if tau <= 0.0 || inner_iters < 1 {
        return Err(Error::RuleDomain(
            "cc needs tau > 0 and inner_iters >= 1".into(),
        ));
    }
    let n = messages.len() as f64;
    let ordered = by_payload(messages);
    let mut center = prev_decision.clone();
    for _ in 0..inner_iters {
        let mut shift = vec![0.0; dim];
        for m in &ordered {
            let dist = center.dist_sq(&m.payload)?.sqrt();
            let clip = if dist > tau { tau / dist } else { 1.0 };
            for ((acc, x), c) in shift.iter_mut().zip(m.payload.iter()).zip(center.iter()) {
                *acc += clip * (x - c);
            }
        }
        center = DecisionVector::new(
            center
                .iter()
                .zip(shift.iter())
                .map(|(c, s)| c + s / n)
                .collect(),
        )?;
    }
    Ok(center)
}

/// Phocas: anchor at the trimmed mean, keep the `n - q` messages closest to
/// it (ties by smallest sender index) and return their mean.
pub fn phocas(messages: &[Message], q: usize) -> Result<DecisionVector> {
    validated_dim(messages)?;
    let n = messages.len();
    let anchor = trimean(messages, q)?;
    let sorted = by_sender(messages);
    let mut ranked: Vec<(f64, usize)> = sorted
        .iter()
        .enumerate()
        .map(|(i, m)| Ok((anchor.dist_sq(&m.payload)?, i)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| f64::total_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    payload_mean(ranked[..n - q].iter().map(|&(_, i)| sorted[i]))
}

/// FABA: `q` times remove the message farthest from the mean of the
/// remaining set (ties by smallest sender index), then return the mean of
/// what is left. The `q < n/3` robustness domain is enforced on the
/// [`AggregatorSpec`] path; the raw operation only needs a nonempty
/// remainder.
pub fn faba(messages: &[Message], q: usize) -> Result<DecisionVector> {
    validated_dim(messages)?;
    let n = messages.len();
    if q >= n {
        return Err(Error::RuleDomain(format!(
            "faba cannot discard all messages, got q={q} n={n}"
        )));
    }
    let mut remaining = by_sender(messages);
    for _ in 0..q {
        let center = payload_mean(remaining.iter().copied())?;
        let mut farthest = 0usize;
        let mut farthest_dist = -1.0;
        for (i, m) in remaining.iter().enumerate() {
            let d = center.dist_sq(&m.payload)?;
            if d > farthest_dist {
                farthest_dist = d;
                farthest = i;
            }
        }
        remaining.remove(farthest);
    }
    payload_mean(remaining.iter().copied())
}

#[cfg(test)]
mod tests;
