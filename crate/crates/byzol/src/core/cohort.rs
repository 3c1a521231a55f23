//! Cohort structure and the honest-side analysis helpers.

use std::collections::BTreeSet;

use crate::core::vector::{DecisionVector, Message, ParticipantId};
use crate::error::{Error, Result};

/// Participant roster: `n` participants indexed `1..=n`, of which the members
/// of `byzantine_ids` are adversarial. Requires `b < n/2` so that the honest
/// participants form a strict majority.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cohort {
    n: usize,
    byzantine: BTreeSet<ParticipantId>,
}

impl Cohort {
    pub fn new(n: usize, byzantine_ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let byzantine: BTreeSet<ParticipantId> =
            byzantine_ids.into_iter().map(ParticipantId).collect();
        if n == 0 {
            return Err(Error::InvalidConfig {
                field: "cohort.n".into(),
                reason: "must be at least 1".into(),
            });
        }
        for id in &byzantine {
            if id.0 < 1 || id.0 > n {
                return Err(Error::InvalidConfig {
                    field: "cohort.byzantine_ids".into(),
                    reason: format!("participant {id} outside 1..={n}"),
                });
            }
        }
        let b = byzantine.len();
        if 2 * b >= n {
            return Err(Error::InvalidConfig {
                field: "cohort.byzantine_ids".into(),
                reason: format!("byzantine fraction {b}/{n} is not below 1/2"),
            });
        }
        Ok(Self { n, byzantine })
    }

    pub fn all_honest(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn byzantine_count(&self) -> usize {
        self.byzantine.len()
    }

    pub fn honest_count(&self) -> usize {
        self.n - self.byzantine.len()
    }

    pub fn byzantine_fraction(&self) -> f64 {
        self.byzantine.len() as f64 / self.n as f64
    }

    pub fn is_honest(&self, id: ParticipantId) -> bool {
        !self.byzantine.contains(&id)
    }

    pub fn participants(&self) -> impl Iterator<Item = ParticipantId> + '_ {
        (1..=self.n).map(ParticipantId)
    }

    pub fn honest_ids(&self) -> impl Iterator<Item = ParticipantId> + '_ {
        self.participants().filter(|id| self.is_honest(*id))
    }

    pub fn byzantine_ids(&self) -> impl Iterator<Item = ParticipantId> + '_ {
        self.byzantine.iter().copied()
    }
}

fn validate_messages(messages: &[Message], cohort: &Cohort) -> Result<usize> {
    if messages.len() != cohort.n() {
        return Err(Error::MalformedMessages(format!(
            "expected one message per participant ({}), got {}",
            cohort.n(),
            messages.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for m in messages {
        if m.sender.0 < 1 || m.sender.0 > cohort.n() {
            return Err(Error::MalformedMessages(format!(
                "sender {} outside 1..={}",
                m.sender,
                cohort.n()
            )));
        }
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

/// Coordinate-wise average over the honest senders only.
///
/// This is an analysis and certification aid; the server's decision path
/// never calls it. Accumulation runs in payload-value order, so the result
/// is bit-identical under any permutation of the message list.
pub fn honest_mean(messages: &[Message], cohort: &Cohort) -> Result<DecisionVector> {
    validate_messages(messages, cohort)?;
    let mut honest: Vec<&DecisionVector> = messages
        .iter()
        .filter(|m| cohort.is_honest(m.sender))
        .map(|m| &m.payload)
        .collect();
    if honest.is_empty() {
        return Err(Error::EmptyHonestSet);
    }
    honest.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match f64::total_cmp(x, y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    DecisionVector::mean_of(honest)
}

/// Largest squared deviation of any honest message from the honest mean.
pub fn max_honest_deviation(messages: &[Message], cohort: &Cohort) -> Result<f64> {
    let mean = honest_mean(messages, cohort)?;
    let mut worst: f64 = 0.0;
    for m in messages.iter().filter(|m| cohort.is_honest(m.sender)) {
        worst = worst.max(mean.dist_sq(&m.payload)?);
    }
    Ok(worst)
}
