//! Dense decision vectors and participant messages.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A point in R^d holding model parameters.
///
/// The dimension is fixed for the lifetime of an experiment and every stored
/// element is finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    elements: Vec<f64>,
}

impl DecisionVector {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("decision vector element"));
        }
        Ok(Self { elements })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            elements: vec![0.0; dim],
        }
    }

    pub fn from_elem(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    /// Scalar shorthand for the one-dimensional counter-example streams.
    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.elements.iter()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }

    /// self + scale * other
    pub fn add_scaled(&self, other: &DecisionVector, scale: f64) -> Result<DecisionVector> {
        other.check_dim(self.dim())?;
        let elements = self
            .elements
            .iter()
            .zip(other.elements.iter())
            .map(|(a, b)| a + scale * b)
            .collect();
        DecisionVector::new(elements)
    }

    pub fn sub(&self, other: &DecisionVector) -> Result<DecisionVector> {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, factor: f64) -> Result<DecisionVector> {
        DecisionVector::new(self.elements.iter().map(|a| a * factor).collect())
    }

    pub fn dot(&self, other: &DecisionVector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self
            .elements
            .iter()
            .zip(other.elements.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.elements.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &DecisionVector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self
            .elements
            .iter()
            .zip(other.elements.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Coordinate-wise mean of a non-empty set of vectors. A unanimous set
    /// returns the common vector bit-exactly.
    pub fn mean_of<'a, I>(vectors: I) -> Result<DecisionVector>
    where
        I: IntoIterator<Item = &'a DecisionVector>,
    {
        let all: Vec<&DecisionVector> = vectors.into_iter().collect();
        let first = *all.first().ok_or(Error::EmptyHonestSet)?;
        if all[1..].iter().all(|v| v.elements == first.elements) {
            return Ok(first.clone());
        }
        let mut acc = first.elements.clone();
        for v in &all[1..] {
            v.check_dim(acc.len())?;
            for (a, b) in acc.iter_mut().zip(v.elements.iter()) {
                *a += b;
            }
        }
        let count = all.len() as f64;
        DecisionVector::new(acc.into_iter().map(|a| a / count).collect())
    }

    /// FNV-style fold over the raw bit patterns; used to assert that honest
    /// state is untouched across attack calls.
    pub fn bits_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.elements {
            h ^= x.to_bits();
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

impl Index<usize> for DecisionVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.elements[i]
    }
}

impl fmt::Display for DecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// 1-based participant index, matching the convention used in all external
/// files and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParticipantId(pub usize);

impl ParticipantId {
    pub fn index(&self) -> usize {
        self.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One participant's transmission to the server at one step.
///
/// Honesty is deliberately absent here: the server cannot read it from a
/// message, it lives only in [`crate::core::Cohort`].
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: ParticipantId,
    pub payload: DecisionVector,
}

impl Message {
    pub fn new(sender: ParticipantId, payload: DecisionVector) -> Self {
        Self { sender, payload }
    }
}
