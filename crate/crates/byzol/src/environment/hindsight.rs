//! Closed-form hindsight minimization for the quadratic loss streams.
//!
//! The minimizer of the accumulated average honest loss solves the normal
//! equations of the running Gram system. Every supported loss is quadratic,
//! so a dense symmetric solve yields the exact hindsight optimum; a small
//! ridge is added only when the system is numerically ill-conditioned.

use nalgebra::{DMatrix, DVector};

use super::LossSample;
use crate::core::DecisionVector;
use crate::error::{Error, Result};

const CONDITION_LIMIT: f64 = 1e12;
const RIDGE: f64 = 1e-10;

/// Running normal equations of `sum_t (1/h) sum_j 1/2 (x'w - y)^2`.
#[derive(Debug, Clone)]
pub struct HindsightAccumulator {
    dim: usize,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Accumulated `(1/h) sum 1/2 y^2`, the loss offset at w = 0.
    offset: f64,
    steps: usize,
}

impl HindsightAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gram: DMatrix::zeros(dim, dim),
            rhs: DVector::zeros(dim),
            offset: 0.0,
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Fold one step's honest samples (averaged over the honest set) into
    /// the normal equations.
    pub fn push_step<'a, I>(&mut self, honest_samples: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a LossSample>,
    {
        let samples: Vec<&LossSample> = honest_samples.into_iter().collect();
        if samples.is_empty() {
            return Err(Error::EmptyHonestSet);
        }
        let inv_h = 1.0 / samples.len() as f64;
        for sample in samples {
            let (x, y): (Vec<f64>, f64) = match sample {
                LossSample::LeastSquares { regressor, label } => {
                    regressor.check_dim(self.dim)?;
                    (regressor.as_slice().to_vec(), *label)
                }
                LossSample::Quadratic { center } => {
                    // 1/2 (w - c)^2 is single-sample least squares with x = [1]
                    if self.dim != 1 {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            got: 1,
                        });
                    }
                    (vec![1.0], *center)
                }
            };
            for i in 0..self.dim {
                for j in 0..self.dim {
                    self.gram[(i, j)] += inv_h * x[i] * x[j];
                }
                self.rhs[i] += inv_h * x[i] * y;
            }
            self.offset += inv_h * 0.5 * y * y;
        }
        self.steps += 1;
        Ok(())
    }

    /// Solve for the hindsight minimizer and its cumulative average-honest
    /// loss. Applies the ridge fallback when the Gram condition number
    /// exceeds the limit.
    pub fn minimizer(&self) -> Result<(DecisionVector, f64)> {
        if self.steps == 0 {
            return Err(Error::EmptyHistory);
        }
        let eigen = self.gram.clone().symmetric_eigen();
        let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let lambda_min = eigen
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let needs_ridge = lambda_min <= 0.0 || lambda_max / lambda_min > CONDITION_LIMIT;
        let mut gram = self.gram.clone();
        if needs_ridge {
            for i in 0..self.dim {
                gram[(i, i)] += RIDGE;
            }
        }
        let chol = gram.clone().cholesky().ok_or(Error::SingularSystem)?;
        let solution = chol.solve(&self.rhs);
        let w = DecisionVector::new(solution.iter().cloned().collect())?;
        let total = self.loss_at_vec(&solution);
        Ok((w, total))
    }

    /// Cumulative average-honest loss at an arbitrary point.
    pub fn loss_at(&self, w: &DecisionVector) -> Result<f64> {
        w.check_dim(self.dim)?;
        let v = DVector::from_iterator(self.dim, w.iter().cloned());
        Ok(self.loss_at_vec(&v))
    }

    fn loss_at_vec(&self, w: &DVector<f64>) -> f64 {
        0.5 * (&self.gram * w).dot(w) - self.rhs.dot(w) + self.offset
    }
}

/// One-shot hindsight solve over a per-step history of honest samples.
pub fn hindsight_minimizer(history: &[Vec<LossSample>]) -> Result<(DecisionVector, f64)> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let dim = history[0]
        .first()
        .ok_or(Error::EmptyHonestSet)?
        .dim();
    let mut acc = HindsightAccumulator::new(dim);
    for step in history {
        acc.push_step(step.iter())?;
    }
    acc.minimizer()
}
