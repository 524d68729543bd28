//! Flat parameter vectors.
//!
//! Every model handled by the simulator is flattened into a [`ParamVector`]:
//! client models, edge aggregates and the global model. All aggregation
//! rules and distance computations operate on this type. Reductions always
//! run in index order so results are bit-reproducible.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable, finite, fixed-length vector of `f64` parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Wraps `values`, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    fn check_len(&self, other: &ParamVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        sum_of_squares(self.0.iter().copied()).sqrt()
    }

    /// Euclidean distance `‖self − other‖₂`.
    pub fn l2_distance(&self, other: &ParamVector) -> Result<f64> {
        self.check_len(other)?;
        Ok(self.squared_distance_unchecked(other).sqrt())
    }

    /// Squared Euclidean distance.
    pub fn squared_distance(&self, other: &ParamVector) -> Result<f64> {
        self.check_len(other)?;
        Ok(self.squared_distance_unchecked(other))
    }

    fn squared_distance_unchecked(&self, other: &ParamVector) -> f64 {
        sum_of_squares(self.0.iter().zip(&other.0).map(|(a, b)| a - b))
    }

    /// `self * factor`.
    pub fn scaled(&self, factor: f64) -> Result<ParamVector> {
        ParamVector::new(self.0.iter().map(|v| v * factor).collect())
    }

    /// Rescales so the Euclidean norm equals `target`.
    pub fn scale_to_norm(&self, target: f64) -> Result<ParamVector> {
        if !(target >= 0.0) || !target.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "target norm must be finite and non-negative, got {target}"
            )));
        }
        if target == 0.0 {
            return Ok(ParamVector::zeros(self.len()));
        }
        let norm = self.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroScale { target });
        }
        self.scaled(target / norm)
    }

    /// `self + other`.
    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_len(other)?;
        ParamVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_len(other)?;
        ParamVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ParamVector::new(values)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Vec<f64> {
        v.0
    }
}

fn sum_of_squares(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |acc, v| acc + v * v)
}

/// Euclidean norm of `v`.
pub fn l2_norm(v: &ParamVector) -> f64 {
    v.l2_norm()
}

/// Euclidean distance between `a` and `b`.
pub fn l2_distance(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    a.l2_distance(b)
}

/// `v · target / ‖v‖`.
pub fn scale_to_norm(v: &ParamVector, target: f64) -> Result<ParamVector> {
    v.scale_to_norm(target)
}

/// `Σ weights[i] · vectors[i]`, accumulated in index order.
///
/// Weights are used as given; normalizing them is the caller's job.
pub fn weighted_sum<V: AsRef<ParamVector>>(vectors: &[V], weights: &[f64]) -> Result<ParamVector> {
    let first = vectors
        .first()
        .ok_or(Error::Empty("weighted_sum needs at least one vector"))?;
    if vectors.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: vectors.len(),
            actual: weights.len(),
        });
    }
    let dim = first.as_ref().len();
    let mut acc = vec![0.0; dim];
    for (v, &w) in vectors.iter().zip(weights) {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += w * x;
        }
    }
    ParamVector::new(acc)
}

impl AsRef<ParamVector> for ParamVector {
    fn as_ref(&self) -> &ParamVector {
        self
    }
}
