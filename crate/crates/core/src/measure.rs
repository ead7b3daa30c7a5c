//! Probability vectors over the trajectory space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Event, TrajectorySpace};

/// Tolerance for non-negativity and normalization of a measure.
pub const MEASURE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("negative probability {value:.3e} at trajectory {index}")]
    Negative { index: usize, value: f64 },
    #[error("probabilities sum to {sum:.12}, expected 1")]
    NotNormalized { sum: f64 },
}

/// A point of the probability simplex over `X^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeasure {
    probs: Vec<f64>,
}

impl TrajectoryMeasure {
    pub fn new(probs: Vec<f64>) -> Result<Self, MeasureError> {
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| p < -MEASURE_TOL || p.is_nan())
        {
            return Err(MeasureError::Negative { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(MeasureError::NotNormalized { sum });
        }
        Ok(TrajectoryMeasure { probs })
    }

    pub fn uniform(space: &TrajectorySpace) -> Self {
        let n = space.size();
        TrajectoryMeasure {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(space: &TrajectorySpace, index: usize) -> Self {
        let mut probs = vec![0.0; space.size()];
        probs[index] = 1.0;
        TrajectoryMeasure { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probability(&self, event: &Event) -> Result<f64, MeasureError> {
        event_probability(self, event)
    }
}

/// `P(A)`: sum of the measure over the members of `A`.
pub fn event_probability(p: &TrajectoryMeasure, a: &Event) -> Result<f64, MeasureError> {
    if a.len() != p.len() {
        return Err(MeasureError::Dimension {
            expected: p.len(),
            found: a.len(),
        });
    }
    Ok(a.indices().map(|i| p.probs[i]).sum())
}
