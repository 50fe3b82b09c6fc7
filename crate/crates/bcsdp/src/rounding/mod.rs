//! Feasible partitions from relaxation solutions.

pub(crate) mod greedy;
mod iterative;
mod kms;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::relax::{BoundSemantics, Transform};

pub use greedy::greedy_colouring;
pub use iterative::{iterative_round, violation_bound};
pub use kms::kms_round;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingConfig {
    /// Randomised attempts in [`kms_round`].
    pub attempts: usize,
    pub seed: u64,
    /// Eigenvalues within `delta` of 0 or 1 are fixed by [`iterative_round`].
    pub delta: f64,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        RoundingConfig {
            attempts: 50,
            seed: 0,
            delta: 1e-6,
        }
    }
}

impl RoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.attempts == 0 {
            return Err(Error::InvalidArgument("attempts must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::InvalidArgument(format!("delta {} outside (0, 0.5)", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoundingDiagnostics {
    /// Reduced programs solved.
    pub rounds: usize,
    /// Rounds in which no eigenvalue met the threshold and the most nearly
    /// integral one was rounded anyway.
    pub forced: usize,
    /// Indices of constraints dropped from the reduced programs.
    pub dropped: Vec<usize>,
    /// Violation of each constraint of the box program by the rounded
    /// projection, in the units of the normalised constraint.
    pub violations: Vec<f64>,
    /// Largest sampled value of the violation bound.
    pub violation_bound: f64,
    /// Units whose rows of the rounded projection formed no exact class and
    /// were grouped greedily instead. Nonzero flags an ambiguous rounding.
    pub regrouped: usize,
    /// Set when a reduced program failed to converge and rounding stopped
    /// early.
    pub aborted: Option<String>,
}

/// The `Y - J` block of a bounded-colouring solution: unit diagonal after
/// scaling by `1 / (t - 1)`, and `-1 / (t - 1)` on the edges.
pub fn colouring_block(x: &SymMatrix, sem: &BoundSemantics, n: usize) -> Result<SymMatrix> {
    let offset = match sem.transform {
        Transform::Scaled => 0,
        Transform::Rewritten => n,
        Transform::Direct => {
            return Err(Error::InvalidArgument("model has no colouring block".into()));
        }
    };
    if x.order() < offset + n {
        return Err(Error::InvalidArgument(format!(
            "matrix of order {} has no block of order {n} at {offset}",
            x.order()
        )));
    }
    Ok(x.submatrix(&(offset..offset + n).collect::<Vec<_>>()))
}
