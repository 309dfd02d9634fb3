//! Symmetric positive-definite solves with jitter escalation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Diagonal jitter tried, in order, after a plain factorization fails.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl SpdFactor {
    /// Cholesky of `a`, adding `JITTER_LADDER` to the diagonal if needed.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(SpdFactor { chol, jitter: 0.0 });
        }
        for &jitter in &JITTER_LADDER {
            let mut shifted = a.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(SpdFactor { chol, jitter });
            }
        }
        Err(Error::Factorization {
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}
