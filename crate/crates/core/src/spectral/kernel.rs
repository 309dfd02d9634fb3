use nalgebra::DMatrix;

use super::measure::Points;
use super::spectrum::Spectrum;
use crate::error::{Error, Result};

/// `K(x, x') = Σ_k λ_k φ_k(x) φ_k(x')`.
#[derive(Debug, Clone)]
pub struct KernelFn {
    spectrum: Spectrum,
}

impl KernelFn {
    pub fn new(spectrum: Spectrum) -> Self {
        KernelFn { spectrum }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn rank(&self) -> usize {
        self.spectrum.len()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let basis = self.spectrum.basis();
        self.spectrum
            .modes()
            .iter()
            .map(|m| m.lambda * (basis.eval(m.id, x) * basis.eval(m.id, y)))
            .sum()
    }

    /// Row `i` holds `φ_k(x_i)` for the spectrum's modes, in spectrum order.
    pub fn features(&self, points: &Points) -> DMatrix<f64> {
        let ids = self.spectrum.ids();
        let basis = self.spectrum.basis();
        let mut out = DMatrix::zeros(points.len(), ids.len());
        let mut row = vec![0.0; ids.len()];
        for (i, x) in points.iter().enumerate() {
            basis.eval_modes(&ids, x, &mut row);
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        out
    }

    pub fn check_dim(&self, points: &Points) -> Result<()> {
        let want = self.spectrum.basis().input_dim();
        if points.dim() != want && !points.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: points.dim(),
            });
        }
        Ok(())
    }
}
