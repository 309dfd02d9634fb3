//! Feature-space cumulants: fourth Ursell functions, the A and B Hermite
//! forms built from them, and Gaussianity diagnostics.

mod forms;
mod grid;
mod report;
mod ursell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{Basis, DataMeasure};

pub use forms::{a_form, b_form, AForm, BForm};
pub use grid::GridFeatures;
pub use report::{gaussianity_report, ColumnGaussianity, GaussianityReport, PairDependence};
pub use ursell::{
    canonical, canonical_tuples, cumulant_table_mc, cumulant_table_quadrature, ursell4,
    ursell4_on_grid, ursell4_with_blocks, CumulantEntry, CumulantTable, Method, UrsellEstimate,
    DEFAULT_BLOCKS,
};

/// Feature values `S[i][c] = φ_{modes[c]}(x_i)` for points drawn from a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    modes: Vec<usize>,
    /// Row-major, `num_samples × modes.len()`.
    data: Vec<f64>,
    pub seed: u64,
}

impl FeatureSample {
    /// Wraps precomputed feature rows.
    pub fn from_rows(modes: Vec<usize>, data: Vec<f64>, seed: u64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("modes", "need at least one feature column"));
        }
        if data.len() % modes.len() != 0 {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                got: data.len() % modes.len(),
            });
        }
        if data.len() / modes.len() < 2 {
            return Err(Error::invalid("num_samples", "must be at least 2"));
        }
        Ok(FeatureSample { modes, data, seed })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn num_samples(&self) -> usize {
        self.data.len() / self.modes.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.modes.len();
        &self.data[i * m..(i + 1) * m]
    }

    /// Column position of mode `k`.
    pub fn column_index(&self, k: usize) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == k)
            .ok_or(Error::ModeOutOfRange {
                mode: k,
                max_mode: self.modes.iter().copied().max().unwrap_or(0),
            })
    }

    pub fn column(&self, k: usize) -> Result<Vec<f64>> {
        let c = self.column_index(k)?;
        Ok(self.data.chunks_exact(self.modes.len()).map(|r| r[c]).collect())
    }

    pub fn column_means(&self) -> Vec<f64> {
        let m = self.modes.len();
        let mut acc = vec![0.0; m];
        for row in self.data.chunks_exact(m) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let n = self.num_samples() as f64;
        acc.iter().map(|a| a / n).collect()
    }
}

/// Draws `num_samples` points from `measure` and tabulates the requested modes.
pub fn sample_features(
    basis: &dyn Basis,
    measure: &DataMeasure,
    modes: &[usize],
    num_samples: usize,
    seed: u64,
) -> Result<FeatureSample> {
    if num_samples < 2 {
        return Err(Error::invalid("num_samples", "must be at least 2"));
    }
    if measure.dim() != basis.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.input_dim(),
            got: measure.dim(),
        });
    }
    for &k in modes {
        if k == 0 || k > basis.max_mode() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                max_mode: basis.max_mode(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = measure.sample(&mut rng, num_samples);
    let m = modes.len();
    let mut data = vec![0.0; num_samples * m];
    for (x, row) in points.iter().zip(data.chunks_exact_mut(m)) {
        basis.eval_modes(modes, x, row);
    }
    FeatureSample::from_rows(modes.to_vec(), data, seed)
}
