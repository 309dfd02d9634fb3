//! Multivariate Hermite forms in the retained features.
//!
//! Integrating out mode `q` shifts the conditional variance of the
//! remaining features by `B(x) = ½ Σ U_{abqq} He₂(φ_a, φ_b)` and their
//! conditional mean by `A(x) = ⅙ Σ U_{abcq} He₃(φ_a, φ_b, φ_c)`, where
//! `He₂(u, v) = uv − δ` and `He₃` subtracts the three delta contractions.
//!
//! The Kronecker delta is taken as the feature Gram matrix on the reference
//! grid. For orthonormal features this is the identity up to rounding; for
//! sample-based measures it keeps `B` exactly centred.

use std::fmt;
use std::sync::Arc;

use super::CumulantTable;
use crate::error::{Error, Result};
use crate::spectral::{Basis, QuadratureGrid};

fn check_modes(basis: &dyn Basis, modes: &[usize], q: usize) -> Result<()> {
    for &k in modes.iter().chain(std::iter::once(&q)) {
        if k == 0 || k > basis.max_mode() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                max_mode: basis.max_mode(),
            });
        }
    }
    Ok(())
}

/// The variance-shift form `B` for one integrated mode.
#[derive(Clone)]
pub struct BForm {
    pub q: usize,
    pub modes: Vec<usize>,
    /// `½ U_{abqq}`, row-major over `modes`.
    coef: Vec<f64>,
    gram: Vec<f64>,
    basis: Arc<dyn Basis>,
}

impl fmt::Debug for BForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BForm")
            .field("q", &self.q)
            .field("modes", &self.modes)
            .field("coef", &self.coef)
            .finish()
    }
}

impl BForm {
    pub fn new(
        table: &CumulantTable,
        lesser: &[usize],
        q: usize,
        basis: Arc<dyn Basis>,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        check_modes(basis.as_ref(), lesser, q)?;
        let m = lesser.len();
        let mut u = vec![0.0; m * m];
        for (i, &a) in lesser.iter().enumerate() {
            for (j, &b) in lesser.iter().enumerate() {
                u[i * m + j] = table.value([a, b, q, q])?;
            }
        }
        let gram = gram_matrix(basis.as_ref(), lesser, grid);
        Ok(Self::from_parts(q, lesser.to_vec(), &u, gram, basis))
    }

    /// From the matrix `U_{abqq}` (row-major) and the reference Gram matrix.
    pub(crate) fn from_parts(
        q: usize,
        modes: Vec<usize>,
        u: &[f64],
        gram: Vec<f64>,
        basis: Arc<dyn Basis>,
    ) -> Self {
        BForm {
            q,
            modes,
            coef: u.iter().map(|v| 0.5 * v).collect(),
            gram,
            basis,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|c| *c == 0.0)
    }

    /// `½ U_{abqq}` for the `i`-th and `j`-th retained modes.
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        self.coef[i * self.modes.len() + j]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let m = self.modes.len();
        let mut v = vec![0.0; m];
        self.basis.eval_modes(&self.modes, x, &mut v);
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let he2 = v[i] * v[j] - self.gram[i * m + j];
                acc += self.coef[i * m + j] * he2;
            }
        }
        acc
    }

    pub fn on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        grid.points.iter().map(|x| self.eval(x)).collect()
    }
}

/// The mean-shift form `A` for one integrated mode.
#[derive(Clone)]
pub struct AForm {
    pub q: usize,
    pub modes: Vec<usize>,
    /// `⅙ U_{abcq}`, row-major over `modes³`.
    coef: Vec<f64>,
    gram: Vec<f64>,
    basis: Arc<dyn Basis>,
}

impl fmt::Debug for AForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AForm")
            .field("q", &self.q)
            .field("modes", &self.modes)
            .field("coef", &self.coef)
            .finish()
    }
}

impl AForm {
    pub fn new(
        table: &CumulantTable,
        lesser: &[usize],
        q: usize,
        basis: Arc<dyn Basis>,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        check_modes(basis.as_ref(), lesser, q)?;
        let m = lesser.len();
        let mut coef = vec![0.0; m * m * m];
        for (i, &a) in lesser.iter().enumerate() {
            for (j, &b) in lesser.iter().enumerate() {
                for (l, &c) in lesser.iter().enumerate() {
                    coef[(i * m + j) * m + l] = table.value([a, b, c, q])? / 6.0;
                }
            }
        }
        let gram = gram_matrix(basis.as_ref(), lesser, grid);
        Ok(AForm {
            q,
            modes: lesser.to_vec(),
            coef,
            gram,
            basis,
        })
    }

    /// From the tensor `U_{abcq}` (row-major) and the reference Gram matrix.
    pub(crate) fn from_parts(
        q: usize,
        modes: Vec<usize>,
        u: &[f64],
        gram: Vec<f64>,
        basis: Arc<dyn Basis>,
    ) -> Self {
        AForm {
            q,
            modes,
            coef: u.iter().map(|v| v / 6.0).collect(),
            gram,
            basis,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let m = self.modes.len();
        let mut v = vec![0.0; m];
        self.basis.eval_modes(&self.modes, x, &mut v);
        let d = |i: usize, j: usize| self.gram[i * m + j];
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                for l in 0..m {
                    let he3 = v[i] * v[j] * v[l] - d(i, j) * v[l] - d(i, l) * v[j] - d(j, l) * v[i];
                    acc += self.coef[(i * m + j) * m + l] * he3;
                }
            }
        }
        acc
    }

    pub fn on_grid(&self, grid: &QuadratureGrid) -> Vec<f64> {
        grid.points.iter().map(|x| self.eval(x)).collect()
    }
}

/// `∫ φ_a φ_b dμ` on the grid, row-major.
pub(crate) fn gram_matrix(basis: &dyn Basis, modes: &[usize], grid: &QuadratureGrid) -> Vec<f64> {
    let m = modes.len();
    let mut gram = vec![0.0; m * m];
    let mut v = vec![0.0; m];
    for (x, w) in grid.points.iter().zip(&grid.weights) {
        basis.eval_modes(modes, x, &mut v);
        for i in 0..m {
            for j in 0..m {
                gram[i * m + j] += w * v[i] * v[j];
            }
        }
    }
    gram
}

/// `B(x)` on the grid for integrating out mode `q` against the `lesser` modes.
pub fn b_form(
    table: &CumulantTable,
    lesser: &[usize],
    q: usize,
    basis: &Arc<dyn Basis>,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    Ok(BForm::new(table, lesser, q, Arc::clone(basis), grid)?.on_grid(grid))
}

/// `A(x)` on the grid for integrating out mode `q` against the `lesser` modes.
pub fn a_form(
    table: &CumulantTable,
    lesser: &[usize],
    q: usize,
    basis: &Arc<dyn Basis>,
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    Ok(AForm::new(table, lesser, q, Arc::clone(basis), grid)?.on_grid(grid))
}
