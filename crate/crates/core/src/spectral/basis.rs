use std::fmt;
use std::sync::Arc;

use super::hermite::hermite_orthonormal_all;
use super::measure::DataMeasure;
use crate::error::{Error, Result};

/// A family of eigenfunctions `φ_k`, indexed from `k = 1`.
pub trait Basis: Send + Sync + fmt::Debug {
    /// Name used in configuration files.
    fn name(&self) -> &str;

    fn input_dim(&self) -> usize;

    fn max_mode(&self) -> usize;

    fn eval(&self, mode: usize, x: &[f64]) -> f64;

    /// Evaluates several modes at one point.
    fn eval_modes(&self, modes: &[usize], x: &[f64], out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(modes) {
            *o = self.eval(k, x);
        }
    }
}

/// `φ_k = he_k`, the orthonormal Hermite polynomials under N(0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteBasis {
    max_mode: usize,
}

impl HermiteBasis {
    pub const NAME: &'static str = "hermite_orthonormal";

    pub fn new(max_mode: usize) -> Self {
        HermiteBasis { max_mode }
    }
}

impl Basis for HermiteBasis {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn max_mode(&self) -> usize {
        self.max_mode
    }

    fn eval(&self, mode: usize, x: &[f64]) -> f64 {
        super::hermite::hermite_orthonormal(mode, x[0])
    }

    fn eval_modes(&self, modes: &[usize], x: &[f64], out: &mut [f64]) {
        let top = modes.iter().copied().max().unwrap_or(0);
        let mut table = vec![0.0; top + 1];
        hermite_orthonormal_all(x[0], &mut table);
        for (o, &k) in out.iter_mut().zip(modes) {
            *o = table[k];
        }
    }
}

/// `φ_k(x) = x_k` on `R^dim`: exactly Gaussian, independent features
/// under the isotropic Gaussian measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBasis {
    dim: usize,
}

impl LinearBasis {
    pub const NAME: &'static str = "linear_gaussian";

    pub fn new(dim: usize) -> Self {
        LinearBasis { dim }
    }
}

impl Basis for LinearBasis {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn input_dim(&self) -> usize {
        self.dim
    }

    fn max_mode(&self) -> usize {
        self.dim
    }

    fn eval(&self, mode: usize, x: &[f64]) -> f64 {
        x[mode - 1]
    }

    fn eval_modes(&self, modes: &[usize], x: &[f64], out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(modes) {
            *o = x[k - 1];
        }
    }
}

type ModeFn = dyn Fn(usize, &[f64]) -> f64 + Send + Sync;

/// A user-supplied basis backed by a closure.
#[derive(Clone)]
pub struct FnBasis {
    name: String,
    input_dim: usize,
    max_mode: usize,
    f: Arc<ModeFn>,
}

impl FnBasis {
    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        max_mode: usize,
        f: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FnBasis {
            name: name.into(),
            input_dim,
            max_mode,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnBasis")
            .field("name", &self.name)
            .field("input_dim", &self.input_dim)
            .field("max_mode", &self.max_mode)
            .finish()
    }
}

impl Basis for FnBasis {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn max_mode(&self) -> usize {
        self.max_mode
    }

    fn eval(&self, mode: usize, x: &[f64]) -> f64 {
        (self.f)(mode, x)
    }
}

/// Largest entrywise deviation of a Gram matrix from the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalityReport {
    pub max_deviation: f64,
    /// The `(k, q)` pair attaining the maximum.
    pub worst_pair: (usize, usize),
    pub within_tolerance: bool,
}

/// Computes `G_kq = ∫ φ_k φ_q dμ` for `k, q ≤ kmax` and compares it to the identity.
pub fn check_orthonormality(
    basis: &dyn Basis,
    measure: &DataMeasure,
    kmax: usize,
    tol: f64,
) -> Result<OrthonormalityReport> {
    if kmax > basis.max_mode() {
        return Err(Error::ModeOutOfRange {
            mode: kmax,
            max_mode: basis.max_mode(),
        });
    }
    let grid = measure.grid()?;
    let modes: Vec<usize> = (1..=kmax).collect();
    let mut gram = vec![0.0; kmax * kmax];
    let mut vals = vec![0.0; kmax];
    for (x, &w) in grid.points.iter().zip(&grid.weights) {
        basis.eval_modes(&modes, x, &mut vals);
        for a in 0..kmax {
            for b in a..kmax {
                gram[a * kmax + b] += w * vals[a] * vals[b];
            }
        }
    }
    let mut report = OrthonormalityReport {
        max_deviation: 0.0,
        worst_pair: (1, 1),
        within_tolerance: true,
    };
    for a in 0..kmax {
        for b in a..kmax {
            let target = if a == b { 1.0 } else { 0.0 };
            let dev = (gram[a * kmax + b] - target).abs();
            if dev > report.max_deviation {
                report.max_deviation = dev;
                report.worst_pair = (a + 1, b + 1);
            }
        }
    }
    report.within_tolerance = report.max_deviation <= tol;
    Ok(report)
}
