use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::quadrature::GaussHermiteRule;
use crate::error::{Error, Result};

/// Default Gauss–Hermite order for the standard normal measure.
pub const DEFAULT_QUADRATURE_ORDER: usize = 128;

/// A row-major set of `len` points in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        Ok(Points { dim, data })
    }

    pub fn from_scalars(xs: Vec<f64>) -> Self {
        Points { dim: 1, data: xs }
    }

    pub fn empty(dim: usize) -> Self {
        Points {
            dim: dim.max(1),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    StandardNormal1D,
    /// Uniform over a fixed sample; integrals are sample averages.
    EmpiricalSample(Points),
    /// N(0, I_dim). Sampling only; integrals need a sample.
    IsotropicGaussian { dim: usize },
}

/// A probability measure over input space.
#[derive(Debug, Clone)]
pub struct DataMeasure {
    kind: MeasureKind,
    quadrature_order: usize,
    rule: Option<Arc<GaussHermiteRule>>,
}

/// Nodes and weights representing a measure for grid-valued functions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub points: Points,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weighted mean of grid values.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

impl DataMeasure {
    pub fn standard_normal() -> Self {
        Self::standard_normal_with_order(DEFAULT_QUADRATURE_ORDER)
            .expect("default order is valid")
    }

    pub fn standard_normal_with_order(order: usize) -> Result<Self> {
        let rule = GaussHermiteRule::new(order)?;
        Ok(DataMeasure {
            kind: MeasureKind::StandardNormal1D,
            quadrature_order: order,
            rule: Some(Arc::new(rule)),
        })
    }

    pub fn empirical(points: Points) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "empirical measure needs at least one point"));
        }
        let order = points.len();
        Ok(DataMeasure {
            kind: MeasureKind::EmpiricalSample(points),
            quadrature_order: order,
            rule: None,
        })
    }

    pub fn isotropic_gaussian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        Ok(DataMeasure {
            kind: MeasureKind::IsotropicGaussian { dim },
            quadrature_order: 0,
            rule: None,
        })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn quadrature_order(&self) -> usize {
        self.quadrature_order
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MeasureKind::StandardNormal1D => 1,
            MeasureKind::EmpiricalSample(p) => p.dim(),
            MeasureKind::IsotropicGaussian { dim } => *dim,
        }
    }

    pub fn rule(&self) -> Option<&GaussHermiteRule> {
        self.rule.as_deref()
    }

    /// Draws `n` i.i.d. points.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Points {
        match &self.kind {
            MeasureKind::StandardNormal1D => {
                Points::from_scalars((0..n).map(|_| rng.sample(StandardNormal)).collect())
            }
            MeasureKind::IsotropicGaussian { dim } => Points {
                dim: *dim,
                data: (0..n * dim).map(|_| rng.sample(StandardNormal)).collect(),
            },
            MeasureKind::EmpiricalSample(pool) => {
                let mut data = Vec::with_capacity(n * pool.dim());
                for _ in 0..n {
                    let i = rng.random_range(0..pool.len());
                    data.extend_from_slice(pool.get(i));
                }
                Points {
                    dim: pool.dim(),
                    data,
                }
            }
        }
    }

    /// `∫ f dμ` by Gauss–Hermite quadrature or by a sample average.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        match &self.kind {
            MeasureKind::StandardNormal1D => {
                let rule = self.rule.as_ref().expect("normal measure carries a rule");
                rule.integrate(|x| f(std::slice::from_ref(&x)))
            }
            MeasureKind::EmpiricalSample(pool) => {
                let mut acc = 0.0;
                for (index, x) in pool.iter().enumerate() {
                    let v = f(x);
                    if !v.is_finite() {
                        return Err(Error::NonFiniteIntegrand { index, x: x[0] });
                    }
                    acc += v;
                }
                Ok(acc / pool.len() as f64)
            }
            MeasureKind::IsotropicGaussian { .. } => Err(Error::UnsupportedMeasure(
                "isotropic Gaussian has no deterministic quadrature; integrate over an empirical sample",
            )),
        }
    }

    /// The grid on which weight functions are tabulated.
    pub fn grid(&self) -> Result<QuadratureGrid> {
        match &self.kind {
            MeasureKind::StandardNormal1D => {
                let rule = self.rule.as_ref().expect("normal measure carries a rule");
                Ok(QuadratureGrid {
                    points: Points::from_scalars(rule.nodes().to_vec()),
                    weights: rule.weights().to_vec(),
                })
            }
            MeasureKind::EmpiricalSample(pool) => Ok(QuadratureGrid {
                points: pool.clone(),
                weights: vec![1.0 / pool.len() as f64; pool.len()],
            }),
            MeasureKind::IsotropicGaussian { .. } => Err(Error::UnsupportedMeasure(
                "isotropic Gaussian has no deterministic grid",
            )),
        }
    }
}

/// `∫ f dμ` for a real function on a one-dimensional measure.
pub fn quadrature_integral(f: impl Fn(f64) -> f64, measure: &DataMeasure) -> Result<f64> {
    if measure.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: measure.dim(),
        });
    }
    measure.integrate(|x| f(x[0]))
}
