//! Gauss–Hermite quadrature against the standard normal density.
//!
//! Nodes come from the Golub–Welsch eigenproblem of the probabilists'
//! Jacobi matrix, are symmetrized and then polished with Newton steps on
//! `he_n`. Weights are the Christoffel numbers `1 / sum_{k<n} he_k(x)^2`,
//! so they sum to one and integrate polynomials of degree `2n - 1` exactly.

use nalgebra::DMatrix;

use super::hermite::hermite_orthonormal_all;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("quadrature_order", "must be positive"));
        }
        let raw = jacobi_eigenvalues(order);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let mut buf = vec![0.0; order + 1];
        for i in 0..order / 2 {
            let guess = 0.5 * (raw[order - 1 - i].abs() + raw[i].abs());
            let x = newton_polish(order, guess, &mut buf);
            let w = christoffel(order, x, &mut buf);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            let mid = order / 2;
            nodes[mid] = 0.0;
            weights[mid] = christoffel(order, 0.0, &mut buf);
        }
        Ok(GaussHermiteRule { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ f dμ` for μ = N(0, 1). Fails on the first non-finite integrand value.
    ///
    /// Mirrored nodes are summed pairwise, so exactly odd integrands give 0.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let n = self.nodes.len();
        let eval = |index: usize| {
            let x = self.nodes[index];
            let v = f(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteIntegrand { index, x })
            }
        };
        let mut acc = 0.0;
        for i in (0..n / 2).rev() {
            let lo = eval(i)?;
            let hi = eval(n - 1 - i)?;
            acc += self.weights[i] * (hi + lo);
        }
        if n % 2 == 1 {
            acc += self.weights[n / 2] * eval(n / 2)?;
        }
        Ok(acc)
    }
}

fn jacobi_eigenvalues(order: usize) -> Vec<f64> {
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut eig: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

fn newton_polish(order: usize, mut x: f64, buf: &mut [f64]) -> f64 {
    let n = order as f64;
    for _ in 0..8 {
        hermite_orthonormal_all(x, &mut buf[..order + 1]);
        let p = buf[order];
        let dp = n.sqrt() * buf[order - 1];
        if dp == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn christoffel(order: usize, x: f64, buf: &mut [f64]) -> f64 {
    hermite_orthonormal_all(x, &mut buf[..order]);
    1.0 / buf[..order].iter().map(|v| v * v).sum::<f64>()
}
