use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::spectral::{Basis, DataMeasure, KernelFn, Points};

/// One quenched draw: inputs and target values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Points,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorPrediction {
    pub test_points: Points,
    pub mean: Vec<f64>,
    pub variance: Option<Vec<f64>>,
}

/// Observation-noise model for the likelihood.
#[derive(Clone, Copy)]
pub enum Ridge<'a> {
    Uniform(f64),
    /// Per-point variance `sigma2 / weight(x)`.
    Weighted {
        sigma2: f64,
        weight: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    },
}

impl Ridge<'_> {
    pub fn sigma2(&self) -> f64 {
        match self {
            Ridge::Uniform(s) => *s,
            Ridge::Weighted { sigma2, .. } => *sigma2,
        }
    }

    fn noise(&self, x: &Points) -> Result<Vec<f64>> {
        let s2 = self.sigma2();
        if !(s2 > 0.0) {
            return Err(Error::invalid("sigma2", "must be positive"));
        }
        match self {
            Ridge::Uniform(s) => Ok(vec![*s; x.len()]),
            Ridge::Weighted { sigma2, weight } => x
                .iter()
                .map(|p| {
                    let w = weight(p);
                    if w > 0.0 && w.is_finite() {
                        Ok(sigma2 / w)
                    } else {
                        Err(Error::PerturbativeBreakdown(format!(
                            "loss weight {w} at a training point is not positive"
                        )))
                    }
                })
                .collect(),
        }
    }
}

/// Which linear system computes the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// `[K(X,X) + N]^{-1} y`, an `n × n` factorization.
    Dual,
    /// `[Λ^{-1} + Φᵀ N^{-1} Φ]^{-1} Φᵀ N^{-1} y`, a `rank × rank` factorization.
    Primal,
    /// Primal when the kernel rank is below the dataset size.
    #[default]
    Auto,
}

/// The `n × n` Gram matrix `K(x_i, x_j)`.
pub fn kernel_matrix(kernel: &KernelFn, x: &Points) -> Result<DMatrix<f64>> {
    if x.is_empty() {
        return Err(Error::invalid("X", "kernel matrix needs at least one point"));
    }
    kernel.check_dim(x)?;
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(x.get(i), x.get(j));
            if !v.is_finite() {
                return Err(Error::NonFiniteKernel { row: i, col: j });
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

fn cross_kernel(kernel: &KernelFn, a: &Points, b: &Points) -> Result<DMatrix<f64>> {
    let mut k = DMatrix::zeros(a.len(), b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let v = kernel.eval(x, y);
            if !v.is_finite() {
                return Err(Error::NonFiniteKernel { row: i, col: j });
            }
            k[(i, j)] = v;
        }
    }
    Ok(k)
}

/// Posterior mean `K(x*, X)[K(X,X) + σ²I]^{-1} y`.
pub fn gp_posterior_mean(
    kernel: &KernelFn,
    dataset: &Dataset,
    sigma2: f64,
    test_points: &Points,
) -> Result<PosteriorPrediction> {
    gp_posterior(kernel, dataset, &Ridge::Uniform(sigma2), test_points, false)
}

/// Posterior mean and, optionally, the latent posterior variance.
pub fn gp_posterior(
    kernel: &KernelFn,
    dataset: &Dataset,
    ridge: &Ridge<'_>,
    test_points: &Points,
    with_variance: bool,
) -> Result<PosteriorPrediction> {
    let noise = ridge.noise(&dataset.x)?;
    kernel.check_dim(test_points)?;
    if dataset.is_empty() {
        let variance = with_variance
            .then(|| test_points.iter().map(|x| kernel.eval(x, x)).collect());
        return Ok(PosteriorPrediction {
            test_points: test_points.clone(),
            mean: vec![0.0; test_points.len()],
            variance,
        });
    }
    let mut a = kernel_matrix(kernel, &dataset.x)?;
    for (i, s) in noise.iter().enumerate() {
        a[(i, i)] += s;
    }
    let factor = SpdFactor::new(a)?;
    let alpha = factor.solve(&DVector::from_column_slice(&dataset.y));
    let k_star = cross_kernel(kernel, test_points, &dataset.x)?;
    let mean = (&k_star * &alpha).iter().copied().collect();
    let variance = if with_variance {
        let solved = factor.solve_matrix(&k_star.transpose());
        Some(
            test_points
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let reduction: f64 = k_star.row(i).iter().zip(solved.column(i).iter()).map(|(a, b)| a * b).sum();
                    (kernel.eval(x, x) - reduction).max(0.0)
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(PosteriorPrediction {
        test_points: test_points.clone(),
        mean,
        variance,
    })
}

/// Posterior mean expressed in the kernel's eigenbasis: the prediction is
/// `Σ_k c_k φ_k(x)` with `c` returned in spectrum order.
pub fn posterior_coefficients(
    kernel: &KernelFn,
    dataset: &Dataset,
    ridge: &Ridge<'_>,
    solver: Solver,
) -> Result<Vec<f64>> {
    let rank = kernel.rank();
    let noise = ridge.noise(&dataset.x)?;
    if dataset.is_empty() || rank == 0 {
        return Ok(vec![0.0; rank]);
    }
    kernel.check_dim(&dataset.x)?;
    let lambdas = kernel.spectrum().eigenvalues();
    let phi = kernel.features(&dataset.x);
    let n = dataset.len();
    let primal = match solver {
        Solver::Primal => true,
        Solver::Dual => false,
        Solver::Auto => rank < n,
    };
    let y = DVector::from_column_slice(&dataset.y);
    if primal {
        let mut scaled = phi.clone();
        for (i, s) in noise.iter().enumerate() {
            scaled.row_mut(i).scale_mut(1.0 / s);
        }
        let mut m = phi.transpose() * &scaled;
        for (k, l) in lambdas.iter().enumerate() {
            m[(k, k)] += 1.0 / l;
        }
        let rhs = scaled.transpose() * y;
        let factor = SpdFactor::new(m)?;
        Ok(factor.solve(&rhs).iter().copied().collect())
    } else {
        let mut scaled = phi.clone();
        for (k, l) in lambdas.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*l);
        }
        let mut a = &scaled * phi.transpose();
        for (i, s) in noise.iter().enumerate() {
            a[(i, i)] += s;
        }
        let alpha = SpdFactor::new(a)?.solve(&y);
        Ok((scaled.transpose() * alpha).iter().copied().collect())
    }
}

/// `∫ f(x) φ_k(x) dμ`.
pub fn project_onto_mode(
    f: impl Fn(&[f64]) -> f64,
    basis: &dyn Basis,
    k: usize,
    measure: &DataMeasure,
) -> Result<f64> {
    if k == 0 || k > basis.max_mode() {
        return Err(Error::ModeOutOfRange {
            mode: k,
            max_mode: basis.max_mode(),
        });
    }
    measure.integrate(|x| f(x) * basis.eval(k, x))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::spectral::{hermite_probabilist, FnBasis, HermiteBasis, Spectrum};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_kernel(lambda: f64) -> KernelFn {
        let basis = Arc::new(FnBasis::new("x", 1, 1, |_, x| x[0]));
        KernelFn::new(Spectrum::from_eigenvalues(&[lambda], basis).unwrap())
    }

    fn hermite_kernel(lambdas: &[f64]) -> KernelFn {
        let basis = Arc::new(HermiteBasis::new(lambdas.len()));
        KernelFn::new(Spectrum::from_eigenvalues(lambdas, basis).unwrap())
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
        let y = x.iter().map(|v| v.sin() + 0.3 * v * v).collect();
        Dataset::new(Points::from_scalars(x), y).unwrap()
    }

    #[test]
    fn rank_one_outer_product() {
        let k = kernel_matrix(&linear_kernel(1.0), &Points::from_scalars(vec![1.0, 2.0])).unwrap();
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }

    #[test]
    fn empty_kernel_matrix_rejected() {
        assert!(kernel_matrix(&linear_kernel(1.0), &Points::from_scalars(vec![])).is_err());
    }

    #[test]
    fn non_finite_entry_is_named() {
        let k = linear_kernel(1.0);
        let err = kernel_matrix(&k, &Points::from_scalars(vec![1.0, f64::INFINITY])).unwrap_err();
        assert_eq!(err, Error::NonFiniteKernel { row: 0, col: 1 });
    }

    #[test]
    fn empty_dataset_gives_prior_mean() {
        let k = hermite_kernel(&[1.0, 0.5]);
        let d = Dataset::new(Points::from_scalars(vec![]), vec![]).unwrap();
        let p = gp_posterior_mean(&k, &d, 1.0, &Points::from_scalars(vec![0.1, 2.0])).unwrap();
        assert_eq!(p.mean, vec![0.0, 0.0]);
    }

    #[test]
    fn infinite_ridge_decouples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = hermite_kernel(&[1.0, 0.5, 0.2]);
        let d = random_dataset(&mut rng, 6);
        let p = gp_posterior_mean(&k, &d, 1e12, &Points::from_scalars(vec![-1.0, 0.3, 1.7])).unwrap();
        assert!(p.mean.iter().all(|m| m.abs() < 1e-6));
    }

    #[test]
    fn single_point_closed_form() {
        let lambda = 0.7;
        let sigma2 = 0.3;
        let x1 = 1.3;
        let d = Dataset::new(Points::from_scalars(vec![x1]), vec![1.0]).unwrap();
        let tests = Points::from_scalars(vec![-2.0, 0.5, 3.0]);
        let p = gp_posterior_mean(&linear_kernel(lambda), &d, sigma2, &tests).unwrap();
        for (m, x) in p.mean.iter().zip(tests.iter()) {
            let want = lambda * x[0] * x1 / (lambda * x1 * x1 + sigma2);
            assert!((m - want).abs() < 1e-14);
        }
    }

    #[test]
    fn toy_kernel_at_origin() {
        let (l1, l2) = (0.8, 0.1);
        let k = hermite_kernel(&[l1, 2.0 * l2]);
        let km = kernel_matrix(&k, &Points::from_scalars(vec![0.0])).unwrap();
        // He_1(0) = 0, He_2(0)^2 = 1.
        assert!((km[(0, 0)] - l2).abs() < 1e-15);
    }

    #[test]
    fn linear_in_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = hermite_kernel(&[1.0, 0.4, 0.1, 0.05]);
        let d = random_dataset(&mut rng, 8);
        let y2: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = d.y.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let t = Points::from_scalars(vec![-1.1, 0.0, 0.9]);
        let a = gp_posterior_mean(&k, &d, 0.2, &t).unwrap();
        let b = gp_posterior_mean(&k, &Dataset::new(d.x.clone(), y2).unwrap(), 0.2, &t).unwrap();
        let c = gp_posterior_mean(&k, &Dataset::new(d.x.clone(), sum).unwrap(), 0.2, &t).unwrap();
        for i in 0..3 {
            assert!((a.mean[i] + b.mean[i] - c.mean[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolates_as_ridge_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = hermite_kernel(&[1.0, 0.8, 0.6, 0.4, 0.3, 0.2]);
        let d = random_dataset(&mut rng, 5);
        let p = gp_posterior_mean(&k, &d, 1e-10, &d.x).unwrap();
        for (m, y) in p.mean.iter().zip(&d.y) {
            assert!((m - y).abs() < 1e-6, "{m} vs {y}");
        }
    }

    #[test]
    fn primal_and_dual_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let k = hermite_kernel(&[1.0, 0.5, 0.25, 0.1]);
        for n in [1, 3, 10, 40] {
            let d = random_dataset(&mut rng, n);
            let p = posterior_coefficients(&k, &d, &Ridge::Uniform(0.3), Solver::Primal).unwrap();
            let q = posterior_coefficients(&k, &d, &Ridge::Uniform(0.3), Solver::Dual).unwrap();
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "n={n}: {a} vs {b}");
            }
            // Coefficients reproduce the pointwise posterior mean.
            let t = Points::from_scalars(vec![-0.7, 1.2]);
            let direct = gp_posterior_mean(&k, &d, 0.3, &t).unwrap();
            for (i, x) in t.iter().enumerate() {
                let via: f64 = (1..=4).map(|m| p[m - 1] * k.spectrum().basis().eval(m, x)).sum();
                assert!((via - direct.mean[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn weighted_ridge_matches_heteroscedastic_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = hermite_kernel(&[1.0, 0.5]);
        let d = random_dataset(&mut rng, 12);
        let w = |x: &[f64]| 1.0 + 0.2 * x[0].tanh();
        let ridge = Ridge::Weighted { sigma2: 0.5, weight: &w };
        let p = posterior_coefficients(&k, &d, &ridge, Solver::Primal).unwrap();
        let q = posterior_coefficients(&k, &d, &ridge, Solver::Dual).unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-10);
        }
        let bad = |_: &[f64]| -1.0;
        let ridge = Ridge::Weighted { sigma2: 0.5, weight: &bad };
        assert!(matches!(
            posterior_coefficients(&k, &d, &ridge, Solver::Auto),
            Err(Error::PerturbativeBreakdown(_))
        ));
    }

    #[test]
    fn posterior_variance_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let k = hermite_kernel(&[1.0, 0.5, 0.2]);
        let d = random_dataset(&mut rng, 7);
        let t = Points::from_scalars(vec![-1.0, 0.0, 2.0]);
        let p = gp_posterior(&k, &d, &Ridge::Uniform(0.1), &t, true).unwrap();
        for (v, x) in p.variance.unwrap().iter().zip(t.iter()) {
            assert!(*v >= 0.0 && *v <= k.eval(x, x) + 1e-12);
        }
    }

    #[test]
    fn projections() {
        let mu = DataMeasure::standard_normal();
        let basis = HermiteBasis::new(6);
        for k in 1..=6 {
            let v = project_onto_mode(|x| basis.eval(3, x), &basis, k, &mu).unwrap();
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-8);
        }
        let f = |x: &[f64]| 2.0 * basis.eval(1, x) + 5.0 * basis.eval(2, x);
        assert!((project_onto_mode(f, &basis, 1, &mu).unwrap() - 2.0).abs() < 1e-10);
        assert!((project_onto_mode(f, &basis, 2, &mu).unwrap() - 5.0).abs() < 1e-10);
        let he5 = |x: &[f64]| hermite_probabilist(5, x[0]);
        assert!(project_onto_mode(he5, &basis, 1, &mu).unwrap().abs() < 1e-8);
    }

    #[test]
    fn posterior_stays_in_kernel_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let k = hermite_kernel(&[1.0, 0.5, 0.25]);
        let d = random_dataset(&mut rng, 15);
        let mu = DataMeasure::standard_normal();
        let basis = HermiteBasis::new(8);
        let f = |x: &[f64]| {
            let t = Points::from_scalars(vec![x[0]]);
            gp_posterior_mean(&k, &d, 0.4, &t).unwrap().mean[0]
        };
        for m in 4..=8 {
            assert!(project_onto_mode(f, &basis, m, &mu).unwrap().abs() < 1e-8);
        }
    }
}
