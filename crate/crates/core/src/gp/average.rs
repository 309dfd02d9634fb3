//! Monte Carlo quenched averages over random training sets.
//!
//! Trials are grouped into fixed-size chunks. Each chunk is reduced
//! sequentially and chunks are merged in index order, so the result is
//! bit-identical for any rayon pool size.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::regression::{posterior_coefficients, Dataset, Ridge, Solver};
use crate::error::{Error, Result};
use crate::rng::trial_rng;
use crate::spectral::{DataMeasure, KernelFn, Points};
use crate::stats::VecStats;

const CHUNK: u64 = 64;

/// How many points each trial draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatasetSize {
    /// `n ~ Poisson(eta)`; empty draws count as trials with the zero prior mean.
    Poisson(f64),
    Fixed(usize),
}

impl DatasetSize {
    /// Mean dataset size.
    pub fn eta(&self) -> f64 {
        match self {
            DatasetSize::Poisson(eta) => *eta,
            DatasetSize::Fixed(n) => *n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingOptions {
    pub size: DatasetSize,
    /// Add N(0, σ²) noise to training targets.
    pub observation_noise: bool,
    pub solver: Solver,
}

impl AveragingOptions {
    pub fn poisson(eta: f64) -> Self {
        AveragingOptions {
            size: DatasetSize::Poisson(eta),
            observation_noise: false,
            solver: Solver::Auto,
        }
    }

    pub fn fixed(n: usize) -> Self {
        AveragingOptions {
            size: DatasetSize::Fixed(n),
            observation_noise: false,
            solver: Solver::Auto,
        }
    }
}

/// Trial statistics of the posterior-mean coefficients in the kernel eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedCoefficients {
    /// Mode ids in spectrum order.
    pub modes: Vec<usize>,
    pub stats: VecStats,
    pub seed: u64,
}

impl AveragedCoefficients {
    pub fn mean(&self) -> &[f64] {
        self.stats.mean()
    }

    pub fn stderr(&self) -> Vec<f64> {
        self.stats.stderr()
    }

    pub fn trials(&self) -> u64 {
        self.stats.count()
    }

    /// Mean and standard error of `Σ_k c_k φ_k(x)` at each test point.
    pub fn evaluate(&self, kernel: &KernelFn, test_points: &Points) -> (Vec<f64>, Vec<f64>) {
        let phi = kernel.features(test_points);
        let cov = self.stats.covariance();
        let d = self.modes.len();
        let n = self.trials().max(1) as f64;
        let mean_c = self.mean();
        let mut mean = Vec::with_capacity(test_points.len());
        let mut stderr = Vec::with_capacity(test_points.len());
        for i in 0..test_points.len() {
            let row: Vec<f64> = (0..d).map(|k| phi[(i, k)]).collect();
            mean.push(row.iter().zip(mean_c).map(|(a, b)| a * b).sum());
            let mut var = 0.0;
            for a in 0..d {
                for b in 0..d {
                    var += row[a] * cov[a * d + b] * row[b];
                }
            }
            stderr.push((var.max(0.0) / n).sqrt());
        }
        (mean, stderr)
    }
}

/// Trial-averaged predictor on a set of test points.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPredictor {
    pub test_points: Points,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
    pub eta: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl AveragedPredictor {
    /// CSV `x,mean,stderr`; multi-dimensional points are written as `x1;x2;…`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,mean,stderr\n");
        for ((x, m), s) in self.test_points.iter().zip(&self.mean).zip(&self.stderr) {
            let coords: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{},{:e},{:e}", coords.join(";"), m, s);
        }
        out
    }

    /// Run metadata as `key = value` lines.
    pub fn sidecar(&self) -> String {
        format!(
            "seed = {}\ntrials = {}\neta = {:e}\nsigma2 = {:e}\n",
            self.seed, self.trials, self.eta, self.sigma2
        )
    }
}

fn draw_dataset(
    rng: &mut impl Rng,
    measure: &DataMeasure,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
    options: &AveragingOptions,
    sigma2: f64,
) -> Result<Dataset> {
    let n = match options.size {
        DatasetSize::Fixed(n) => n,
        DatasetSize::Poisson(eta) => {
            let dist = Poisson::new(eta).map_err(|e| Error::invalid("eta", e.to_string()))?;
            dist.sample(rng) as usize
        }
    };
    let x = measure.sample(rng, n);
    let mut y: Vec<f64> = x.iter().map(target).collect();
    if options.observation_noise {
        let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::invalid("sigma2", e.to_string()))?;
        for v in &mut y {
            *v += noise.sample(rng);
        }
    }
    Dataset::new(x, y)
}

fn validate(trials: u64, options: &AveragingOptions, sigma2: f64) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::invalid("sigma2", "must be positive"));
    }
    if let DatasetSize::Poisson(eta) = options.size {
        if !(eta > 0.0) {
            return Err(Error::invalid("eta", "must be positive"));
        }
    }
    Ok(())
}

/// Runs `trials` independent regressions and accumulates the posterior
/// coefficients. Trial `t` uses [`trial_rng`]`(seed, t)`.
pub fn dataset_average_coefficients(
    kernel: &KernelFn,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
    measure: &DataMeasure,
    ridge: &Ridge<'_>,
    trials: u64,
    seed: u64,
    options: &AveragingOptions,
) -> Result<AveragedCoefficients> {
    let sigma2 = ridge.sigma2();
    validate(trials, options, sigma2)?;
    let rank = kernel.rank();
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Result<VecStats>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stats = VecStats::new(rank);
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = trial_rng(seed, t);
                let run = draw_dataset(&mut rng, measure, target, options, sigma2)
                    .and_then(|d| posterior_coefficients(kernel, &d, ridge, options.solver));
                match run {
                    Ok(coef) => stats.push(&coef),
                    Err(e) => {
                        return Err(Error::Trial {
                            trial: t,
                            source: Box::new(e),
                        })
                    }
                }
            }
            Ok(stats)
        })
        .collect();
    let mut total = VecStats::new(rank);
    for p in partials {
        total.merge(&p?);
    }
    Ok(AveragedCoefficients {
        modes: kernel.spectrum().ids(),
        stats: total,
        seed,
    })
}

/// Dataset-averaged posterior mean at `test_points`, with standard errors.
#[allow(clippy::too_many_arguments)]
pub fn dataset_average_predictor(
    kernel: &KernelFn,
    target: &(dyn Fn(&[f64]) -> f64 + Sync),
    measure: &DataMeasure,
    sigma2: f64,
    trials: u64,
    test_points: &Points,
    seed: u64,
    options: &AveragingOptions,
) -> Result<AveragedPredictor> {
    let coef = dataset_average_coefficients(
        kernel,
        target,
        measure,
        &Ridge::Uniform(sigma2),
        trials,
        seed,
        options,
    )?;
    let (mean, stderr) = coef.evaluate(kernel, test_points);
    Ok(AveragedPredictor {
        test_points: test_points.clone(),
        mean,
        stderr,
        trials,
        eta: options.size.eta(),
        sigma2,
        seed,
    })
}
