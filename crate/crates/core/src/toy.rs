//! The rank-2 Hermite toy model learning `He₅`.
//!
//! The kernel is `K(x, y) = λ₁ x y + λ₂ He₂(x) He₂(y)` with the unnormalized
//! probabilists' `He₂(x) = x² − 1`. Against the orthonormal basis
//! `he_n = He_n/√n!` this is the spectrum `λ̃₁ = λ₁`, `λ̃₂ = 2λ₂`; all
//! user-facing parameters are the unnormalized `λ₁, λ₂`.
//!
//! The target `He₅` has no overlap with either kernel mode, so without
//! non-Gaussian effects the average predictor vanishes. Integrating out the
//! `He₂` mode reweights the loss by `1 − (λ₂/σ²) He₂(x)²`, which couples
//! `x` to `He₅` through `∫ x He₅ He₂² dμ = 120` and produces a small
//! negative coefficient on `x`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::ek::EKParams;
use crate::error::{Error, Result};
use crate::flow::{run_weighted_flow, FlowSettings, StopRule, WeightedFlowOptions};
use crate::gp::{dataset_average_coefficients, AveragingOptions, DatasetSize, Ridge, Solver};
use crate::rng::derive_seed;
use crate::spectral::{
    hermite_orthonormal, hermite_probabilist, DataMeasure, HermiteBasis, KernelFn, Mode,
    Points, QuadratureGrid, Spectrum,
};

/// How the paper-normalized `λ₂` maps onto the orthonormal `he₂` eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda2Convention {
    /// `λ̃₂ = 2λ₂`: the operator eigenvalue of `λ₂ He₂ ⊗ He₂`.
    #[default]
    Operator,
    /// `λ̃₂ = λ₂`, kept only as an alternative hypothesis to report.
    Literal,
}

impl Lambda2Convention {
    pub fn lambda2_tilde(self, lambda2: f64) -> f64 {
        match self {
            Lambda2Convention::Operator => 2.0 * lambda2,
            Lambda2Convention::Literal => lambda2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Lambda2Convention::Operator => "operator",
            Lambda2Convention::Literal => "literal",
        }
    }
}

impl std::str::FromStr for Lambda2Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "operator" => Ok(Lambda2Convention::Operator),
            "literal" => Ok(Lambda2Convention::Literal),
            other => Err(Error::invalid(
                "convention",
                format!("expected `operator` or `literal`, got `{other}`"),
            )),
        }
    }
}

/// Dataset sizes for the toy experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToySize {
    /// Exactly `n` points per trial, with `η = n` in the theory.
    #[default]
    Fixed,
    /// `Poisson(η)` points per trial.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub sigma2: f64,
    pub eta: f64,
    pub n: usize,
    pub trials: u64,
    pub n_test: usize,
    pub seed: u64,
    pub size: ToySize,
    pub observation_noise: bool,
    pub convention: Lambda2Convention,
    pub quadrature_order: usize,
}

impl ToyConfig {
    /// `λ₂ = 0.1`, `σ² = 400`, `n = η = 100`, `n_test = 1000`.
    pub fn paper(lambda1: f64) -> Self {
        ToyConfig {
            lambda1,
            lambda2: 0.1,
            sigma2: 400.0,
            eta: 100.0,
            n: 100,
            trials: 20_000,
            n_test: 1000,
            seed: 0,
            size: ToySize::Fixed,
            observation_noise: false,
            convention: Lambda2Convention::Operator,
            quadrature_order: crate::spectral::DEFAULT_QUADRATURE_ORDER,
        }
    }

    /// The `η` entering the theory formulas.
    pub fn theory_eta(&self) -> f64 {
        match self.size {
            ToySize::Fixed => self.n as f64,
            ToySize::Poisson => self.eta,
        }
    }

    /// Checks preconditions and returns regime warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let pos = |v: f64, name: &'static str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be positive and finite"))
            }
        };
        pos(self.lambda1, "lambda1")?;
        pos(self.sigma2, "sigma2")?;
        if !(self.lambda2 >= 0.0) || !self.lambda2.is_finite() {
            return Err(Error::invalid("lambda2", "must be non-negative and finite"));
        }
        if self.size == ToySize::Poisson {
            pos(self.eta, "eta")?;
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        if self.n_test == 0 {
            return Err(Error::invalid("n_test", "must be positive"));
        }
        if self.quadrature_order < 8 {
            return Err(Error::invalid("quadrature_order", "must be at least 8 to integrate He5 products exactly"));
        }
        let mut warnings = Vec::new();
        let eta = self.theory_eta();
        if self.lambda2 * eta / self.sigma2 >= 1.0 {
            warnings.push(format!(
                "lambda2*eta/sigma2 = {:.4} >= 1: the He2 mode is learnable, outside the toy regime",
                self.lambda2 * eta / self.sigma2
            ));
        }
        if self.lambda2 / self.sigma2 > 0.05 {
            warnings.push(format!(
                "lambda2/sigma2 = {:.4} > 0.05: the weight expansion is not small",
                self.lambda2 / self.sigma2
            ));
        }
        if self.trials < 100 {
            warnings.push(format!("trials = {} < 100: standard errors are unreliable", self.trials));
        }
        Ok(warnings)
    }

    pub fn measure(&self) -> Result<DataMeasure> {
        DataMeasure::standard_normal_with_order(self.quadrature_order)
    }
}

/// `λ₁ x y + λ₂ He₂(x) He₂(y)` on the orthonormal Hermite basis.
///
/// With `λ₂ = 0` the kernel is rank one.
pub fn toy_kernel(lambda1: f64, lambda2: f64) -> Result<KernelFn> {
    toy_kernel_with(lambda1, lambda2, Lambda2Convention::Operator)
}

pub fn toy_kernel_with(lambda1: f64, lambda2: f64, convention: Lambda2Convention) -> Result<KernelFn> {
    if !(lambda1 > 0.0) {
        return Err(Error::invalid("lambda1", "must be positive"));
    }
    if !(lambda2 >= 0.0) {
        return Err(Error::invalid("lambda2", "must be non-negative"));
    }
    let mut modes = vec![Mode { id: 1, lambda: lambda1 }];
    if lambda2 > 0.0 {
        modes.push(Mode {
            id: 2,
            lambda: convention.lambda2_tilde(lambda2),
        });
    }
    Ok(KernelFn::new(Spectrum::sorted(modes, Arc::new(HermiteBasis::new(2)))?))
}

/// The two overlap integrals behind the toy saddle point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyOverlaps {
    /// `∫ x² He₂² dμ` (= 10).
    pub x2_he2sq: f64,
    /// `∫ x He₅ He₂² dμ` (= 120).
    pub x_he5_he2sq: f64,
}

pub fn toy_overlaps(measure: &DataMeasure) -> Result<ToyOverlaps> {
    let he2 = |x: f64| hermite_probabilist(2, x);
    Ok(ToyOverlaps {
        x2_he2sq: crate::spectral::quadrature_integral(|x| x * x * he2(x).powi(2), measure)?,
        x_he5_he2sq: crate::spectral::quadrature_integral(
            |x| x * hermite_probabilist(5, x) * he2(x).powi(2),
            measure,
        )?,
    })
}

/// `−(λ₁/(λ₁ + σ²/η)) · 120 λ₂/σ²`, with 120 from quadrature.
pub fn toy_theory_f1_leading(config: &ToyConfig) -> Result<f64> {
    let o = toy_overlaps(&config.measure()?)?;
    let t = config.sigma2 / config.theory_eta();
    // `+ 0.0` turns the λ₂ = 0 result into a positive zero.
    Ok(-(config.lambda1 / (config.lambda1 + t)) * o.x_he5_he2sq * config.lambda2 / config.sigma2 + 0.0)
}

/// Exact extremum of the weighted quadratic action in `f₁`:
/// `f₁ = −120(λ₂/σ²)λ₁ / (λ₁(1 − 10λ₂/σ²) + σ²/η)`.
pub fn toy_theory_f1_exact_saddle(config: &ToyConfig) -> Result<f64> {
    let o = toy_overlaps(&config.measure()?)?;
    let r = config.lambda2 / config.sigma2;
    let denom = config.lambda1 * (1.0 - o.x2_he2sq * r) + config.sigma2 / config.theory_eta();
    if !(denom > 0.0) {
        return Err(Error::PerturbativeBreakdown(format!(
            "saddle denominator {denom:e} is not positive; the loss weight is too negative"
        )));
    }
    Ok(-o.x_he5_he2sq * r * config.lambda1 / denom + 0.0)
}

/// `1 − (λ₂/σ²) He₂(x)²`.
pub fn toy_weight(lambda2: f64, sigma2: f64, x: f64) -> f64 {
    1.0 - (lambda2 / sigma2) * hermite_probabilist(2, x).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyResult {
    pub config: ToyConfig,
    /// Trial-averaged predictor projected on `φ₁ = x` by quadrature.
    pub f1_experiment: f64,
    pub f1_stderr: f64,
    /// The same projection estimated on the fixed test sample.
    pub f1_test_set: f64,
    pub f1_test_set_stderr: f64,
    pub f1_theory_leading: f64,
    /// `None` when the saddle denominator is not positive.
    pub f1_theory_exact_saddle: Option<f64>,
    /// `(x, 1 − (λ₂/σ²)He₂(x)²)` on a uniform plotting grid.
    pub weight_profile: Vec<(f64, f64)>,
    pub overlaps: ToyOverlaps,
    pub warnings: Vec<String>,
}

impl ToyResult {
    /// CSV `quantity,value,stderr`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("quantity,value,stderr\n");
        let _ = writeln!(out, "f1_experiment,{:e},{:e}", self.f1_experiment, self.f1_stderr);
        let _ = writeln!(out, "f1_theory_leading,{:e},0e0", self.f1_theory_leading);
        match self.f1_theory_exact_saddle {
            Some(v) => {
                let _ = writeln!(out, "f1_theory_exact_saddle,{v:e},0e0");
            }
            None => out.push_str("f1_theory_exact_saddle,NaN,0e0\n"),
        }
        out
    }

    /// CSV `x,w` of the weight profile.
    pub fn weight_csv(&self) -> String {
        let mut out = String::from("x,w\n");
        for (x, w) in &self.weight_profile {
            let _ = writeln!(out, "{x:e},{w:e}");
        }
        out
    }

    /// Run metadata and secondary estimates as `key = value` lines.
    pub fn sidecar(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "lambda1 = {:e}", c.lambda1);
        let _ = writeln!(out, "lambda2 = {:e}", c.lambda2);
        let _ = writeln!(out, "lambda2_tilde = {:e}", c.convention.lambda2_tilde(c.lambda2));
        let _ = writeln!(out, "convention = {}", c.convention.as_str());
        let _ = writeln!(out, "sigma2 = {:e}", c.sigma2);
        let _ = writeln!(out, "n = {}", c.n);
        let _ = writeln!(out, "eta = {:e}", c.theory_eta());
        let _ = writeln!(
            out,
            "dataset_size = {}",
            match c.size {
                ToySize::Fixed => "fixed-n (eta = n)",
                ToySize::Poisson => "poisson",
            }
        );
        let _ = writeln!(out, "trials = {}", c.trials);
        let _ = writeln!(out, "n_test = {}", c.n_test);
        let _ = writeln!(out, "seed = {}", c.seed);
        let _ = writeln!(out, "observation_noise = {}", c.observation_noise);
        let _ = writeln!(out, "f1_test_set = {:e}", self.f1_test_set);
        let _ = writeln!(out, "f1_test_set_stderr = {:e}", self.f1_test_set_stderr);
        let _ = writeln!(out, "overlap_x2_he2sq = {:e}", self.overlaps.x2_he2sq);
        let _ = writeln!(out, "overlap_x_he5_he2sq = {:e}", self.overlaps.x_he5_he2sq);
        for w in &self.warnings {
            let _ = writeln!(out, "warning = {w}");
        }
        out
    }
}

fn weight_profile(lambda2: f64, sigma2: f64) -> Vec<(f64, f64)> {
    (0..=200)
        .map(|i| {
            let x = -5.0 + 0.05 * i as f64;
            (x, toy_weight(lambda2, sigma2, x))
        })
        .collect()
}

/// Monte Carlo over dataset draws: regress `He₅` with the toy kernel and
/// average the predictor's coefficient on `x`.
pub fn run_toy_experiment(config: &ToyConfig) -> Result<ToyResult> {
    let warnings = config.validate()?;
    let measure = config.measure()?;
    let kernel = toy_kernel_with(config.lambda1, config.lambda2, config.convention)?;
    let target = |x: &[f64]| hermite_probabilist(5, x[0]);
    let options = AveragingOptions {
        size: match config.size {
            ToySize::Fixed => DatasetSize::Fixed(config.n),
            ToySize::Poisson => DatasetSize::Poisson(config.eta),
        },
        observation_noise: config.observation_noise,
        solver: Solver::Auto,
    };
    let coef = dataset_average_coefficients(
        &kernel,
        &target,
        &measure,
        &Ridge::Uniform(config.sigma2),
        config.trials,
        derive_seed(config.seed, "toy/trials"),
        &options,
    )?;

    // Quadrature projection of the averaged predictor Σ c̄_k φ_k onto φ₁,
    // with its standard error from the coefficient covariance.
    let basis = kernel.spectrum().basis();
    let ids = kernel.spectrum().ids();
    let proj: Vec<f64> = ids
        .iter()
        .map(|&k| crate::gp::project_onto_mode(|x| basis.eval(k, x), basis.as_ref(), 1, &measure))
        .collect::<Result<_>>()?;
    let (f1_experiment, f1_stderr) = linear_estimate(&coef.stats, &proj);

    let mut rng = crate::rng::trial_rng(derive_seed(config.seed, "toy/test-grid"), 0);
    let test = measure.sample(&mut rng, config.n_test);
    let phi = kernel.features(&test);
    let g: Vec<f64> = (0..ids.len())
        .map(|k| (0..test.len()).map(|i| phi[(i, k)] * test.get(i)[0]).sum::<f64>() / test.len() as f64)
        .collect();
    let (f1_test_set, f1_test_set_stderr) = linear_estimate(&coef.stats, &g);

    Ok(ToyResult {
        config: *config,
        f1_experiment,
        f1_stderr,
        f1_test_set,
        f1_test_set_stderr,
        f1_theory_leading: toy_theory_f1_leading(config)?,
        f1_theory_exact_saddle: match toy_theory_f1_exact_saddle(config) {
            Ok(v) => Some(v),
            Err(Error::PerturbativeBreakdown(_)) => None,
            Err(e) => return Err(e),
        },
        weight_profile: weight_profile(config.lambda2, config.sigma2),
        overlaps: toy_overlaps(&measure)?,
        warnings,
    })
}

/// Mean and standard error of `gᵀ c` over trials.
fn linear_estimate(stats: &crate::stats::VecStats, g: &[f64]) -> (f64, f64) {
    let d = g.len();
    let mean = stats.mean().iter().zip(g).map(|(a, b)| a * b).sum();
    let cov = stats.covariance();
    let mut var = 0.0;
    for a in 0..d {
        for b in 0..d {
            var += g[a] * cov[a * d + b] * g[b];
        }
    }
    (mean, (var.max(0.0) / stats.count().max(1) as f64).sqrt())
}

/// The swept parameter in a toy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda2,
    Lambda1,
    N,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Lambda2 => "lambda2",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::N => "n",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lambda2" => Ok(SweepParam::Lambda2),
            "lambda1" => Ok(SweepParam::Lambda1),
            "n" => Ok(SweepParam::N),
            other => Err(Error::invalid("sweep", format!("cannot sweep `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySweep {
    pub param: SweepParam,
    pub points: Vec<(f64, ToyResult)>,
}

impl ToySweep {
    /// Figure-ready CSV `<param>,f1_exp,f1_stderr,f1_theory` with the exact saddle as theory.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},f1_exp,f1_stderr,f1_theory\n", self.param.as_str());
        for (v, r) in &self.points {
            let theory = r.f1_theory_exact_saddle.map_or("NaN".to_string(), |t| format!("{t:e}"));
            let _ = writeln!(out, "{v:e},{:e},{:e},{theory}", r.f1_experiment, r.f1_stderr);
        }
        out
    }
}

/// Runs the experiment at each value of `param`. Every point reuses the
/// base seed, so neighbouring points share dataset draws.
pub fn run_toy_sweep(base: &ToyConfig, param: SweepParam, values: &[f64]) -> Result<ToySweep> {
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = *base;
        match param {
            SweepParam::Lambda2 => c.lambda2 = v,
            SweepParam::Lambda1 => c.lambda1 = v,
            SweepParam::N => {
                if !(v >= 1.0) || v.fract() != 0.0 {
                    return Err(Error::invalid("n", format!("sweep value {v} is not a positive integer")));
                }
                c.n = v as usize;
                if c.size == ToySize::Poisson {
                    c.eta = v;
                }
            }
        }
        points.push((v, run_toy_experiment(&c)?));
    }
    Ok(ToySweep { param, points })
}

/// Solution of the weighted quadratic saddle for the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEkPrediction {
    /// Coefficients in spectrum order.
    pub coefficients: Vec<f64>,
    /// The weight is not strictly positive somewhere on the grid.
    pub nonpositive_weight: bool,
}

/// Solves `M f = b` with `M_kq = δ_kq/λ_k + (η/σ²)∫φ_kφ_q W dμ` and
/// `b_k = (η/σ²)∫φ_k y W dμ`, integrating over `grid`.
///
/// `weight` holds `W` at the grid nodes.
pub fn weighted_ek_predictor(
    spectrum: &Spectrum,
    target: impl Fn(&[f64]) -> f64,
    weight: &[f64],
    params: &EKParams,
    grid: &QuadratureGrid,
) -> Result<WeightedEkPrediction> {
    if weight.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: weight.len(),
        });
    }
    let basis = spectrum.basis();
    let ids = spectrum.ids();
    let m = ids.len();
    let scale = params.eta / params.sigma2;
    let mut mat = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut phi = vec![0.0; m];
    for ((x, w), wt) in grid.points.iter().zip(&grid.weights).zip(weight) {
        basis.eval_modes(&ids, x, &mut phi);
        let y = target(x);
        for a in 0..m {
            rhs[a] += scale * w * wt * phi[a] * y;
            for b in 0..m {
                mat[(a, b)] += scale * w * wt * phi[a] * phi[b];
            }
        }
    }
    for (k, mode) in spectrum.modes().iter().enumerate() {
        mat[(k, k)] += 1.0 / mode.lambda;
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("weighted saddle matrix".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("weighted saddle matrix".into()));
    }
    Ok(WeightedEkPrediction {
        coefficients: sol.iter().copied().collect(),
        nonpositive_weight: weight.iter().any(|w| !(*w > 0.0)),
    })
}

/// The toy weight and the perturbative flow weight, each projected on `he₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightComparison {
    /// `∫ (W_flow − 1) he₂ dμ`.
    pub flow_he2: f64,
    /// `∫ (W_toy − 1) he₂ dμ`.
    pub toy_he2: f64,
    /// `flow_he2 / toy_he2`.
    pub ratio: f64,
    /// `∫ (W_flow − 1) he₄ dμ`, zero for a weight linear in `He₂`.
    pub flow_he4: f64,
    /// `∫ (W_toy − 1) he₄ dμ` (= −√24·λ₂/σ²); this is the part that couples `x` to `He₅`.
    pub toy_he4: f64,
    /// Quadrature mean of the toy weight, which is not normalized.
    pub toy_mean: f64,
}

impl WeightComparison {
    pub fn to_csv(&self) -> String {
        format!(
            "quantity,value\nflow_he2,{:e}\ntoy_he2,{:e}\nratio,{:e}\nflow_he4,{:e}\ntoy_he4,{:e}\ntoy_mean,{:e}\n",
            self.flow_he2, self.toy_he2, self.ratio, self.flow_he4, self.toy_he4, self.toy_mean
        )
    }
}

/// Runs the weighted flow on the toy spectrum down to `κ = 1` and compares
/// its weight with `1 − (λ₂/σ²)He₂²`.
pub fn compare_weights(config: &ToyConfig) -> Result<WeightComparison> {
    config.validate()?;
    if config.lambda2 == 0.0 {
        return Err(Error::invalid("lambda2", "comparison needs a non-zero He2 mode"));
    }
    let measure = config.measure()?;
    let grid = measure.grid()?;
    let kernel = toy_kernel_with(config.lambda1, config.lambda2, config.convention)?;
    let settings = FlowSettings {
        epsilon: 0.5,
        stop_rule: StopRule::Count(1),
        ..FlowSettings::default()
    };
    let run = run_weighted_flow(
        kernel.spectrum(),
        config.sigma2,
        config.theory_eta(),
        &settings,
        &measure,
        &WeightedFlowOptions::default(),
    )?;
    let flow_w = run.run.theory.weight.values();
    let toy_w: Vec<f64> = grid.points.iter().map(|x| toy_weight(config.lambda2, config.sigma2, x[0])).collect();
    let proj = |w: &[f64], n: usize| {
        let v: Vec<f64> = w
            .iter()
            .zip(grid.points.iter())
            .map(|(w, x)| (w - 1.0) * hermite_orthonormal(n, x[0]))
            .collect();
        grid.mean(&v)
    };
    let flow_he2 = proj(flow_w, 2);
    let toy_he2 = proj(&toy_w, 2);
    Ok(WeightComparison {
        flow_he2,
        toy_he2,
        ratio: flow_he2 / toy_he2,
        flow_he4: proj(flow_w, 4),
        toy_he4: proj(&toy_w, 4),
        toy_mean: grid.mean(&toy_w),
    })
}

/// Convenience: points drawn from N(0, 1) for a fixed test grid.
pub fn toy_test_points(config: &ToyConfig) -> Result<Points> {
    let measure = config.measure()?;
    let mut rng = crate::rng::trial_rng(derive_seed(config.seed, "toy/test-grid"), 0);
    Ok(measure.sample(&mut rng, config.n_test))
}
