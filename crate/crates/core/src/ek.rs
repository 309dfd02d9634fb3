//! Equivalent-kernel limit: per-mode average predictor, variance and learnability.
//!
//! In the limit `η, σ² → ∞` at fixed `η/σ²` the dataset-averaged theory
//! decouples mode by mode, and everything depends on `σ²/η` only.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EKParams {
    pub eta: f64,
    pub sigma2: f64,
}

impl EKParams {
    pub fn new(eta: f64, sigma2: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::invalid("eta", "must be positive and finite"));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid("sigma2", "must be positive and finite"));
        }
        Ok(EKParams { eta, sigma2 })
    }

    /// The learnability threshold `σ²/η`.
    pub fn threshold(&self) -> f64 {
        self.sigma2 / self.eta
    }
}

/// `λ_k y_k / (λ_k + σ²/η)`.
pub fn ek_mode_predictor(lambda_k: f64, y_k: f64, params: &EKParams) -> f64 {
    if lambda_k == 0.0 {
        return 0.0;
    }
    lambda_k * y_k / (lambda_k + params.threshold())
}

/// `1 / (λ_k^{-1} + η/σ²)`, zero for a frozen mode.
pub fn ek_mode_variance(lambda_k: f64, params: &EKParams) -> f64 {
    if lambda_k == 0.0 {
        return 0.0;
    }
    let t = params.threshold();
    t * lambda_k / (lambda_k + t)
}

/// How a mode sitting exactly on the threshold is classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `λ ≥ σ²/η` is learnable.
    #[default]
    Inclusive,
    /// `λ > σ²/η` is learnable.
    Strict,
}

impl Boundary {
    pub fn is_learnable(self, lambda: f64, threshold: f64) -> bool {
        match self {
            Boundary::Inclusive => lambda >= threshold,
            Boundary::Strict => lambda > threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLearnability {
    pub k: usize,
    pub lambda: f64,
    /// `λ_k η / σ²`.
    pub ratio: f64,
    pub learnable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnabilityReport {
    pub threshold: f64,
    pub boundary: Boundary,
    pub modes: Vec<ModeLearnability>,
}

impl LearnabilityReport {
    pub fn learnable_count(&self) -> usize {
        self.modes.iter().filter(|m| m.learnable).count()
    }

    /// CSV `k,lambda,ratio,learnable`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda,ratio,learnable\n");
        for m in &self.modes {
            let _ = writeln!(out, "{},{:e},{:e},{}", m.k, m.lambda, m.ratio, m.learnable);
        }
        out
    }
}

pub fn classify_learnability(
    spectrum: &Spectrum,
    params: &EKParams,
    boundary: Boundary,
) -> LearnabilityReport {
    let threshold = params.threshold();
    let modes = spectrum
        .modes()
        .iter()
        .map(|m| ModeLearnability {
            k: m.id,
            lambda: m.lambda,
            ratio: m.lambda / threshold,
            learnable: boundary.is_learnable(m.lambda, threshold),
        })
        .collect();
    LearnabilityReport {
        threshold,
        boundary,
        modes,
    }
}
