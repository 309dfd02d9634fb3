use std::fmt::Write as _;
use std::sync::Arc;

use super::basis::Basis;
use crate::error::{Error, Result};

/// One kernel eigenpair: the eigenfunction's index in the basis and its eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub id: usize,
    pub lambda: f64,
}

/// Kernel eigenvalues in descending order, paired with basis functions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    modes: Vec<Mode>,
    basis: Arc<dyn Basis>,
}

impl Spectrum {
    /// Validates an already ordered list of modes.
    pub fn new(modes: Vec<Mode>, basis: Arc<dyn Basis>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, m) in modes.iter().enumerate() {
            if !(m.lambda > 0.0) || !m.lambda.is_finite() {
                return Err(Error::invalid(
                    "eigenvalues",
                    format!("entry {} is {} (must be positive and finite)", i + 1, m.lambda),
                ));
            }
            if i > 0 && m.lambda > modes[i - 1].lambda {
                return Err(Error::invalid(
                    "eigenvalues",
                    format!("not descending at position {}", i + 1),
                ));
            }
            if m.id == 0 || m.id > basis.max_mode() {
                return Err(Error::ModeOutOfRange {
                    mode: m.id,
                    max_mode: basis.max_mode(),
                });
            }
            if !seen.insert(m.id) {
                return Err(Error::invalid("modes", format!("mode {} repeated", m.id)));
            }
        }
        Ok(Spectrum { modes, basis })
    }

    /// Eigenvalues for modes `1..=len`, which must already be descending.
    pub fn from_eigenvalues(lambdas: &[f64], basis: Arc<dyn Basis>) -> Result<Self> {
        let modes = lambdas
            .iter()
            .enumerate()
            .map(|(i, &lambda)| Mode { id: i + 1, lambda })
            .collect();
        Self::new(modes, basis)
    }

    /// Sorts descending; ties keep their input order.
    pub fn sorted(mut modes: Vec<Mode>, basis: Arc<dyn Basis>) -> Result<Self> {
        modes.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
        Self::new(modes, basis)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.id).collect()
    }

    pub fn basis(&self) -> &Arc<dyn Basis> {
        &self.basis
    }

    /// The leading `len` modes.
    pub fn prefix(&self, len: usize) -> Spectrum {
        Spectrum {
            modes: self.modes[..len.min(self.modes.len())].to_vec(),
            basis: Arc::clone(&self.basis),
        }
    }

    /// Sum of eigenvalues at positions `from..`.
    pub fn tail_sum(&self, from: usize) -> f64 {
        self.modes[from.min(self.modes.len())..]
            .iter()
            .map(|m| m.lambda)
            .sum()
    }

    /// CSV with header `k,lambda`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lambda\n");
        for m in &self.modes {
            let _ = writeln!(out, "{},{:e}", m.id, m.lambda);
        }
        out
    }

    pub fn from_csv(text: &str, basis: Arc<dyn Basis>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim() == "k,lambda" => {}
            Some((i, _)) => {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: "expected header `k,lambda`".into(),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "empty spectrum file".into(),
                })
            }
        }
        let mut modes = Vec::new();
        for (i, line) in lines {
            let parse_err = |reason: &str| Error::Parse {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (k, lambda) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected two columns"))?;
            let id = k.trim().parse().map_err(|_| parse_err("bad mode index"))?;
            let lambda = lambda
                .trim()
                .parse()
                .map_err(|_| parse_err("bad eigenvalue"))?;
            modes.push(Mode { id, lambda });
        }
        Self::new(modes, basis)
    }
}

/// `λ_k = lambda0 · k^{-exponent}` for `k = 1..=len`.
pub fn power_law_spectrum(
    lambda0: f64,
    exponent: f64,
    len: usize,
    basis: Arc<dyn Basis>,
) -> Result<Spectrum> {
    if !(lambda0 > 0.0) {
        return Err(Error::invalid("lambda0", "must be positive"));
    }
    if !(exponent > 1.0) {
        return Err(Error::invalid("exponent", "must exceed 1 for a summable tail"));
    }
    if len == 0 {
        return Err(Error::invalid("modes", "must be positive"));
    }
    if len > basis.max_mode() {
        return Err(Error::ModeOutOfRange {
            mode: len,
            max_mode: basis.max_mode(),
        });
    }
    let lambdas: Vec<f64> = (1..=len)
        .map(|k| lambda0 * (k as f64).powf(-exponent))
        .collect();
    Spectrum::from_eigenvalues(&lambdas, basis)
}
