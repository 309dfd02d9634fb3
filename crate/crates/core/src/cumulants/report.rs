use std::fmt::Write as _;

use super::ursell::{cumulant_from_moments, jackknife, DEFAULT_BLOCKS};
use super::FeatureSample;
use crate::error::Result;

/// Significance threshold, in standard errors.
const FLAG_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnGaussianity {
    pub k: usize,
    pub mean: f64,
    pub variance: f64,
    /// `κ₄ / κ₂²`; zero for a degenerate column.
    pub excess_kurtosis: f64,
    pub stderr: f64,
    pub non_gaussian: bool,
    /// The column has zero variance.
    pub degenerate: bool,
}

/// Fourth cumulant `U_{aabb}` between two distinct columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDependence {
    pub a: usize,
    pub b: usize,
    pub u_aabb: f64,
    pub stderr: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianityReport {
    pub columns: Vec<ColumnGaussianity>,
    pub pairs: Vec<PairDependence>,
    pub num_samples: usize,
}

impl GaussianityReport {
    /// CSV `k,mean,variance,excess_kurtosis,stderr,non_gaussian,degenerate`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean,variance,excess_kurtosis,stderr,non_gaussian,degenerate\n");
        for c in &self.columns {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{}",
                c.k, c.mean, c.variance, c.excess_kurtosis, c.stderr, c.non_gaussian, c.degenerate
            );
        }
        out
    }

    /// CSV `a,b,u_aabb,stderr,flagged`.
    pub fn pairs_csv(&self) -> String {
        let mut out = String::from("a,b,u_aabb,stderr,flagged\n");
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{:e},{:e},{}", p.a, p.b, p.u_aabb, p.stderr, p.flagged);
        }
        out
    }
}

fn excess_kurtosis(m: &[f64; 16]) -> f64 {
    // All four slots hold the same column, so m[1] = E[X] and m[3] = E[X²].
    let var = m[3] - m[1] * m[1];
    if var <= 0.0 {
        return 0.0;
    }
    cumulant_from_moments(m) / (var * var)
}

pub fn gaussianity_report(sample: &FeatureSample) -> Result<GaussianityReport> {
    let means = sample.column_means();
    let mut columns = Vec::with_capacity(sample.num_modes());
    for (&k, &mean) in sample.modes().iter().zip(&means) {
        let col = sample.column(k)?;
        let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        let scale = mean.abs().max(1.0);
        let degenerate = variance <= (1e-14 * scale).powi(2);
        if degenerate {
            columns.push(ColumnGaussianity {
                k,
                mean,
                variance,
                excess_kurtosis: 0.0,
                stderr: 0.0,
                non_gaussian: false,
                degenerate,
            });
            continue;
        }
        let est = jackknife(sample, [k; 4], DEFAULT_BLOCKS, excess_kurtosis)?;
        columns.push(ColumnGaussianity {
            k,
            mean,
            variance,
            excess_kurtosis: est.estimate,
            stderr: est.stderr,
            non_gaussian: est.estimate.abs() > FLAG_SIGMAS * est.stderr,
            degenerate,
        });
    }
    let mut pairs = Vec::new();
    let modes = sample.modes();
    for (i, &a) in modes.iter().enumerate() {
        for &b in &modes[i + 1..] {
            let est = jackknife(sample, [a, a, b, b], DEFAULT_BLOCKS, cumulant_from_moments)?;
            pairs.push(PairDependence {
                a,
                b,
                u_aabb: est.estimate,
                stderr: est.stderr,
                flagged: est.estimate.abs() > FLAG_SIGMAS * est.stderr,
            });
        }
    }
    Ok(GaussianityReport {
        columns,
        pairs,
        num_samples: sample.num_samples(),
    })
}
