//! Streaming mean/covariance accumulation with an order-fixed merge.

/// Running mean and covariance of fixed-length vectors (Welford / Chan).
#[derive(Debug, Clone, PartialEq)]
pub struct VecStats {
    count: u64,
    mean: Vec<f64>,
    /// Row-major `dim × dim` sum of centered outer products.
    m2: Vec<f64>,
}

impl VecStats {
    pub fn new(dim: usize) -> Self {
        VecStats {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let after = x[i] - self.mean[i];
            for j in 0..d {
                self.m2[i * d + j] += delta[j] * after;
            }
        }
    }

    /// Folds `other` into `self`. Deterministic for a fixed merge order.
    pub fn merge(&mut self, other: &VecStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..d {
            for j in 0..d {
                self.m2[i * d + j] += other.m2[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * nb / n;
        }
        self.count += other.count;
    }

    /// Unbiased sample covariance (zero for fewer than two samples).
    pub fn covariance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.m2.len()];
        }
        let denom = (self.count - 1) as f64;
        self.m2.iter().map(|v| v / denom).collect()
    }

    /// Standard error of each mean component.
    pub fn stderr(&self) -> Vec<f64> {
        let d = self.dim();
        let cov = self.covariance();
        let n = self.count.max(1) as f64;
        (0..d).map(|i| (cov[i * d + i].max(0.0) / n).sqrt()).collect()
    }
}
