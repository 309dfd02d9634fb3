//! Exact cumulants of tabulated features, batched over index pairs.

use nalgebra::DMatrix;

use crate::spectral::{Basis, QuadratureGrid};

/// Feature values on a grid, `values[(g, c)] = φ_{modes[c]}(x_g)`.
#[derive(Debug, Clone)]
pub struct GridFeatures {
    modes: Vec<usize>,
    values: DMatrix<f64>,
    weights: Vec<f64>,
}

impl GridFeatures {
    pub fn new(basis: &dyn Basis, modes: &[usize], grid: &QuadratureGrid) -> Self {
        let g = grid.len();
        let m = modes.len();
        let mut values = DMatrix::zeros(g, m);
        let mut row = vec![0.0; m];
        for (i, x) in grid.points.iter().enumerate() {
            basis.eval_modes(modes, x, &mut row);
            for (c, v) in row.iter().enumerate() {
                values[(i, c)] = *v;
            }
        }
        GridFeatures {
            modes: modes.to_vec(),
            values,
            weights: grid.weights.clone(),
        }
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    fn probabilities(&self, density: Option<&[f64]>) -> Vec<f64> {
        let mut p: Vec<f64> = match density {
            Some(d) => self.weights.iter().zip(d).map(|(w, d)| w * d).collect(),
            None => self.weights.clone(),
        };
        let mass: f64 = p.iter().sum();
        for v in &mut p {
            *v /= mass;
        }
        p
    }

    /// Columns `cols` centred under `p`, plus the centred column `q`.
    fn centred(&self, cols: &[usize], q: usize, p: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let g = self.values.nrows();
        let mean = |c: usize| (0..g).map(|i| p[i] * self.values[(i, c)]).sum::<f64>();
        let mut centred = DMatrix::zeros(g, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            let mu = mean(c);
            for i in 0..g {
                centred[(i, j)] = self.values[(i, c)] - mu;
            }
        }
        let mq = mean(q);
        let cq = (0..g).map(|i| self.values[(i, q)] - mq).collect();
        (centred, cq)
    }

    /// `∫ φ_a φ_b dμ` under the grid weights, row-major over `cols`.
    pub fn gram(&self, cols: &[usize]) -> Vec<f64> {
        let m = cols.len();
        let mut out = vec![0.0; m * m];
        for (a, &ca) in cols.iter().enumerate() {
            for (b, &cb) in cols.iter().enumerate() {
                out[a * m + b] = (0..self.values.nrows())
                    .map(|i| self.weights[i] * self.values[(i, ca)] * self.values[(i, cb)])
                    .sum();
            }
        }
        out
    }

    /// `U_{abqq}` for `a, b` over the column positions `cols`, row-major.
    ///
    /// `density` optionally reweights the grid before normalizing to unit mass.
    pub fn pair_cumulants(&self, cols: &[usize], q: usize, density: Option<&[f64]>) -> Vec<f64> {
        let p = self.probabilities(density);
        let (c, cq) = self.centred(cols, q, &p);
        let mut weighted = c.clone();
        let mut plain = c.clone();
        for i in 0..c.nrows() {
            weighted.row_mut(i).scale_mut(p[i] * cq[i] * cq[i]);
            plain.row_mut(i).scale_mut(p[i]);
        }
        let s = c.transpose() * &weighted;
        let cov = c.transpose() * &plain;
        let cov_q: Vec<f64> = (0..cols.len())
            .map(|a| (0..c.nrows()).map(|i| plain[(i, a)] * cq[i]).sum())
            .collect();
        let var_q: f64 = (0..c.nrows()).map(|i| p[i] * cq[i] * cq[i]).sum();
        let m = cols.len();
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                out[a * m + b] = s[(a, b)] - cov[(a, b)] * var_q - 2.0 * cov_q[a] * cov_q[b];
            }
        }
        out
    }

    /// `U_{abcq}` for `a, b, c` over `cols`, row-major over `cols³`.
    pub fn triple_cumulants(&self, cols: &[usize], q: usize, density: Option<&[f64]>) -> Vec<f64> {
        let p = self.probabilities(density);
        let (c, cq) = self.centred(cols, q, &p);
        let m = cols.len();
        let g = c.nrows();
        let mut cov = vec![0.0; m * m];
        let mut cov_q = vec![0.0; m];
        for a in 0..m {
            cov_q[a] = (0..g).map(|i| p[i] * c[(i, a)] * cq[i]).sum();
            for b in 0..m {
                cov[a * m + b] = (0..g).map(|i| p[i] * c[(i, a)] * c[(i, b)]).sum();
            }
        }
        let mut out = vec![0.0; m * m * m];
        for a in 0..m {
            for b in a..m {
                for d in b..m {
                    let raw: f64 = (0..g).map(|i| p[i] * c[(i, a)] * c[(i, b)] * c[(i, d)] * cq[i]).sum();
                    let u = raw
                        - cov[a * m + b] * cov_q[d]
                        - cov[a * m + d] * cov_q[b]
                        - cov[b * m + d] * cov_q[a];
                    for (x, y, z) in [(a, b, d), (a, d, b), (b, a, d), (b, d, a), (d, a, b), (d, b, a)] {
                        out[(x * m + y) * m + z] = u;
                    }
                }
            }
        }
        out
    }
}
