//! Fourth-order joint cumulants (Ursell functions).
//!
//! The joint cumulant is assembled from raw moments over all 15 set
//! partitions of four slots, which removes the column means without a
//! separate centering pass:
//!
//! `κ(a,b,c,d) = Σ_π (-1)^{|π|-1} (|π|-1)! Π_{B∈π} E[Π_{i∈B} X_i]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use super::FeatureSample;
use crate::error::{Error, Result};
use crate::spectral::{Basis, QuadratureGrid};

/// Default number of jackknife blocks.
pub const DEFAULT_BLOCKS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrsellEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantEntry {
    pub estimate: f64,
    pub stderr: f64,
    pub method: Method,
}

/// Sorted 4-tuple key; the cumulant is symmetric under permutations.
pub fn canonical(idx: [usize; 4]) -> [usize; 4] {
    let mut k = idx;
    k.sort_unstable();
    k
}

/// Fourth cumulants keyed by canonically sorted mode tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CumulantTable {
    entries: BTreeMap<[usize; 4], CumulantEntry>,
    /// Samples behind MC entries (0 for quadrature-only tables).
    pub sample_size: usize,
    /// Feature means removed before estimation, keyed by mode.
    pub offsets: BTreeMap<usize, f64>,
}

impl CumulantTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, idx: [usize; 4], entry: CumulantEntry) {
        self.entries.insert(canonical(idx), entry);
    }

    pub fn get(&self, idx: [usize; 4]) -> Option<&CumulantEntry> {
        self.entries.get(&canonical(idx))
    }

    /// The estimate, or [`Error::MissingCumulant`].
    pub fn value(&self, idx: [usize; 4]) -> Result<f64> {
        self.get(idx)
            .map(|e| e.estimate)
            .ok_or(Error::MissingCumulant(canonical(idx)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize; 4], &CumulantEntry)> {
        self.entries.iter()
    }

    /// CSV `k1,k2,k3,k4,estimate,stderr,method`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k1,k2,k3,k4,estimate,stderr,method\n");
        for (k, e) in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{:e},{}",
                k[0],
                k[1],
                k[2],
                k[3],
                e.estimate,
                e.stderr,
                e.method.as_str()
            );
        }
        out
    }
}

/// All multisets of size four drawn from `modes`, sorted.
pub fn canonical_tuples(modes: &[usize]) -> Vec<[usize; 4]> {
    let mut m = modes.to_vec();
    m.sort_unstable();
    m.dedup();
    let n = m.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                for d in c..n {
                    out.push([m[a], m[b], m[c], m[d]]);
                }
            }
        }
    }
    out
}

type Partition = Vec<u8>;

/// The 15 set partitions of `{0,1,2,3}`, each block a bitmask.
fn partitions() -> &'static [Partition] {
    static P: OnceLock<Vec<Partition>> = OnceLock::new();
    P.get_or_init(|| {
        fn rec(i: usize, blocks: &mut Vec<u8>, out: &mut Vec<Partition>) {
            if i == 4 {
                out.push(blocks.clone());
                return;
            }
            for b in 0..blocks.len() {
                blocks[b] |= 1 << i;
                rec(i + 1, blocks, out);
                blocks[b] &= !(1 << i);
            }
            blocks.push(1 << i);
            rec(i + 1, blocks, out);
            blocks.pop();
        }
        let mut out = Vec::new();
        rec(0, &mut Vec::new(), &mut out);
        out
    })
}

/// Joint cumulant from raw subset moments `m[mask] = E[Π_{i∈mask} X_i]`.
pub(crate) fn cumulant_from_moments(m: &[f64; 16]) -> f64 {
    partitions()
        .iter()
        .map(|p| {
            let nb = p.len();
            let coef = if nb % 2 == 1 { 1.0 } else { -1.0 } * (1..nb).map(|j| j as f64).product::<f64>();
            coef * p.iter().map(|&mask| m[mask as usize]).product::<f64>()
        })
        .sum()
}

fn subset_products(v: &[f64; 4], out: &mut [f64; 16]) {
    out[0] = 1.0;
    for mask in 1..16usize {
        let low = mask & mask.wrapping_neg();
        let i = low.trailing_zeros() as usize;
        out[mask] = out[mask ^ low] * v[i];
    }
}

/// Fourth cumulant of four feature columns with a delete-a-block jackknife error.
pub fn ursell4(sample: &FeatureSample, idx: [usize; 4]) -> Result<UrsellEstimate> {
    ursell4_with_blocks(sample, idx, DEFAULT_BLOCKS)
}

pub fn ursell4_with_blocks(
    sample: &FeatureSample,
    idx: [usize; 4],
    blocks: usize,
) -> Result<UrsellEstimate> {
    jackknife(sample, idx, blocks, cumulant_from_moments)
}

/// Applies `stat` to the subset moments of four columns and estimates its
/// error by deleting one contiguous block of rows at a time.
pub(crate) fn jackknife(
    sample: &FeatureSample,
    idx: [usize; 4],
    blocks: usize,
    stat: impl Fn(&[f64; 16]) -> f64,
) -> Result<UrsellEstimate> {
    let cols = [
        sample.column_index(idx[0])?,
        sample.column_index(idx[1])?,
        sample.column_index(idx[2])?,
        sample.column_index(idx[3])?,
    ];
    let n = sample.num_samples();
    let blocks = blocks.clamp(2, n.max(2));
    let mut block_sums = vec![[0.0f64; 16]; blocks];
    let mut prod = [0.0; 16];
    for i in 0..n {
        let row = sample.row(i);
        let v = [row[cols[0]], row[cols[1]], row[cols[2]], row[cols[3]]];
        subset_products(&v, &mut prod);
        let b = i * blocks / n;
        for (s, p) in block_sums[b].iter_mut().zip(&prod) {
            *s += p;
        }
    }
    let mut total = [0.0f64; 16];
    for bs in &block_sums {
        for (t, s) in total.iter_mut().zip(bs) {
            *t += s;
        }
    }
    let moments = |sums: &[f64; 16], count: f64| {
        let mut m = [0.0; 16];
        for (mi, s) in m.iter_mut().zip(sums) {
            *mi = s / count;
        }
        m
    };
    let estimate = stat(&moments(&total, n as f64));
    let mut leave_out = Vec::with_capacity(blocks);
    for (b, bs) in block_sums.iter().enumerate() {
        let size = (b + 1) * n / blocks - b * n / blocks;
        if size == n || size == 0 {
            continue;
        }
        let mut rest = [0.0; 16];
        for ((r, t), s) in rest.iter_mut().zip(&total).zip(bs) {
            *r = t - s;
        }
        leave_out.push(stat(&moments(&rest, (n - size) as f64)));
    }
    let g = leave_out.len() as f64;
    let stderr = if leave_out.len() < 2 {
        f64::INFINITY
    } else {
        let mean = leave_out.iter().sum::<f64>() / g;
        ((g - 1.0) / g * leave_out.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(UrsellEstimate { estimate, stderr })
}

/// Exact fourth cumulant of basis features under a quadrature grid.
///
/// `density` optionally reweights the grid (it is renormalized to unit mass).
pub fn ursell4_on_grid(
    basis: &dyn Basis,
    grid: &QuadratureGrid,
    density: Option<&[f64]>,
    idx: [usize; 4],
) -> Result<f64> {
    for &k in &idx {
        if k == 0 || k > basis.max_mode() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                max_mode: basis.max_mode(),
            });
        }
    }
    let mut sums = [0.0; 16];
    let mut mass = 0.0;
    let mut prod = [0.0; 16];
    let mut v = [0.0; 4];
    for (i, (x, &w)) in grid.points.iter().zip(&grid.weights).enumerate() {
        let w = w * density.map_or(1.0, |d| d[i]);
        basis.eval_modes(&idx, x, &mut v);
        subset_products(&v, &mut prod);
        for (s, p) in sums.iter_mut().zip(&prod) {
            *s += w * p;
        }
        mass += w;
    }
    for s in &mut sums {
        *s /= mass;
    }
    Ok(cumulant_from_moments(&sums))
}

/// Quadrature cumulants for every canonical tuple over `modes`.
pub fn cumulant_table_quadrature(
    basis: &dyn Basis,
    grid: &QuadratureGrid,
    modes: &[usize],
) -> Result<CumulantTable> {
    let mut table = CumulantTable::new();
    for idx in canonical_tuples(modes) {
        let estimate = ursell4_on_grid(basis, grid, None, idx)?;
        table.insert(
            idx,
            CumulantEntry {
                estimate,
                stderr: 0.0,
                method: Method::Quadrature,
            },
        );
    }
    for &k in modes {
        let mean = grid
            .points
            .iter()
            .zip(&grid.weights)
            .map(|(x, w)| w * basis.eval(k, x))
            .sum();
        table.offsets.insert(k, mean);
    }
    Ok(table)
}

/// Monte Carlo cumulants for every canonical tuple over the sample's modes.
pub fn cumulant_table_mc(sample: &FeatureSample, blocks: usize) -> Result<CumulantTable> {
    let mut table = CumulantTable::new();
    for idx in canonical_tuples(sample.modes()) {
        let u = ursell4_with_blocks(sample, idx, blocks)?;
        table.insert(
            idx,
            CumulantEntry {
                estimate: u.estimate,
                stderr: u.stderr,
                method: Method::MonteCarlo,
            },
        );
    }
    table.sample_size = sample.num_samples();
    for (k, m) in sample.modes().iter().zip(sample.column_means()) {
        table.offsets.insert(*k, m);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulants::sample_features;
    use crate::spectral::{DataMeasure, FnBasis, HermiteBasis, LinearBasis};

    #[test]
    fn fifteen_partitions() {
        assert_eq!(partitions().len(), 15);
    }

    #[test]
    fn point_mass_has_no_cumulant() {
        let mut m = [0.0; 16];
        let v = [2.0, -1.0, 0.5, 3.0];
        subset_products(&v, &mut m);
        assert!(cumulant_from_moments(&m).abs() < 1e-12);
    }

    #[test]
    fn quadrature_value_for_x_and_he2() {
        let mu = DataMeasure::standard_normal();
        let grid = mu.grid().unwrap();
        let b = HermiteBasis::new(2);
        let u = ursell4_on_grid(&b, &grid, None, [1, 1, 2, 2]).unwrap();
        assert!((u - 4.0).abs() < 1e-8, "{u}");
        let u1111 = ursell4_on_grid(&b, &grid, None, [1, 1, 1, 1]).unwrap();
        assert!(u1111.abs() < 1e-10);
        // Permutation invariance.
        let perm = ursell4_on_grid(&b, &grid, None, [2, 1, 2, 1]).unwrap();
        assert!((perm - u).abs() < 1e-12);
    }

    #[test]
    fn centering_is_implicit() {
        // A constant shift does not change a fourth cumulant.
        let mu = DataMeasure::standard_normal();
        let grid = mu.grid().unwrap();
        let shifted = FnBasis::new("x+3", 1, 2, |k, x| if k == 1 { x[0] + 3.0 } else { x[0] * x[0] });
        let u = ursell4_on_grid(&shifted, &grid, None, [1, 1, 1, 1]).unwrap();
        assert!(u.abs() < 1e-9, "{u}");
        // κ4 of x² (a scaled chi-square) is 48.
        let c = ursell4_on_grid(&shifted, &grid, None, [2, 2, 2, 2]).unwrap();
        assert!((c - 48.0).abs() < 1e-8, "{c}");
    }

    #[test]
    fn independent_gaussian_columns_vanish() {
        let mu = DataMeasure::isotropic_gaussian(4).unwrap();
        let s = sample_features(&LinearBasis::new(4), &mu, &[1, 2, 3, 4], 50_000, 3).unwrap();
        for idx in [[1, 2, 3, 4], [1, 1, 2, 2], [3, 3, 3, 3]] {
            let u = ursell4(&s, idx).unwrap();
            assert!(u.estimate.abs() < 3.0 * u.stderr + 1e-12, "{idx:?}: {u:?}");
        }
    }

    #[test]
    fn mc_matches_quadrature_for_toy_features() {
        let mu = DataMeasure::standard_normal();
        let b = HermiteBasis::new(2);
        let s = sample_features(&b, &mu, &[1, 2], 200_000, 17).unwrap();
        let u = ursell4(&s, [1, 1, 2, 2]).unwrap();
        assert!((u.estimate - 4.0).abs() < 3.0 * u.stderr, "{u:?}");
        assert!(u.stderr > 0.0 && u.stderr < 0.5);
    }

    #[test]
    fn out_of_range_index() {
        let mu = DataMeasure::standard_normal();
        let s = sample_features(&HermiteBasis::new(3), &mu, &[1, 2], 100, 1).unwrap();
        assert!(ursell4(&s, [1, 1, 1, 3]).is_err());
    }

    #[test]
    fn table_is_symmetric_and_exports() {
        let mu = DataMeasure::standard_normal();
        let grid = mu.grid().unwrap();
        let t = cumulant_table_quadrature(&HermiteBasis::new(2), &grid, &[1, 2]).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.value([2, 1, 2, 1]).unwrap(), t.value([1, 1, 2, 2]).unwrap());
        assert!(matches!(t.value([1, 1, 1, 3]), Err(Error::MissingCumulant(_))));
        let csv = t.to_csv();
        assert!(csv.starts_with("k1,k2,k3,k4,estimate,stderr,method\n1,1,1,1,"));
        assert!(csv.contains(",quadrature\n"));
    }

    #[test]
    fn tiny_sample_is_valid() {
        let mu = DataMeasure::standard_normal();
        let s = sample_features(&HermiteBasis::new(2), &mu, &[1, 2], 2, 4).unwrap();
        let u = ursell4(&s, [1, 1, 2, 2]).unwrap();
        assert!(u.estimate.is_finite());
    }
}
