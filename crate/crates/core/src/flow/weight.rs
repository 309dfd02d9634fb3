use std::fmt::Write as _;

use crate::cumulants::BForm;
use crate::error::{Error, Result};
use crate::spectral::{Points, QuadratureGrid};

/// One accumulated correction `coef · B(x)`.
#[derive(Debug, Clone)]
pub struct WeightTerm {
    pub coef: f64,
    pub form: BForm,
}

/// Spatial loss weight `W(x) = 1 + Σ coef_i B_i(x)`.
///
/// Values are tabulated on the measure's grid. When every correction came
/// with its functional form the weight can also be evaluated off-grid.
#[derive(Debug, Clone)]
pub struct WeightFunction {
    grid: Option<QuadratureGrid>,
    values: Vec<f64>,
    terms: Vec<WeightTerm>,
    functional: bool,
}

impl WeightFunction {
    /// `W ≡ 1`, optionally tabulated on `grid`.
    pub fn identity(grid: Option<QuadratureGrid>) -> Self {
        let values = grid.as_ref().map_or_else(Vec::new, |g| vec![1.0; g.len()]);
        WeightFunction {
            grid,
            values,
            terms: Vec::new(),
            functional: true,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.terms.is_empty() && self.values.iter().all(|v| *v == 1.0)
    }

    pub fn grid(&self) -> Option<&QuadratureGrid> {
        self.grid.as_ref()
    }

    /// Tabulated values, one per grid node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terms(&self) -> &[WeightTerm] {
        &self.terms
    }

    /// Whether [`eval`](Self::eval) works away from the grid.
    pub fn is_functional(&self) -> bool {
        self.functional
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if !self.functional {
            return Err(Error::invalid(
                "weight",
                "weight was updated from grid values only and cannot be evaluated off-grid",
            ));
        }
        Ok(1.0 + self.terms.iter().map(|t| t.coef * t.form.eval(x)).sum::<f64>())
    }

    /// Quadrature mean of `W`; 1 for an untabulated identity.
    pub fn grid_mean(&self) -> f64 {
        match &self.grid {
            Some(g) => g.mean(&self.values),
            None => 1.0,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `W ← W + coef·B` on the grid, and in functional form if `form` is given.
    pub(crate) fn add(&mut self, coef: f64, values: &[f64], form: Option<&BForm>) {
        for (w, b) in self.values.iter_mut().zip(values) {
            *w += coef * b;
        }
        match form {
            Some(f) => self.terms.push(WeightTerm {
                coef,
                form: f.clone(),
            }),
            None => self.functional = false,
        }
    }

    /// CSV `x,w` over the grid; multi-dimensional nodes are written `x1;x2;…`.
    pub fn to_csv(&self) -> Option<String> {
        let grid = self.grid.as_ref()?;
        let mut out = String::from("x,w\n");
        for (x, w) in grid.points.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{:e}", join(x), w);
        }
        Some(out)
    }

    /// CSV `x,w` at arbitrary points.
    pub fn to_csv_at(&self, points: &Points) -> Result<String> {
        let mut out = String::from("x,w\n");
        for x in points.iter() {
            let _ = writeln!(out, "{},{:e}", join(x), self.eval(x)?);
        }
        Ok(out)
    }
}

fn join(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";")
}
