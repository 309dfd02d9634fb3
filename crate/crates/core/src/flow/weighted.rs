//! Flow of the spatial loss weight when the integrated modes are non-Gaussian.
//!
//! Integrating out a single mode `q` with eigenvalue `δc` shifts the ridge
//! as in the Gaussian case and reweights the loss by
//! `W ← W − (2δc/σ_c²) B_q`, where `B_q` is the variance-shift form built
//! from the fourth cumulants `U_{abqq}` of the retained features.

use std::fmt::Write as _;
use std::sync::Arc;

use super::schedule::{schedule_shells, FlowSettings, Shell};
use super::state::{effective_theory, FlowFlag, FlowRun, FlowState};
use crate::cumulants::{AForm, BForm, GridFeatures};
use crate::error::{Error, Result};
use crate::spectral::{Basis, DataMeasure, QuadratureGrid, Spectrum};

/// Tolerance on the quadrature mean of `B`, relative to its mean magnitude.
pub const B_MEAN_TOL: f64 = 1e-8;
/// Tolerance on the quadrature mean of `W` after a step.
pub const W_MEAN_TOL: f64 = 1e-10;

/// Which measure the cumulants behind `B` are taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BMeasure {
    /// The original data measure at every step.
    #[default]
    Original,
    /// The reweighted measure `W·dμ` of the current step (experimental).
    Flowed,
}

impl std::str::FromStr for BMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "original" => Ok(BMeasure::Original),
            "flowed" => Ok(BMeasure::Flowed),
            other => Err(Error::invalid("b_measure", format!("expected `original` or `flowed`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedFlowOptions {
    pub b_measure: BMeasure,
    /// A-term diagnostics are skipped when more modes than this are retained.
    pub a_diagnostics_max_modes: usize,
}

impl Default for WeightedFlowOptions {
    fn default() -> Self {
        WeightedFlowOptions {
            b_measure: BMeasure::Original,
            a_diagnostics_max_modes: 16,
        }
    }
}

/// Grid values of `B_q`, with the form itself when available.
#[derive(Debug, Clone)]
pub struct WeightPerturbation {
    pub values: Vec<f64>,
    pub form: Option<BForm>,
}

impl WeightPerturbation {
    pub fn from_form(form: BForm, grid: &QuadratureGrid) -> Self {
        WeightPerturbation {
            values: form.on_grid(grid),
            form: Some(form),
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        WeightPerturbation { values, form: None }
    }
}

/// `W ← W − (2δc/σ_c²)·B_q` with the pre-step ridge, then `σ_c² += δc`.
pub fn weighted_flow_step(state: &FlowState, shell: &Shell, b: &WeightPerturbation) -> Result<FlowState> {
    if shell.len() != 1 {
        return Err(Error::Schedule(format!(
            "weighted steps integrate one mode at a time, got {}",
            shell.len()
        )));
    }
    let grid = state
        .weight
        .grid()
        .ok_or_else(|| Error::invalid("weight", "weighted flow needs a tabulated weight"))?;
    if b.values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: b.values.len(),
        });
    }
    let b_mean = grid.mean(&b.values);
    let b_scale = grid
        .weights
        .iter()
        .zip(&b.values)
        .map(|(w, v)| w * v.abs())
        .sum::<f64>()
        .max(1.0);
    if b_mean.abs() > B_MEAN_TOL * b_scale {
        return Err(Error::invalid(
            "B",
            format!("quadrature mean {b_mean:e} is not zero within {B_MEAN_TOL:e}"),
        ));
    }
    let mut next = state.clone();
    let coef = -2.0 * shell.delta_c / state.sigma_c2;
    if shell.delta_c != 0.0 {
        next.weight.add(coef, &b.values, b.form.as_ref());
    }
    let mean = next.weight.grid_mean();
    if (mean - 1.0).abs() > W_MEAN_TOL {
        return Err(Error::WeightNormalization { mean, tol: W_MEAN_TOL });
    }
    let mut flags = Vec::new();
    if next.weight.min_value() < 0.0 {
        next.breakdown = true;
        flags.push(FlowFlag::PerturbativeBreakdown);
    }
    next.integrate(shell, flags)?;
    Ok(next)
}

/// Size of the mean shift `A_q` generated when mode `q` was integrated out.
#[derive(Debug, Clone, PartialEq)]
pub struct ADiagnostic {
    pub step: usize,
    pub q: usize,
    /// `None` when skipped because too many modes were retained.
    pub rms: Option<f64>,
    /// `∫ A_q φ_k dμ` for each retained mode `k`.
    pub projections: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct WeightedFlowRun {
    pub run: FlowRun,
    pub a_diagnostics: Vec<ADiagnostic>,
    pub b_measure: BMeasure,
}

impl WeightedFlowRun {
    /// CSV `step,q,a_rms,k,projection`, one row per retained mode.
    pub fn a_diagnostics_csv(&self) -> String {
        let mut out = String::from("step,q,a_rms,k,projection\n");
        for d in &self.a_diagnostics {
            let rms = d.rms.map_or("skipped".to_string(), |r| format!("{r:e}"));
            if d.projections.is_empty() {
                let _ = writeln!(out, "{},{},{},,", d.step, d.q, rms);
            }
            for (k, p) in &d.projections {
                let _ = writeln!(out, "{},{},{},{},{:e}", d.step, d.q, rms, k, p);
            }
        }
        out
    }
}

/// Single-mode shells with `B_q` recomputed from exact grid cumulants at
/// every step.
pub fn run_weighted_flow(
    spectrum: &Spectrum,
    sigma2: f64,
    eta: f64,
    settings: &FlowSettings,
    measure: &DataMeasure,
    options: &WeightedFlowOptions,
) -> Result<WeightedFlowRun> {
    let single = FlowSettings {
        max_shell_modes: 1,
        ..*settings
    };
    let schedule = schedule_shells(spectrum, sigma2, eta, &single)?;
    let grid = measure.grid()?;
    let basis: Arc<dyn Basis> = Arc::clone(spectrum.basis());
    if basis.input_dim() != measure.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.input_dim(),
            got: measure.dim(),
        });
    }
    let ids = spectrum.ids();
    let features = GridFeatures::new(basis.as_ref(), &ids, &grid);
    let mut state = FlowState::new(spectrum, sigma2, Some(grid.clone()))?;
    let mut diagnostics = Vec::new();

    for shell in &schedule.shells {
        let q_col = state.kappa() - 1;
        let cols: Vec<usize> = (0..q_col).collect();
        let lesser: Vec<usize> = ids[..q_col].to_vec();
        let density = match options.b_measure {
            BMeasure::Original => None,
            BMeasure::Flowed => Some(state.weight.values().to_vec()),
        };
        let u = features.pair_cumulants(&cols, q_col, density.as_deref());
        let gram = features.gram(&cols);
        let form = BForm::from_parts(ids[q_col], lesser.clone(), &u, gram.clone(), Arc::clone(&basis));
        let pert = WeightPerturbation::from_form(form, &grid);

        let step = state.log.len() + 1;
        let diag = if lesser.len() <= options.a_diagnostics_max_modes {
            let t = features.triple_cumulants(&cols, q_col, density.as_deref());
            let a = AForm::from_parts(ids[q_col], lesser.clone(), &t, gram, Arc::clone(&basis));
            let values = a.on_grid(&grid);
            let rms = grid.mean(&values.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
            let projections = lesser
                .iter()
                .map(|&k| {
                    let p = grid
                        .points
                        .iter()
                        .zip(&grid.weights)
                        .zip(&values)
                        .map(|((x, w), a)| w * a * basis.eval(k, x))
                        .sum();
                    (k, p)
                })
                .collect();
            ADiagnostic {
                step,
                q: ids[q_col],
                rms: Some(rms),
                projections,
            }
        } else {
            ADiagnostic {
                step,
                q: ids[q_col],
                rms: None,
                projections: Vec::new(),
            }
        };
        diagnostics.push(diag);
        state = weighted_flow_step(&state, shell, &pert)?;
    }

    let mut theory = effective_theory(&state, spectrum);
    theory.stop_reason = Some(schedule.stop_reason);
    Ok(WeightedFlowRun {
        run: FlowRun {
            schedule,
            state,
            theory,
        },
        a_diagnostics: diagnostics,
        b_measure: options.b_measure,
    })
}
