use std::fmt::Write as _;

use super::schedule::{schedule_shells, FlowSettings, Shell, ShellSchedule, StopReason};
use super::weight::WeightFunction;
use crate::error::{Error, Result};
use crate::spectral::{KernelFn, Mode, QuadratureGrid, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowFlag {
    /// The weight dipped below zero somewhere on the grid.
    PerturbativeBreakdown,
    /// A learnable mode was integrated out (count stop rule).
    LearnableIntegrated,
}

impl FlowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowFlag::PerturbativeBreakdown => "perturbative-breakdown",
            FlowFlag::LearnableIntegrated => "learnable-integrated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellRecord {
    pub step: usize,
    /// Modes left after the step.
    pub kappa: usize,
    pub modes: Vec<usize>,
    pub delta_c: f64,
    pub c_total: f64,
    pub sigma_c2: f64,
    /// Smallest retained eigenvalue, NaN once nothing is left.
    pub min_remaining_lambda: f64,
    /// Quadrature mean of the weight after the step (1 when untabulated).
    pub weight_mean: f64,
    pub flags: Vec<FlowFlag>,
}

/// Where the flow stands: retained modes, accumulated ridge shift, weight.
#[derive(Debug, Clone)]
pub struct FlowState {
    retained: Vec<Mode>,
    pub sigma2_bare: f64,
    pub c_total: f64,
    pub sigma_c2: f64,
    pub weight: WeightFunction,
    pub log: Vec<ShellRecord>,
    /// Set once any step flagged a negative weight.
    pub breakdown: bool,
}

impl FlowState {
    /// Nothing integrated yet; `grid` tabulates the weight if given.
    pub fn new(spectrum: &Spectrum, sigma2: f64, grid: Option<QuadratureGrid>) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::invalid("sigma2", "must be positive and finite"));
        }
        Ok(FlowState {
            retained: spectrum.modes().to_vec(),
            sigma2_bare: sigma2,
            c_total: 0.0,
            sigma_c2: sigma2,
            weight: WeightFunction::identity(grid),
            log: Vec::new(),
            breakdown: false,
        })
    }

    /// Number of retained leading modes.
    pub fn kappa(&self) -> usize {
        self.retained.len()
    }

    pub fn retained(&self) -> &[Mode] {
        &self.retained
    }

    /// Removes the shell's modes from the tail and shifts the ridge.
    pub(crate) fn integrate(&mut self, shell: &Shell, mut flags: Vec<FlowFlag>) -> Result<()> {
        if shell.len() > self.retained.len() {
            return Err(Error::Schedule(format!(
                "shell of {} modes exceeds the {} retained",
                shell.len(),
                self.retained.len()
            )));
        }
        let tail = self.retained.len() - shell.len();
        for (m, id) in self.retained[tail..].iter().rev().zip(&shell.modes) {
            if m.id != *id {
                return Err(Error::Schedule(format!(
                    "shell mode {id} is not at the tail of the retained spectrum (found {})",
                    m.id
                )));
            }
        }
        self.retained.truncate(tail);
        self.c_total += shell.delta_c;
        self.sigma_c2 = self.sigma2_bare + self.c_total;
        if shell.learnable {
            flags.push(FlowFlag::LearnableIntegrated);
        }
        self.log.push(ShellRecord {
            step: self.log.len() + 1,
            kappa: self.retained.len(),
            modes: shell.modes.clone(),
            delta_c: shell.delta_c,
            c_total: self.c_total,
            sigma_c2: self.sigma_c2,
            min_remaining_lambda: self.retained.last().map_or(f64::NAN, |m| m.lambda),
            weight_mean: self.weight.grid_mean(),
            flags,
        });
        Ok(())
    }

    /// CSV `step,kappa,delta_c,c_total,sigma_c2,min_remaining_lambda,flag`.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("step,kappa,delta_c,c_total,sigma_c2,min_remaining_lambda,flag\n");
        for r in &self.log {
            let flag = if r.flags.is_empty() {
                "ok".to_string()
            } else {
                r.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(";")
            };
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{}",
                r.step, r.kappa, r.delta_c, r.c_total, r.sigma_c2, r.min_remaining_lambda, flag
            );
        }
        out
    }
}

/// `σ_c² ← σ_c² + δc`; the weight is untouched.
pub fn gaussian_flow_step(state: &FlowState, shell: &Shell) -> Result<FlowState> {
    let mut next = state.clone();
    next.integrate(shell, Vec::new())?;
    Ok(next)
}

/// The truncated theory left at the end of a flow.
#[derive(Debug, Clone)]
pub struct EffectiveTheory {
    pub spectrum: Spectrum,
    pub sigma2_bare: f64,
    pub c_total: f64,
    pub sigma_c2: f64,
    pub weight: WeightFunction,
    pub stop_reason: Option<StopReason>,
    pub breakdown: bool,
}

impl EffectiveTheory {
    pub fn kernel(&self) -> KernelFn {
        KernelFn::new(self.spectrum.clone())
    }

    pub fn is_weighted(&self) -> bool {
        !self.weight.is_identity()
    }

    /// Scalar results as `key = value` lines.
    pub fn sidecar(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kappa = {}", self.spectrum.len());
        let _ = writeln!(out, "sigma2_bare = {:e}", self.sigma2_bare);
        let _ = writeln!(out, "c_total = {:e}", self.c_total);
        let _ = writeln!(out, "sigma_c2 = {:e}", self.sigma_c2);
        let _ = writeln!(out, "weighted = {}", self.is_weighted());
        let _ = writeln!(out, "weight_grid_mean = {:e}", self.weight.grid_mean());
        let _ = writeln!(out, "perturbative_breakdown = {}", self.breakdown);
        if let Some(r) = self.stop_reason {
            let _ = writeln!(out, "stop_reason = {}", r.as_str());
        }
        out
    }

    pub fn spectrum_csv(&self) -> String {
        self.spectrum.to_csv()
    }

    pub fn weight_csv(&self) -> Option<String> {
        self.weight.to_csv()
    }
}

/// Packages the retained prefix of `spectrum`, the running ridge and the weight.
pub fn effective_theory(state: &FlowState, spectrum: &Spectrum) -> EffectiveTheory {
    EffectiveTheory {
        spectrum: spectrum.prefix(state.kappa()),
        sigma2_bare: state.sigma2_bare,
        c_total: state.c_total,
        sigma_c2: state.sigma_c2,
        weight: state.weight.clone(),
        stop_reason: None,
        breakdown: state.breakdown,
    }
}

/// A completed flow: schedule, final state (with its log) and effective theory.
#[derive(Debug, Clone)]
pub struct FlowRun {
    pub schedule: ShellSchedule,
    pub state: FlowState,
    pub theory: EffectiveTheory,
}

impl FlowRun {
    pub fn trajectory_csv(&self) -> String {
        self.state.trajectory_csv()
    }
}

pub fn run_gaussian_flow(
    spectrum: &Spectrum,
    sigma2: f64,
    eta: f64,
    settings: &FlowSettings,
) -> Result<FlowRun> {
    let schedule = schedule_shells(spectrum, sigma2, eta, settings)?;
    let mut state = FlowState::new(spectrum, sigma2, None)?;
    for shell in &schedule.shells {
        state.integrate(shell, Vec::new())?;
    }
    let mut theory = effective_theory(&state, spectrum);
    theory.stop_reason = Some(schedule.stop_reason);
    Ok(FlowRun {
        schedule,
        state,
        theory,
    })
}
