use gprg::flow::{run_gaussian_flow, run_weighted_flow, BMeasure, FlowSettings, StopRule, WeightedFlowOptions};
use gprg::rng::derive_seed;

use super::{measure_for, parse_boundary, spectrum_from_config, Artifacts, Context, Job};
use crate::config::RunConfig;
use crate::error::{config, CliResult};

/// Shell schedule, trajectory and effective theory; `weighted = true` also
/// flows the loss weight from grid cumulants.
pub fn prepare(cfg: &RunConfig, ctx: &Context) -> CliResult<Job> {
    let (spectrum, basis_kind) = spectrum_from_config(cfg, ctx)?;
    let sigma2: f64 = cfg.require("flow", "sigma2")?;
    let eta: f64 = cfg.require("flow", "eta")?;
    let defaults = FlowSettings::default();
    let settings = FlowSettings {
        epsilon: cfg.get_or("flow", "epsilon", defaults.epsilon)?,
        stop_rule: cfg.get_or("flow", "stop_rule", StopRule::Learnability)?,
        max_shell_modes: cfg.get_or("flow", "max_shell_modes", defaults.max_shell_modes)?,
        boundary: parse_boundary(cfg, "flow")?,
    };
    settings.validate().map_err(config)?;
    gprg::ek::EKParams::new(eta, sigma2).map_err(config)?;
    let weighted: bool = cfg.get_or("flow", "weighted", false)?;
    let options = WeightedFlowOptions {
        b_measure: cfg.get_or("flow", "b_measure", BMeasure::Original)?,
        a_diagnostics_max_modes: cfg.get_or(
            "flow",
            "a_diagnostics_max_modes",
            WeightedFlowOptions::default().a_diagnostics_max_modes,
        )?,
    };
    let measure = if weighted {
        let order = cfg.get_or("flow", "quadrature_order", gprg::spectral::DEFAULT_QUADRATURE_ORDER)?;
        let points = cfg.get_or("flow", "empirical_points", 500usize)?;
        let dim = spectrum.basis().input_dim();
        Some(measure_for(basis_kind, dim, order, points, derive_seed(ctx.seed, "flow/measure"))?)
    } else {
        None
    };

    Ok(Box::new(move || {
        let mut out = Artifacts::default();
        let run = match &measure {
            Some(mu) => {
                let w = run_weighted_flow(&spectrum, sigma2, eta, &settings, mu, &options)?;
                if let Some(csv) = w.run.theory.weight_csv() {
                    out.add("weight.csv", csv);
                }
                out.add("a_diagnostics.csv", w.a_diagnostics_csv());
                if w.run.theory.breakdown {
                    out.warnings
                        .push("loss weight went negative on the grid: perturbative breakdown".to_string());
                }
                w.run
            }
            None => run_gaussian_flow(&spectrum, sigma2, eta, &settings)?,
        };
        out.warnings.extend(run.schedule.warnings.iter().cloned());
        out.add("trajectory.csv", run.trajectory_csv());
        out.add("effective_spectrum.csv", run.theory.spectrum_csv());
        out.add("effective_theory.txt", run.theory.sidecar());
        Ok(out)
    }))
}
