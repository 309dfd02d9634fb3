use gprg::rng::derive_seed;
use gprg::toy::{
    compare_weights, run_toy_experiment, run_toy_sweep, Lambda2Convention, SweepParam, ToyConfig, ToySize,
};

use super::{Artifacts, Context, Job};
use crate::config::{parse_range, RunConfig};
use crate::error::{config, CliError, CliResult};

/// `λ₁` values run when neither `lambda1` nor a sweep is given.
pub const DEFAULT_LAMBDA1: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

enum Mode {
    Single,
    Sweep(SweepParam, Vec<f64>),
}

pub fn prepare(cfg: &RunConfig, ctx: &Context) -> CliResult<Job> {
    let base = ToyConfig::paper(1.0);
    let lambda1: Option<f64> = cfg.get("toy", "lambda1")?;
    let mut c = ToyConfig {
        lambda1: lambda1.unwrap_or(base.lambda1),
        lambda2: cfg.get_or("toy", "lambda2", base.lambda2)?,
        sigma2: cfg.get_or("toy", "sigma2", base.sigma2)?,
        n: cfg.get_or("toy", "n", base.n)?,
        eta: base.eta,
        trials: cfg.get_or("toy", "trials", base.trials)?,
        n_test: cfg.get_or("toy", "n_test", base.n_test)?,
        seed: derive_seed(ctx.seed, "toy"),
        size: match cfg.raw("toy", "size").unwrap_or("fixed") {
            "fixed" => ToySize::Fixed,
            "poisson" => ToySize::Poisson,
            other => return Err(CliError::Config(format!("toy.size: expected fixed or poisson, got `{other}`"))),
        },
        observation_noise: cfg.get_or("toy", "observation_noise", base.observation_noise)?,
        convention: cfg.get_or("toy", "convention", Lambda2Convention::Operator)?,
        quadrature_order: cfg.get_or("toy", "quadrature_order", base.quadrature_order)?,
    };
    c.eta = cfg.get_or("toy", "eta", c.n as f64)?;
    let compare: bool = cfg.get_or("toy", "compare_weights", true)?;

    let mode = match cfg.raw("toy", "sweep") {
        Some(spec) => {
            let (param, range) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("toy.sweep `{spec}`: expected PARAM=start:stop:count")))?;
            let param: SweepParam = param.parse().map_err(config)?;
            Mode::Sweep(param, parse_range(range)?)
        }
        None if lambda1.is_none() => Mode::Sweep(SweepParam::Lambda1, DEFAULT_LAMBDA1.to_vec()),
        None => Mode::Single,
    };
    // Every point must pass the module's checks before anything runs.
    let mut warnings = Vec::new();
    let points: Vec<ToyConfig> = match &mode {
        Mode::Single => vec![c],
        Mode::Sweep(param, values) => values
            .iter()
            .map(|&v| -> CliResult<ToyConfig> {
                let mut p = c;
                match param {
                    SweepParam::Lambda1 => p.lambda1 = v,
                    SweepParam::Lambda2 => p.lambda2 = v,
                    SweepParam::N => {
                        if !(v >= 1.0) || v.fract() != 0.0 {
                            return Err(CliError::Config(format!("toy.sweep: n = {v} is not a positive integer")));
                        }
                        p.n = v as usize;
                        p.eta = v;
                    }
                }
                Ok(p)
            })
            .collect::<CliResult<_>>()?,
    };
    for p in &points {
        for w in p.validate().map_err(config)? {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }

    Ok(Box::new(move || {
        let mut out = Artifacts {
            warnings,
            ..Artifacts::default()
        };
        match mode {
            Mode::Single => {
                let r = run_toy_experiment(&c)?;
                out.add("toy_summary.csv", r.summary_csv());
                out.add("toy_weight.csv", r.weight_csv());
                out.add("toy_run.txt", r.sidecar());
            }
            Mode::Sweep(param, values) => {
                let sweep = run_toy_sweep(&c, param, &values)?;
                out.add("toy_sweep.csv", sweep.to_csv());
                out.add("toy_weight.csv", sweep.points[0].1.weight_csv());
                let mut side = String::new();
                for (v, r) in &sweep.points {
                    side.push_str(&format!("[{}={v}]\n", param.as_str()));
                    side.push_str(&r.sidecar());
                }
                out.add("toy_run.txt", side);
            }
        }
        if compare && c.lambda2 > 0.0 {
            out.add("toy_weight_comparison.csv", compare_weights(&c)?.to_csv());
        }
        Ok(out)
    }))
}
