use std::fmt::Write as _;

use gprg::ek::{classify_learnability, ek_mode_predictor, ek_mode_variance, EKParams};

use super::{parse_boundary, spectrum_from_config, Artifacts, Context, Job};
use crate::config::RunConfig;
use crate::error::{config, CliResult};

/// Learnability report and per-mode EK predictions.
///
/// `[ek] target` lists `y_k` in spectrum order; missing entries are 0.
pub fn prepare(cfg: &RunConfig, ctx: &Context) -> CliResult<Job> {
    let (spectrum, _) = spectrum_from_config(cfg, ctx)?;
    let sigma2: f64 = cfg.require("ek", "sigma2")?;
    let eta: f64 = cfg.require("ek", "eta")?;
    let params = EKParams::new(eta, sigma2).map_err(config)?;
    let boundary = parse_boundary(cfg, "ek")?;
    let target: Vec<f64> = cfg.get_list("ek", "target")?.unwrap_or_default();
    Ok(Box::new(move || {
        let report = classify_learnability(&spectrum, &params, boundary);
        let mut pred = String::from("k,lambda,y,predictor,variance\n");
        for (i, m) in spectrum.modes().iter().enumerate() {
            let y = target.get(i).copied().unwrap_or(0.0);
            let _ = writeln!(
                pred,
                "{},{:e},{:e},{:e},{:e}",
                m.id,
                m.lambda,
                y,
                ek_mode_predictor(m.lambda, y, &params),
                ek_mode_variance(m.lambda, &params)
            );
        }
        let mut out = Artifacts::default();
        out.add("ek_report.csv", report.to_csv());
        out.add("ek_predictions.csv", pred);
        Ok(out)
    }))
}
