use gprg::cumulants::ursell4_on_grid;
use gprg::spectral::{check_orthonormality, hermite_probabilist, quadrature_integral, DataMeasure, HermiteBasis};

use super::{Artifacts, Context, Job};
use crate::config::RunConfig;
use crate::error::{config, CliError, CliResult};

/// Names of the built-in checks, in run order.
pub const CHECKS: [&str; 5] = ["orthonormality", "overlap-120", "overlap-10", "ursell-1122", "ursell-2222"];

const TOL: f64 = 1e-8;

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn run_check(name: &'static str, mu: &DataMeasure) -> CheckResult {
    let he2 = |x: f64| hermite_probabilist(2, x);
    let basis = HermiteBasis::new(20);
    let value = |want: f64, got: gprg::Result<f64>| match got {
        Ok(v) => ((v - want).abs() <= TOL, format!("value {v:.12}, expected {want}")),
        Err(e) => (false, format!("error: {e}")),
    };
    let (pass, detail) = match name {
        "orthonormality" => match check_orthonormality(&basis, mu, 20, 1e-10) {
            Ok(r) => (
                r.within_tolerance,
                format!("modes 1..20, max deviation {:e} at {:?}", r.max_deviation, r.worst_pair),
            ),
            Err(e) => (false, format!("error: {e}")),
        },
        "overlap-120" => value(120.0, quadrature_integral(|x| x * hermite_probabilist(5, x) * he2(x).powi(2), mu)),
        "overlap-10" => value(10.0, quadrature_integral(|x| x * x * he2(x).powi(2), mu)),
        "ursell-1122" => value(4.0, mu.grid().and_then(|g| ursell4_on_grid(&basis, &g, None, [1, 1, 2, 2]))),
        "ursell-2222" => value(12.0, mu.grid().and_then(|g| ursell4_on_grid(&basis, &g, None, [2, 2, 2, 2]))),
        _ => unreachable!("unknown check {name}"),
    };
    CheckResult { name, pass, detail }
}

/// Runs the oracle checks, printing one line each. `only` entries select
/// checks by name or name prefix.
pub fn prepare(cfg: &RunConfig, _ctx: &Context) -> CliResult<Job> {
    let order = cfg.get_or("validate", "quadrature_order", gprg::spectral::DEFAULT_QUADRATURE_ORDER)?;
    let mu = DataMeasure::standard_normal_with_order(order).map_err(config)?;
    let only: Vec<String> = cfg.get_list("validate", "only")?.unwrap_or_default();
    for o in &only {
        if !CHECKS.iter().any(|c| c.starts_with(o.as_str())) {
            return Err(CliError::Config(format!(
                "validate.only: no check matches `{o}` (checks: {})",
                CHECKS.join(", ")
            )));
        }
    }
    let selected: Vec<&'static str> = CHECKS
        .iter()
        .copied()
        .filter(|c| only.is_empty() || only.iter().any(|o| c.starts_with(o.as_str())))
        .collect();
    Ok(Box::new(move || {
        let results: Vec<CheckResult> = selected.iter().map(|c| run_check(c, &mu)).collect();
        for r in &results {
            println!("{}: {} ({})", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        }
        let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
        if failed.is_empty() {
            Ok(Artifacts::default())
        } else {
            Err(CliError::Validation(format!("failing checks: {}", failed.join(", "))))
        }
    }))
}
