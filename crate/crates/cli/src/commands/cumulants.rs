use gprg::cumulants::{cumulant_table_mc, cumulant_table_quadrature, gaussianity_report, sample_features, DEFAULT_BLOCKS};
use gprg::rng::derive_seed;

use super::{make_basis, measure_for, Artifacts, BasisKind, Context, Job};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Fourth-cumulant table for a set of feature modes, exact on a quadrature
/// grid or estimated from samples with jackknife errors.
pub fn prepare(cfg: &RunConfig, ctx: &Context) -> CliResult<Job> {
    let kind: BasisKind = cfg.get_or("cumulants", "basis", BasisKind::Hermite)?;
    let modes: Vec<usize> = cfg.get_list("cumulants", "modes")?.unwrap_or_else(|| vec![1, 2]);
    if modes.is_empty() || modes.contains(&0) {
        return Err(CliError::Config("cumulants.modes: need at least one mode, numbered from 1".into()));
    }
    let max_mode = *modes.iter().max().unwrap();
    let dim: usize = cfg.get_or("cumulants", "dim", max_mode)?;
    if kind == BasisKind::Linear && dim < max_mode {
        return Err(CliError::Config(format!("cumulants.dim = {dim} is below the largest mode {max_mode}")));
    }
    let method = cfg.raw("cumulants", "method").unwrap_or("quadrature").to_string();
    let order = cfg.get_or("cumulants", "quadrature_order", gprg::spectral::DEFAULT_QUADRATURE_ORDER)?;
    let num_samples: usize = cfg.get_or("cumulants", "num_samples", 100_000)?;
    let blocks: usize = cfg.get_or("cumulants", "blocks", DEFAULT_BLOCKS)?;
    let basis = make_basis(kind, if kind == BasisKind::Linear { dim } else { max_mode });
    let seed = derive_seed(ctx.seed, "cumulants");
    match method.as_str() {
        "quadrature" => {
            if kind != BasisKind::Hermite {
                return Err(CliError::Config(
                    "cumulants.method = quadrature needs basis = hermite; use mc for linear features".into(),
                ));
            }
            let measure = measure_for(kind, 1, order, 0, seed)?;
            Ok(Box::new(move || {
                let table = cumulant_table_quadrature(basis.as_ref(), &measure.grid()?, &modes)?;
                let mut out = Artifacts::default();
                out.add("cumulants.csv", table.to_csv());
                Ok(out)
            }))
        }
        "mc" => {
            if num_samples < 2 || blocks < 2 {
                return Err(CliError::Config("cumulants: num_samples and blocks must be at least 2".into()));
            }
            let measure = match kind {
                BasisKind::Hermite => gprg::spectral::DataMeasure::standard_normal(),
                BasisKind::Linear => gprg::spectral::DataMeasure::isotropic_gaussian(dim).map_err(crate::error::config)?,
            };
            Ok(Box::new(move || {
                let sample = sample_features(basis.as_ref(), &measure, &modes, num_samples, seed)?;
                let table = cumulant_table_mc(&sample, blocks)?;
                let report = gaussianity_report(&sample)?;
                let mut out = Artifacts::default();
                out.add("cumulants.csv", table.to_csv());
                out.add("gaussianity.csv", report.to_csv());
                out.add("pair_dependence.csv", report.pairs_csv());
                Ok(out)
            }))
        }
        other => Err(CliError::Config(format!(
            "cumulants.method: expected quadrature or mc, got `{other}`"
        ))),
    }
}
