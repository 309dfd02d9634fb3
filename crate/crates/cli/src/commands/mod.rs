pub mod cumulants;
pub mod ek;
pub mod flow;
pub mod toy;
pub mod validate;

use std::sync::Arc;

use gprg::spectral::{power_law_spectrum, Basis, DataMeasure, HermiteBasis, LinearBasis, Spectrum};

use crate::config::RunConfig;
use crate::error::{config, CliError, CliResult};

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Context {
    /// Relative paths in the config resolve against this directory.
    pub config_dir: std::path::PathBuf,
    pub seed: u64,
}

/// The computation left once a config has been accepted.
pub type Job = Box<dyn FnOnce() -> CliResult<Artifacts> + Send>;

/// Files and notes produced by a subcommand, written by the caller.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Hermite,
    Linear,
}

impl std::str::FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hermite" => Ok(BasisKind::Hermite),
            "linear" => Ok(BasisKind::Linear),
            other => Err(format!("expected `hermite` or `linear`, got `{other}`")),
        }
    }
}

pub fn make_basis(kind: BasisKind, max_mode: usize) -> Arc<dyn Basis> {
    match kind {
        BasisKind::Hermite => Arc::new(HermiteBasis::new(max_mode)),
        BasisKind::Linear => Arc::new(LinearBasis::new(max_mode)),
    }
}

pub fn parse_boundary(cfg: &RunConfig, section: &str) -> CliResult<gprg::ek::Boundary> {
    match cfg.raw(section, "boundary").unwrap_or("inclusive") {
        "inclusive" => Ok(gprg::ek::Boundary::Inclusive),
        "strict" => Ok(gprg::ek::Boundary::Strict),
        other => Err(CliError::Config(format!(
            "{section}.boundary: expected `inclusive` or `strict`, got `{other}`"
        ))),
    }
}

/// The `[spectrum]` section.
///
/// `kind` is `power_law` (`lambda0`, `exponent`, `modes`), `list`
/// (`eigenvalues`), `file` (`path` to a `k,lambda` CSV) or `toy`
/// (`lambda1`, `lambda2`). `basis` is `hermite` or `linear`.
pub fn spectrum_from_config(cfg: &RunConfig, ctx: &Context) -> CliResult<(Spectrum, BasisKind)> {
    let kind = cfg.raw("spectrum", "kind").unwrap_or("power_law").to_string();
    let basis_kind: BasisKind = cfg.get_or("spectrum", "basis", BasisKind::Hermite)?;
    let spectrum = match kind.as_str() {
        "power_law" => {
            let lambda0 = cfg.get_or("spectrum", "lambda0", 1.0)?;
            let exponent = cfg.get_or("spectrum", "exponent", 2.0)?;
            let modes: usize = cfg.get_or("spectrum", "modes", 64)?;
            power_law_spectrum(lambda0, exponent, modes, make_basis(basis_kind, modes.max(1))).map_err(config)?
        }
        "list" => {
            let lambdas: Vec<f64> = cfg
                .get_list("spectrum", "eigenvalues")?
                .ok_or_else(|| CliError::Config("missing required key `eigenvalues` in section [spectrum]".into()))?;
            Spectrum::from_eigenvalues(&lambdas, make_basis(basis_kind, lambdas.len().max(1))).map_err(config)?
        }
        "file" => {
            let rel: String = cfg.require("spectrum", "path")?;
            let path = ctx.config_dir.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            let max = text
                .lines()
                .skip(1)
                .filter_map(|l| l.split(',').next()?.trim().parse::<usize>().ok())
                .max()
                .unwrap_or(1);
            Spectrum::from_csv(&text, make_basis(basis_kind, max)).map_err(config)?
        }
        "toy" => {
            if basis_kind != BasisKind::Hermite {
                return Err(CliError::Config("spectrum.kind = toy needs basis = hermite".into()));
            }
            let l1 = cfg.require("spectrum", "lambda1")?;
            let l2 = cfg.require("spectrum", "lambda2")?;
            gprg::toy::toy_kernel(l1, l2).map_err(config)?.spectrum().clone()
        }
        other => {
            return Err(CliError::Config(format!(
                "spectrum.kind: expected power_law, list, file or toy, got `{other}`"
            )))
        }
    };
    Ok((spectrum, basis_kind))
}

/// Measure matching a basis: N(0,1) quadrature for Hermite features, a
/// seeded empirical Gaussian sample for linear ones.
pub fn measure_for(
    kind: BasisKind,
    dim: usize,
    quadrature_order: usize,
    empirical_points: usize,
    seed: u64,
) -> CliResult<DataMeasure> {
    match kind {
        BasisKind::Hermite => DataMeasure::standard_normal_with_order(quadrature_order).map_err(config),
        BasisKind::Linear => {
            let gauss = DataMeasure::isotropic_gaussian(dim).map_err(config)?;
            let mut rng = gprg::rng::trial_rng(seed, 0);
            DataMeasure::empirical(gauss.sample(&mut rng, empirical_points)).map_err(config)
        }
    }
}
