//! Command-line runner for the `gprg` library: one subcommand per module,
//! `key = value` config files, deterministic seeding and checksummed outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Context;
use config::RunConfig;
use error::{CliError, CliResult};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "gprg", version, about = "Shell-integration RG experiments for GP regression")]
pub struct Cli {
    /// Config file with `[section]` headers and `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (default `gprg-out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a config value, e.g. `--set toy.trials=5000`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learnability report and equivalent-kernel predictions.
    Ek,
    /// Integrate out unlearnable modes shell by shell.
    Flow {
        /// Also flow the loss weight from feature cumulants.
        #[arg(long)]
        weighted: bool,
        /// `learnability` or `count(K)`.
        #[arg(long)]
        stop_rule: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// The rank-2 Hermite toy model learning He5.
    Toy {
        /// `PARAM=start:stop:count` with PARAM one of lambda1, lambda2, n.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Fourth-order feature cumulants.
    Cumulants {
        /// `quadrature` or `mc`.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        num_samples: Option<usize>,
    },
    /// Built-in oracle checks.
    Validate {
        /// Run only checks with this name or prefix; repeatable.
        #[arg(long)]
        only: Vec<String>,
        #[arg(long)]
        quadrature_order: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ek => "ek",
            Command::Flow { .. } => "flow",
            Command::Toy { .. } => "toy",
            Command::Cumulants { .. } => "cumulants",
            Command::Validate { .. } => "validate",
        }
    }

    /// Folds dedicated flags into the config so they override the file.
    fn apply_flags(&self, cfg: &mut RunConfig) {
        let mut put = |section: &str, key: &str, v: Option<String>| {
            if let Some(v) = v {
                cfg.set(section, key, &v);
            }
        };
        match self {
            Command::Ek => {}
            Command::Flow {
                weighted,
                stop_rule,
                epsilon,
            } => {
                put("flow", "weighted", weighted.then(|| "true".to_string()));
                put("flow", "stop_rule", stop_rule.clone());
                put("flow", "epsilon", epsilon.map(|e| e.to_string()));
            }
            Command::Toy { sweep, lambda1, trials } => {
                put("toy", "sweep", sweep.clone());
                put("toy", "lambda1", lambda1.map(|v| v.to_string()));
                put("toy", "trials", trials.map(|v| v.to_string()));
            }
            Command::Cumulants { method, num_samples } => {
                put("cumulants", "method", method.clone());
                put("cumulants", "num_samples", num_samples.map(|v| v.to_string()));
            }
            Command::Validate { only, quadrature_order } => {
                put("validate", "only", (!only.is_empty()).then(|| only.join(",")));
                put("validate", "quadrature_order", quadrature_order.map(|v| v.to_string()));
            }
        }
    }
}

/// Runs a parsed command line and returns where the manifest went, if any.
pub fn run(cli: Cli) -> CliResult<Option<PathBuf>> {
    let started = Instant::now();
    let (mut cfg, config_dir) = match &cli.config {
        Some(p) => (
            RunConfig::load(p)?,
            p.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    for s in &cli.set {
        cfg.set_assignment(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("run", "seed", &seed.to_string());
    }
    if let Some(t) = cli.threads {
        cfg.set("run", "threads", &t.to_string());
    }
    cli.command.apply_flags(&mut cfg);

    let seed: u64 = cfg.get_or("run", "seed", 0)?;
    let threads: Option<usize> = cfg.get("run", "threads")?;
    let out_dir = match &cli.out {
        Some(p) => p.clone(),
        None => match cfg.get::<String>("run", "out")? {
            Some(p) => config_dir.join(p),
            None => PathBuf::from("gprg-out"),
        },
    };
    let ctx = Context { config_dir, seed };
    let job = match &cli.command {
        Command::Ek => commands::ek::prepare(&cfg, &ctx)?,
        Command::Flow { .. } => commands::flow::prepare(&cfg, &ctx)?,
        Command::Toy { .. } => commands::toy::prepare(&cfg, &ctx)?,
        Command::Cumulants { .. } => commands::cumulants::prepare(&cfg, &ctx)?,
        Command::Validate { .. } => commands::validate::prepare(&cfg, &ctx)?,
    };
    cfg.check_all_used()?;

    let threads = match threads {
        Some(0) => return Err(CliError::Config("run.threads must be positive".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let artifacts = pool.install(job)?;

    if matches!(cli.command, Command::Validate { .. }) {
        return Ok(None);
    }
    let mut out = OutputDir::create(&out_dir)?;
    for (name, contents) in &artifacts.files {
        out.write(name, contents)?;
    }
    let mut entries = vec![
        ("artifact_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("subcommand".to_string(), cli.command.name().to_string()),
        ("seed".to_string(), seed.to_string()),
        ("threads".to_string(), threads.to_string()),
        (
            "runtime_seconds".to_string(),
            format!("{:.3}", started.elapsed().as_secs_f64()),
        ),
    ];
    entries.extend(cfg.echo());
    out.finish(&entries, &artifacts.warnings).map(Some)
}
