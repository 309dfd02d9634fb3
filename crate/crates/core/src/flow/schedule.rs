use crate::ek::Boundary;
use crate::error::{Error, Result};
use crate::spectral::Spectrum;

/// When the flow stops integrating out modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Stop before the first mode with `λ ≥ σ_c²/η` (boundary per [`Boundary`]).
    Learnability,
    /// Stop when this many modes remain.
    Count(usize),
}

impl std::fmt::Display for StopRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopRule::Learnability => write!(f, "learnability"),
            StopRule::Count(k) => write!(f, "count({k})"),
        }
    }
}

impl std::str::FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "learnability" {
            return Ok(StopRule::Learnability);
        }
        s.strip_prefix("count(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|k| k.trim().parse().ok())
            .map(StopRule::Count)
            .ok_or_else(|| Error::invalid("stop_rule", format!("expected `learnability` or `count(K)`, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The next mode is learnable at the running ridge.
    Learnability,
    /// The requested number of modes remain.
    Count,
    /// The next mode would exceed `ε·σ_c²` on its own.
    PerturbativeBound,
    /// Every mode was integrated out.
    Exhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Learnability => "learnability",
            StopReason::Count => "count",
            StopReason::PerturbativeBound => "perturbative-bound",
            StopReason::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings {
    /// Maximum `δc/σ_c²` per shell, in `(0, 1)`.
    pub epsilon: f64,
    pub stop_rule: StopRule,
    /// Modes per shell; the weighted flow requires 1.
    pub max_shell_modes: usize,
    pub boundary: Boundary,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            epsilon: 0.01,
            stop_rule: StopRule::Learnability,
            max_shell_modes: 1,
            boundary: Boundary::Inclusive,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
        }
        if self.max_shell_modes == 0 {
            return Err(Error::invalid("max_shell_modes", "must be at least 1"));
        }
        Ok(())
    }
}

/// A group of tail modes integrated out in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    /// Mode ids, smallest eigenvalue first.
    pub modes: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// Sum of the shell's eigenvalues.
    pub delta_c: f64,
    /// Running ridge when the shell is consumed.
    pub sigma_c2_before: f64,
    /// Some mode in the shell was learnable at `sigma_c2_before`.
    pub learnable: bool,
}

impl Shell {
    /// A shell built by hand, e.g. for a single explicit step.
    pub fn new(modes: Vec<usize>, lambdas: Vec<f64>) -> Self {
        let delta_c = lambdas.iter().sum();
        Shell {
            modes,
            lambdas,
            delta_c,
            sigma_c2_before: f64::NAN,
            learnable: false,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellSchedule {
    pub shells: Vec<Shell>,
    pub epsilon: f64,
    pub stop_rule: StopRule,
    pub stop_reason: StopReason,
    /// Number of leading modes left after all shells.
    pub retained: usize,
    pub sigma2: f64,
    pub eta: f64,
    pub warnings: Vec<String>,
}

impl ShellSchedule {
    pub fn integrated_modes(&self) -> usize {
        self.shells.iter().map(Shell::len).sum()
    }

    /// `σ² + Σ δc`.
    pub fn final_sigma_c2(&self) -> f64 {
        self.sigma2 + self.shells.iter().map(|s| s.delta_c).sum::<f64>()
    }
}

fn check_common(sigma2: f64, eta: f64, settings: &FlowSettings) -> Result<()> {
    settings.validate()?;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::invalid("sigma2", "must be positive and finite"));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be positive and finite"));
    }
    Ok(())
}

/// Groups tail modes, smallest eigenvalue first, into shells with
/// `δc ≤ ε·σ_c²` at the running ridge.
pub fn schedule_shells(
    spectrum: &Spectrum,
    sigma2: f64,
    eta: f64,
    settings: &FlowSettings,
) -> Result<ShellSchedule> {
    check_common(sigma2, eta, settings)?;
    let modes = spectrum.modes();
    let eps = settings.epsilon;
    let mut sigma_c2 = sigma2;
    let mut pos = modes.len();
    let mut shells: Vec<Shell> = Vec::new();
    let mut warnings = Vec::new();

    // Whether the stop rule lets the mode at `pos - 1` go at ridge `s`.
    let wants = |pos: usize, s: f64| -> bool {
        match settings.stop_rule {
            StopRule::Count(k) => pos > k,
            StopRule::Learnability => !settings.boundary.is_learnable(modes[pos - 1].lambda, s / eta),
        }
    };

    let stop_reason = loop {
        if pos == 0 {
            break StopReason::Exhausted;
        }
        if !wants(pos, sigma_c2) {
            break match settings.stop_rule {
                StopRule::Count(_) => StopReason::Count,
                StopRule::Learnability => StopReason::Learnability,
            };
        }
        let first = modes[pos - 1];
        if first.lambda > eps * sigma_c2 {
            if shells.is_empty() {
                return Err(Error::Schedule(format!(
                    "mode {} has λ = {:e} > ε·σ² = {:e}; increase epsilon or sigma2",
                    first.id,
                    first.lambda,
                    eps * sigma_c2
                )));
            }
            break StopReason::PerturbativeBound;
        }
        let mut shell = Shell {
            modes: Vec::new(),
            lambdas: Vec::new(),
            delta_c: 0.0,
            sigma_c2_before: sigma_c2,
            learnable: false,
        };
        while pos > 0
            && shell.len() < settings.max_shell_modes
            && wants(pos, sigma_c2)
            && shell.delta_c + modes[pos - 1].lambda <= eps * sigma_c2
        {
            let m = modes[pos - 1];
            if settings.boundary.is_learnable(m.lambda, sigma_c2 / eta) {
                shell.learnable = true;
                warnings.push(format!(
                    "mode {} (λ = {:e}) is learnable at σ_c²/η = {:e} but was integrated out by {}",
                    m.id,
                    m.lambda,
                    sigma_c2 / eta,
                    settings.stop_rule
                ));
            }
            shell.modes.push(m.id);
            shell.lambdas.push(m.lambda);
            shell.delta_c += m.lambda;
            pos -= 1;
        }
        sigma_c2 += shell.delta_c;
        shells.push(shell);
    };

    Ok(ShellSchedule {
        shells,
        epsilon: eps,
        stop_rule: settings.stop_rule,
        stop_reason,
        retained: pos,
        sigma2,
        eta,
        warnings,
    })
}
