//! Wilsonian shell integration over the eigenvalue tail.
//!
//! Modes are integrated out from the smallest eigenvalue upward. Each shell
//! adds its eigenvalue mass to the ridge, `σ_c² = σ² + c`, and for
//! non-Gaussian features also reweights the loss spatially. The flow stops
//! at the learnability threshold `λ = σ_c²/η` or after a fixed count.

mod schedule;
mod state;
mod weight;
mod weighted;

pub use schedule::{schedule_shells, FlowSettings, Shell, ShellSchedule, StopReason, StopRule};
pub use state::{
    effective_theory, gaussian_flow_step, run_gaussian_flow, EffectiveTheory, FlowFlag, FlowRun,
    FlowState, ShellRecord,
};
pub use weight::{WeightFunction, WeightTerm};
pub use weighted::{
    run_weighted_flow, weighted_flow_step, ADiagnostic, BMeasure, WeightPerturbation,
    WeightedFlowOptions, WeightedFlowRun, B_MEAN_TOL, W_MEAN_TOL,
};
