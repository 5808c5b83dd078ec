//! Solution concepts for the discontinuous field: piecewise-smooth
//! (Caratheodory) runs with explicit branch choices, sliding (Filippov) runs,
//! sample-and-hold Euler schemes, stratified runs and the classical check.

mod branch;
mod classical;
mod clss;
mod decide;
mod dynamics;
mod graph;
mod integrator;
mod piecewise;
mod stratified;
mod trajectory;

pub use branch::{ActivationRule, BranchSpec, Target, Wait};
pub use classical::{check_classical, ClassicalReport, CLASSICAL_TOL};
pub use clss::{
    clss_reference_interacting, solve_clss, solve_clss_jump_schedule, solve_clss_with, ClssOptions, ClssRun,
    StepSchedule, WatchStats,
};
pub use graph::{integrate_smooth, resolve_graph_at_m, InteractionGraph, SmoothExit};
pub use integrator::IntegratorOptions;
pub use piecewise::{
    solve_caratheodory, solve_caratheodory_with, solve_filippov_sliding, PinWindow, Release, SlidingPlan,
};
pub use stratified::{
    builtin_stratification_3agents, solve_stratified, solve_stratified_with, toy_stratification, Cell, CellKind, Stratification, ToyVariant,
};
pub use trajectory::{events_path, EventCause, EventRecord, Segment, Trajectory};

use crate::model::{InteractionKernel, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("integrator error: {0}")]
    Integrator(String),
    #[error("sliding infeasible: {0}")]
    Sliding(String),
    #[error("no consistent continuation: {0}")]
    Inconsistent(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cap on the default output grid.
pub const MAX_SAMPLES: usize = 2_000_000;

/// Knobs shared by the event-driven solvers.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Output grid spacing; `None` picks `min(0.01, 0.015 rate^(-5/4))`,
    /// coarsened if needed to keep at most [`MAX_SAMPLES`] samples.
    pub sample_dt: Option<f64>,
    pub integrator: IntegratorOptions,
    /// Pairs with `|theta - 1|` below this count as sitting on the boundary.
    pub event_band: f64,
    /// Half-rates of `theta` below this are resolved by a short probe.
    pub flat_tol: f64,
    pub max_events: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            sample_dt: None,
            integrator: IntegratorOptions::default(),
            event_band: 1e-9,
            flat_tol: 1e-9,
            max_events: 10_000,
        }
    }
}

impl SolveOptions {
    /// The extra `rate^(-1/4)` keeps five-point differences of the output
    /// about equally accurate for fast and slow kernels.
    pub(crate) fn sample_dt_for(&self, rate_scale: f64, horizon: f64) -> f64 {
        self.sample_dt.unwrap_or_else(|| {
            let dt = 0.01f64.min(0.015 * rate_scale.max(1e-300).powf(-1.25));
            dt.max(horizon / MAX_SAMPLES as f64)
        })
    }

    /// Tolerances divided by the largest multiplicity: a lumped group of `m`
    /// agents moves its neighbours `m` times faster, and velocities (not just
    /// positions) have to stay accurate for the derivative checks.
    pub(crate) fn integrator_for(&self, kernel: &InteractionKernel) -> IntegratorOptions {
        let m = kernel.multiplicity().map_or(1.0, |m| m.iter().copied().fold(1.0, f64::max));
        let mut o = self.integrator.clone();
        o.rtol = (o.rtol / m).max(1e-15);
        o.atol = (o.atol / m).max(1e-15);
        o
    }
}
