use serde::{Deserialize, Serialize};

use super::{SolverError, Trajectory};
use crate::analysis::fd::velocity_at;
use crate::model::rhs;
use crate::scenarios::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    /// Largest `|x'(t) - f(x(t))|` (max norm) over the samples.
    pub max_residual: f64,
    pub at_time: f64,
    pub tol: f64,
    pub classical: bool,
}

/// Checks the equation at every sample, event times included, with
/// five-point differences that ignore the segment structure: a kink at an
/// event shows up as a residual of the size of the velocity jump.
pub fn check_classical(traj: &Trajectory, scenario: &Scenario, tol: f64) -> Result<ClassicalReport, SolverError> {
    if traj.len() < 5 {
        return Err(SolverError::Argument("need at least five samples to differentiate".into()));
    }
    if traj.n_agents() != scenario.n_agents() || traj.dim != scenario.dim() {
        return Err(SolverError::Argument("trajectory and scenario shapes differ".into()));
    }
    let mut worst = (0.0f64, 0.0);
    for k in 0..traj.len() {
        let v = velocity_at(traj, k, 0, traj.len() - 1);
        let f = rhs(&traj.states[k], &scenario.kernel, scenario.variant)?;
        let r = v.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if r > worst.0 {
            worst = (r, traj.times[k]);
        }
    }
    Ok(ClassicalReport { max_residual: worst.0, at_time: worst.1, tol, classical: worst.0 <= tol })
}

/// Default residual band for [`check_classical`] on trajectories sampled
/// every 0.01 time units.
pub const CLASSICAL_TOL: f64 = 1e-5;
