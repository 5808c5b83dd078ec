//! Property checks with the tolerances used throughout the test suite.

use std::fmt;

use clap::ValueEnum;
use serde::Serialize;

use hkflow::analysis::{
    barycenter_drift, cluster_report, filippov_inclusion_residual, hull_contractivity_report, lyapunov_monotone_check,
    CLUSTER_TOL, SEP_TOL,
};
use hkflow::model::InteractionKernel;
use hkflow::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    P1,
    Hull,
    Lyapunov,
    Inclusion,
    Cluster,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = format!("{:?}", self.check).to_lowercase();
        write!(f, "{:<10} {} value {:.3e} (tol {:.0e})", name, if self.pass { "pass" } else { "FAIL" }, self.value, self.tol)?;
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

fn failed(check: Check, tol: f64, note: String) -> CheckResult {
    CheckResult { check, value: f64::NAN, tol, pass: false, note }
}

pub fn run_checks(traj: &Trajectory, kernel: &InteractionKernel, which: &[Check], stride: Option<usize>) -> Vec<CheckResult> {
    let horizon = traj.horizon();
    which
        .iter()
        .map(|&check| match check {
            Check::P1 => {
                let tol = 1e-9 * (1.0 + horizon);
                let v = barycenter_drift(traj);
                CheckResult { check, value: v, tol, pass: v <= tol, note: String::new() }
            }
            Check::Hull => {
                let tol = 1e-8;
                let stride = stride.unwrap_or((traj.len() / 20_000).max(1));
                match hull_contractivity_report(traj, stride) {
                    Ok(v) => CheckResult { check, value: v, tol, pass: v <= tol, note: String::new() },
                    Err(e) => failed(check, tol, e.to_string()),
                }
            }
            Check::Lyapunov => {
                let tol = 1e-9;
                let v = lyapunov_monotone_check(traj, kernel);
                CheckResult { check, value: v, tol, pass: v <= tol, note: String::new() }
            }
            Check::Inclusion => {
                let tol = 1e-6;
                match filippov_inclusion_residual(traj, kernel) {
                    Ok(r) => CheckResult {
                        check,
                        value: r.max_residual,
                        tol,
                        pass: r.max_residual <= tol,
                        note: format!("at t = {}", r.at_time),
                    },
                    Err(e) => failed(check, tol, e.to_string()),
                }
            }
            Check::Cluster => match cluster_report(traj, CLUSTER_TOL, SEP_TOL) {
                Ok(r) => CheckResult {
                    check,
                    value: r.violations.len() as f64,
                    tol: 0.0,
                    pass: r.p2_clean(),
                    note: format!("{} clusters", r.count()),
                },
                Err(e) => failed(check, 0.0, e.to_string()),
            },
        })
        .collect()
}
