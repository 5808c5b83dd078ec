//! The bounded-confidence vector field, its two conventions at distance one,
//! and the convexified (Filippov) velocity set.

mod config;
mod field;
mod kernel;

pub use config::{Configuration, Pair};
pub(crate) use config::dist_sq;
pub(crate) use field::{accumulate, fmt_pairs};
pub use field::{
    boundary_pairs, filippov_velocity, filippov_velocity_with_tol, rhs, sublinear_bound_check, weight, BoundReport,
    ModelVariant, VelocitySelection, BOUNDARY_TOL,
};
pub use kernel::{InteractionKernel, PairKernel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coordinate {0} is not finite")]
    NonFinite(usize),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("invalid selection: {0}")]
    Selection(String),
}
