//! Simulation of bounded-confidence (Hegselmann-Krause) opinion dynamics under
//! several notions of solution for the discontinuous vector field
//!
//! ```text
//! dx_i/dt = sum_j a_ij(|x_i - x_j|) (x_j - x_i),   a_ij(r) = phi_ij(r) for r < 1, 0 for r > 1,
//! ```
//!
//! together with the combinatorics of the non-unique branches and checkers
//! for the structural properties that solutions share.

pub mod analysis;
pub mod enumeration;
pub mod geometry;
pub mod model;
pub mod scenarios;
pub mod solvers;

pub use geometry::{CrossingClass, Partition};
pub use model::{Configuration, InteractionKernel, ModelVariant, Pair, PairKernel, VelocitySelection};
pub use scenarios::Scenario;
pub use solvers::{BranchSpec, SolverError, Trajectory};
