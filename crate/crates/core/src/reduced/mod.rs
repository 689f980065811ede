//! The finite-dimensional reduced system.

pub mod balance;
pub mod critical;
pub mod system;

pub use balance::{
    beta_admissible, beta_threshold, lambda_and_delta, Balance, ReducedConstants, DEFAULT_MARGIN,
};
pub use critical::{find_critical_points, CriticalPoint, DescentOptions, ExactBall, RobinSource, Signature, WosRobin};
pub use system::{reduced_residual, reduced_solve, ReducedResidual, ReducedSolution, SolveOptions, SystemConfig};
