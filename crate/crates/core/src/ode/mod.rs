//! ODE integration: systems, forcing schedules and the adaptive solver.

mod dual;
mod solver;
mod system;

pub use dual::{Dual, Real};
pub use solver::{solve, solve_with_sensitivities, SolverConfig, Trajectory};
pub use system::{dual_jacobians, initial_state_with_jacobian, ForcingSchedule, OdeSystem};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("non-finite state produced near t = {t}")]
    NonFiniteState { t: f64 },
    #[error("ODE parameters must be finite")]
    NonFiniteParameter,
    #[error("expected {expected} ODE parameters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid output grid: {0}")]
    InvalidGrid(String),
    #[error("invalid forcing schedule: {0}")]
    InvalidForcing(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
