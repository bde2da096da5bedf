//! Cost functional, admissible controls and the projected-gradient optimizer.

pub mod admissible;
pub mod cost;
pub mod optimize;

pub use admissible::{admissible_project, n_space, n_time, BoundaryControl};
pub use cost::{cost_evaluate, gamma_norm, sigma_dot, sigma_norm, CostSpec};
pub use optimize::{control_gradient, optimize, projection_formula_residual, stationarity, IterationRecord, OptimizeOptions, OptimizeResult, ReducedProblem};
