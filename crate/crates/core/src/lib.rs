//! Nematic liquid-crystal flow on a MAC grid with boundary control of the director.

pub mod adjoint;
pub mod cli;
pub mod control;
pub mod error;
pub mod field;
pub mod grid;
pub mod lifting;
pub mod linearized;
pub mod norms;
pub mod ops;
pub mod scenario;
pub mod spectral;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use field::{BoundaryTrace, DirectorField, Field, ScalarField, TensorField, VectorField2D};
pub use grid::{GridSpec, PhysParams};
