//! Separable approximation of geometry coefficients and assembly of the
//! Tucker-format Galerkin system.

mod lift;
mod separable;
mod system;

pub use lift::{dirichlet_lift, full_spaces, lift_vector, BoundaryData, Face};
pub use separable::{approximate_function, approximate_function_with, ApproxOptions, SeparableFunction3};
pub use system::{
    approximate_load, approximate_metric, assemble_operator, assemble_rhs, assemble_system, assembly_tolerance,
    AssembledSystem, CoefficientGrid,
};
