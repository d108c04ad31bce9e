//! Low-rank Tucker-format solvers for isogeometric Galerkin systems on
//! trivariate B-spline domains.

pub mod assembly;
pub mod bspline;
pub mod elasticity;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod precond;
pub mod problems;
pub mod sampling;
pub mod solver;
pub mod study;
pub mod tucker;

pub use bspline::{BoundaryCondition, GeometryMap, GeometryPreset, SplineSpace1D};
pub use error::{Error, Result};
pub use solver::{SolveReport, SolveStatus, Tolerance, TpcgConfig};
pub use tucker::{BandedMatrix, DenseTensor3, MultilinearRank, TuckerOperator3, TuckerSum, TuckerTensor3};
