//! Univariate B-spline spaces, quadrature, weighted Galerkin matrices and
//! geometry maps.

mod assembly;
pub mod chebyshev;
pub mod geometry;
mod quadrature;
mod space;

pub use assembly::{assemble_pencil, points_per_element, weighted_matrix, weighted_vector};
pub use geometry::{metric, metric_and_weight, validate_geometry, GeometryMap, GeometryPreset, PolynomialMap};
pub use quadrature::{composite_gauss, gauss_legendre};
pub use space::{BoundaryCondition, SplineSpace1D};
