use nalgebra::DMatrix;

use super::system::{assemble_operator, CoefficientGrid};
use crate::bspline::{BoundaryCondition, SplineSpace1D};
use crate::error::{mismatch, Error, Result};
use crate::linalg::left_singular;
use crate::tucker::{truncate_sum, TuckerSum, TuckerTensor3};

/// A face of the parametric cube: `η_direction = end` with `end ∈ {0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Face {
    pub direction: usize,
    pub end: usize,
}

/// Dirichlet data on one face, given by coefficients of the full
/// (unconstrained) spline basis.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryData {
    Zero,
    /// Constant value on the face.
    Constant {
        face: Face,
        value: f64,
    },
    /// Coefficient matrix over the two tangential directions (lower
    /// direction index along rows). Must have numerical rank one.
    Coefficients {
        face: Face,
        values: DMatrix<f64>,
    },
}

/// Spaces with every basis function retained.
pub fn full_spaces(spaces: &[SplineSpace1D; 3]) -> Result<[SplineSpace1D; 3]> {
    let f = |s: &SplineSpace1D| s.with_bc([BoundaryCondition::Neumann; 2]);
    Ok([f(&spaces[0])?, f(&spaces[1])?, f(&spaces[2])?])
}

/// Coefficient vector `g̃` of the lifted boundary data on the full spaces,
/// or `None` for zero data.
pub fn lift_vector(full: &[SplineSpace1D; 3], data: &BoundaryData) -> Result<Option<TuckerTensor3>> {
    let (face, tangential): (Face, [Vec<f64>; 2]) = match data {
        BoundaryData::Zero => return Ok(None),
        BoundaryData::Constant { face, value } => {
            let tdirs = tangential_dirs(face)?;
            (
                *face,
                [
                    vec![*value; full[tdirs[0]].full_dim()],
                    vec![1.0; full[tdirs[1]].full_dim()],
                ],
            )
        }
        BoundaryData::Coefficients { face, values } => {
            let tdirs = tangential_dirs(face)?;
            let want = (full[tdirs[0]].full_dim(), full[tdirs[1]].full_dim());
            if values.shape() != want {
                return Err(mismatch(
                    "lift_vector",
                    format!("face data {:?}, expected {want:?}", values.shape()),
                ));
            }
            let (u, s) = left_singular(values);
            let rank = s.iter().filter(|&&v| v > 1e-12 * s[0]).count();
            if s.is_empty() || s[0] == 0.0 {
                return Ok(None);
            }
            if rank > 1 {
                return Err(Error::NonSeparableBoundaryData { rank });
            }
            let a: Vec<f64> = u.column(0).iter().copied().collect();
            // values ≈ a bᵀ with b = valuesᵀ a.
            let b: Vec<f64> = (values.transpose() * u.column(0)).iter().copied().collect();
            (*face, [a, b])
        }
    };
    let tdirs = tangential_dirs(&face)?;
    let mut vecs: [Vec<f64>; 3] = Default::default();
    let n = full[face.direction].full_dim();
    let mut normal = vec![0.0; n];
    normal[if face.end == 0 { 0 } else { n - 1 }] = 1.0;
    vecs[face.direction] = normal;
    let [t0, t1] = tangential;
    vecs[tdirs[0]] = t0;
    vecs[tdirs[1]] = t1;
    Ok(Some(TuckerTensor3::rank_one(1.0, [&vecs[0], &vecs[1], &vecs[2]])))
}

fn tangential_dirs(face: &Face) -> Result<[usize; 2]> {
    if face.direction > 2 || face.end > 1 {
        return Err(Error::InvalidInput(format!("invalid face {face:?}")));
    }
    let mut d = (0..3).filter(|&t| t != face.direction);
    Ok([d.next().unwrap(), d.next().unwrap()])
}

/// Right-hand side corrected for non-homogeneous Dirichlet data:
/// `f̃ - A_∂ g̃`, where `A_∂` pairs the constrained test space with the
/// full trial space.
pub fn dirichlet_lift(
    spaces: &[SplineSpace1D; 3],
    coeffs: &CoefficientGrid,
    rhs: &TuckerTensor3,
    data: &BoundaryData,
) -> Result<TuckerTensor3> {
    let full = full_spaces(spaces)?;
    let Some(g) = lift_vector(&full, data)? else {
        return Ok(rhs.clone());
    };
    let boundary_op = assemble_operator(spaces, &full, coeffs)?;
    let mut s = TuckerSum::from_tucker(rhs);
    s.append(&boundary_op.apply_lazy(&g)?, -1.0)?;
    // Exact up to rounding; only removes redundant directions.
    truncate_sum(&s, 1e-14)
}
