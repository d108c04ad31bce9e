use nalgebra::{DMatrix, Vector3};

use crate::bspline::geometry::invert_jacobian;
use crate::bspline::{composite_gauss, GeometryMap, SplineSpace1D};
use crate::error::{mismatch, Error, Result};
use crate::tucker::TuckerTensor3;

/// Largest number of quadrature points [`error_norms`] will visit.
pub const ERROR_GRID_GUARD: usize = 1 << 28;

fn storage_terms(x: &TuckerTensor3) -> (u128, u128) {
    let r = x.rank().0;
    let n = x.dims();
    let num = (r[0] * r[1] * r[2] + r[0] * n[0] + r[1] * n[1] + r[2] * n[2]) as u128;
    let den = (n[0] * n[1] * n[2]) as u128;
    (num, den)
}

/// `100·(r1 r2 r3 + Σ r_t n_t) / (n1 n2 n3)`, with an exact integer
/// numerator and one rounding in the final division.
pub fn memory_compression(x: &TuckerTensor3) -> f64 {
    let (num, den) = storage_terms(x);
    (100 * num) as f64 / den as f64
}

/// Compression of a block vector: summed storage over summed full size.
pub fn memory_compression_blocks(x: &[TuckerTensor3]) -> f64 {
    let (num, den) = x
        .iter()
        .map(storage_terms)
        .fold((0u128, 0u128), |(a, b), (c, d)| (a + c, b + d));
    if den == 0 {
        return 0.0;
    }
    (100 * num) as f64 / den as f64
}

/// Basis values and first derivatives at the quadrature points of one
/// direction, already multiplied into the solution factor.
struct Direction {
    weights: Vec<f64>,
    points: Vec<f64>,
    val: DMatrix<f64>,
    der: DMatrix<f64>,
}

fn direction(space: &SplineSpace1D, factor: &DMatrix<f64>) -> Result<Direction> {
    let (points, weights) = composite_gauss(&space.breakpoints(), space.degree() + 2);
    let n = space.dim();
    let mut b = DMatrix::zeros(points.len(), n);
    let mut d = DMatrix::zeros(points.len(), n);
    for (q, &x) in points.iter().enumerate() {
        for (i, v) in space.eval_basis(x, 0)? {
            b[(q, i)] = v;
        }
        for (i, v) in space.eval_basis(x, 1)? {
            d[(q, i)] = v;
        }
    }
    Ok(Direction {
        weights,
        points,
        val: b * factor,
        der: d * factor,
    })
}

/// `(‖u - u_h‖_{L²}, |u - u_h|_{H¹})` on the physical domain, where `u_h`
/// has coefficients `x` in `spaces` and `exact` returns `(u, ∇u)` at a
/// physical point.
pub fn error_norms(
    x: &TuckerTensor3,
    spaces: &[SplineSpace1D; 3],
    geo: &dyn GeometryMap,
    exact: &dyn Fn([f64; 3]) -> (f64, [f64; 3]),
) -> Result<(f64, f64)> {
    let want = [spaces[0].dim(), spaces[1].dim(), spaces[2].dim()];
    if x.dims() != want {
        return Err(mismatch(
            "error_norms",
            format!("tensor {:?}, spaces {want:?}", x.dims()),
        ));
    }
    let dirs: Vec<Direction> = (0..3)
        .map(|t| direction(&spaces[t], x.factor(t)))
        .collect::<Result<_>>()?;
    let total = dirs.iter().map(|d| d.points.len()).product::<usize>();
    if total > ERROR_GRID_GUARD {
        return Err(Error::MemoryGuard {
            requested: total,
            limit: ERROR_GRID_GUARD,
        });
    }
    let r = x.rank().0;
    let core = x.core().data();
    let slab = r[0] * r[1];
    let contract = |row: nalgebra::DMatrixView<f64>| {
        let mut c = DMatrix::zeros(r[0], r[1]);
        for k in 0..r[2] {
            let s = DMatrix::from_column_slice(r[0], r[1], &core[k * slab..(k + 1) * slab]);
            c += s * row[(0, k)];
        }
        c
    };
    let (mut l2, mut h1) = (0.0, 0.0);
    for (k, &z) in dirs[2].points.iter().enumerate() {
        let c = contract(dirs[2].val.rows(k, 1));
        let c3 = contract(dirs[2].der.rows(k, 1));
        let g1c = &dirs[0].val * &c;
        let u = &g1c * dirs[1].val.transpose();
        let u1 = &dirs[0].der * &c * dirs[1].val.transpose();
        let u2 = &g1c * dirs[1].der.transpose();
        let u3 = &dirs[0].val * &c3 * dirs[1].val.transpose();
        for (j, &y) in dirs[1].points.iter().enumerate() {
            for (i, &xq) in dirs[0].points.iter().enumerate() {
                let eta = [xq, y, z];
                let (jinv, det) = invert_jacobian(&geo.jacobian(eta), eta)?;
                let w = det * dirs[0].weights[i] * dirs[1].weights[j] * dirs[2].weights[k];
                let grad = jinv.transpose() * Vector3::new(u1[(i, j)], u2[(i, j)], u3[(i, j)]);
                let (ue, ge) = exact(geo.eval(eta));
                l2 += w * (ue - u[(i, j)]).powi(2);
                h1 += w * (Vector3::from(ge) - grad).norm_squared();
            }
        }
    }
    Ok((l2.sqrt(), h1.sqrt()))
}
