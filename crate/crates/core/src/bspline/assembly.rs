//! Univariate Galerkin matrices with Chebyshev-series weights.

use super::chebyshev::chebyshev_eval;
use super::quadrature::gauss_legendre;
use super::space::SplineSpace1D;
use crate::error::{mismatch, Result};
use crate::tucker::BandedMatrix;

/// Gauss points per element used for a weight with `len` Chebyshev
/// coefficients: `p + 1 + ceil((len - 1) / 2)`.
pub fn points_per_element(degree: usize, weight_len: usize) -> usize {
    degree + 1 + weight_len.saturating_sub(1).div_ceil(2)
}

fn check_compatible(row: &SplineSpace1D, col: &SplineSpace1D) -> Result<()> {
    if row.degree() != col.degree() || row.n_el() != col.n_el() {
        return Err(mismatch(
            "weighted_matrix",
            format!(
                "spaces differ: degree {} vs {}, elements {} vs {}",
                row.degree(),
                col.degree(),
                row.n_el(),
                col.n_el()
            ),
        ));
    }
    Ok(())
}

/// `A[i, j] = ∫ ∂^{d_row} b_i(η) ∂^{d_col} b_j(η) w(η) dη` with `b_i` from
/// `row` and `b_j` from `col`, where `w` is the Chebyshev series `weight`.
pub fn weighted_matrix(
    row: &SplineSpace1D,
    col: &SplineSpace1D,
    d_row: usize,
    d_col: usize,
    weight: &[f64],
) -> Result<BandedMatrix> {
    check_compatible(row, col)?;
    let p = row.degree();
    let (off_r, off_c) = (row.first_index() as isize, col.first_index() as isize);
    let lower = (p as isize - off_r + off_c).max(0) as usize;
    let upper = (p as isize + off_r - off_c).max(0) as usize;
    let mut a = BandedMatrix::zeros(row.dim(), col.dim(), lower, upper);
    let q = points_per_element(p, weight.len());
    let (gx, gw) = gauss_legendre(q);
    let nder = d_row.max(d_col);
    let breaks = row.breakpoints();
    for e in 0..row.n_el() {
        let (lo, hi) = (breaks[e], breaks[e + 1]);
        let h = 0.5 * (hi - lo);
        for (xq, wq) in gx.iter().zip(&gw) {
            let x = lo + h * (xq + 1.0);
            let w = h * wq * chebyshev_eval(weight, x);
            if w == 0.0 {
                continue;
            }
            let (first, ders) = row.eval_local(x, nder)?;
            for (a_loc, &vi) in ders[d_row].iter().enumerate() {
                let Some(i) = row.reduced_index(first + a_loc) else {
                    continue;
                };
                for (b_loc, &vj) in ders[d_col].iter().enumerate() {
                    if let Some(j) = col.reduced_index(first + b_loc) {
                        // Product order keeps symmetric pairings bitwise symmetric.
                        a.add_at(i, j, w * (vi * vj));
                    }
                }
            }
        }
    }
    Ok(a)
}

/// `v[i] = ∫ b_i(η) w(η) dη`.
pub fn weighted_vector(space: &SplineSpace1D, weight: &[f64]) -> Result<Vec<f64>> {
    let mut v = vec![0.0; space.dim()];
    let q = points_per_element(space.degree(), weight.len());
    let (gx, gw) = gauss_legendre(q);
    let breaks = space.breakpoints();
    for e in 0..space.n_el() {
        let (lo, hi) = (breaks[e], breaks[e + 1]);
        let h = 0.5 * (hi - lo);
        for (xq, wq) in gx.iter().zip(&gw) {
            let x = lo + h * (xq + 1.0);
            let w = h * wq * chebyshev_eval(weight, x);
            for (i, b) in space.eval_basis(x, 0)? {
                v[i] += w * b;
            }
        }
    }
    Ok(v)
}

/// Stiffness and mass matrices `(K, M)` of the space, assembled with the
/// same quadrature as [`weighted_matrix`] with unit weight.
pub fn assemble_pencil(space: &SplineSpace1D) -> Result<(BandedMatrix, BandedMatrix)> {
    Ok((
        weighted_matrix(space, space, 1, 1, &[1.0])?,
        weighted_matrix(space, space, 0, 0, &[1.0])?,
    ))
}
