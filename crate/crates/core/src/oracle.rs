//! Dense brute-force references for small instances.
//!
//! Everything here materializes full matrices and is guarded by
//! [`DENSE_GUARD`] unknowns. Nothing reuses the Tucker kernels, so the
//! results are independent checks of them.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::bspline::{gauss_legendre, SplineSpace1D};
use crate::error::{Error, Result};
use crate::solver::{BlockMap, BlockOperator};
use crate::tucker::{TuckerOperator3, TuckerTensor3};

/// Largest number of unknowns any oracle will handle.
pub const DENSE_GUARD: usize = 4096;

fn guard(n: usize) -> Result<()> {
    if n > DENSE_GUARD {
        return Err(Error::MemoryGuard {
            requested: n,
            limit: DENSE_GUARD,
        });
    }
    Ok(())
}

/// `Σ core[a,b,c] C3_c ⊗ C2_b ⊗ C1_a`, built with explicit Kronecker
/// products.
pub fn dense_kron_operator(op: &TuckerOperator3) -> Result<DMatrix<f64>> {
    let (rd, cd) = (op.row_dims(), op.col_dims());
    guard(rd.iter().product::<usize>().max(cd.iter().product()))?;
    let f: Vec<Vec<DMatrix<f64>>> = (0..3)
        .map(|t| op.factors(t).iter().map(|m| m.to_dense()).collect())
        .collect();
    let core = op.core();
    let [r0, r1, r2] = core.dims();
    let mut out = DMatrix::zeros(rd.iter().product(), cd.iter().product());
    for c in 0..r2 {
        for b in 0..r1 {
            let outer = f[2][c].kronecker(&f[1][b]);
            for a in 0..r0 {
                let s = core.get(a, b, c);
                if s != 0.0 {
                    out += outer.kronecker(&f[0][a]) * s;
                }
            }
        }
    }
    Ok(out)
}

/// Dense vector of a Tucker tensor, colexicographic, via explicit
/// Kronecker products of the factor columns.
pub fn dense_vector(x: &TuckerTensor3) -> Result<DVector<f64>> {
    let n = x.dims();
    guard(n.iter().product())?;
    let core = x.core();
    let [r0, r1, r2] = core.dims();
    let mut out = DVector::zeros(n.iter().product());
    for c in 0..r2 {
        for b in 0..r1 {
            let outer = x.factor(2).column(c).kronecker(&x.factor(1).column(b));
            for a in 0..r0 {
                out += outer.kronecker(&x.factor(0).column(a)) * core.get(a, b, c);
            }
        }
    }
    Ok(out)
}

/// Dense matrix of a block operator, components stacked in order.
pub fn dense_block_operator(op: &BlockOperator) -> Result<DMatrix<f64>> {
    let dims: Vec<usize> = op.block_dims().iter().map(|d| d.iter().product()).collect();
    guard(dims.iter().sum())?;
    let offs: Vec<usize> = dims
        .iter()
        .scan(0, |s, &d| {
            *s += d;
            Some(*s - d)
        })
        .collect();
    let n: usize = dims.iter().sum();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..op.size() {
        for j in 0..op.size() {
            if let Some(b) = op.block(i, j) {
                out.view_mut((offs[i], offs[j]), (dims[i], dims[j]))
                    .copy_from(&dense_kron_operator(b)?);
            }
        }
    }
    Ok(out)
}

/// Values and first derivatives of every retained basis function of
/// `space` at `x`, as `(index, value, derivative)`.
fn basis_at(space: &SplineSpace1D, x: f64) -> Result<Vec<(usize, f64, f64)>> {
    let v = space.eval_basis(x, 0)?;
    let d = space.eval_basis(x, 1)?;
    Ok(v.into_iter().zip(d).map(|((i, a), (_, b))| (i, a, b)).collect())
}

/// Element-loop Galerkin assembly of
/// `A[i, j] = ∫ Σ_{k,l} c(η)[k][l] ∂_k b^trial_j ∂_l b^test_i dη` and
/// `f[i] = ∫ w(η) b^test_i dη`, with `q` Gauss points per element and
/// direction. `c` is indexed `[trial derivative][test derivative]`.
pub fn dense_galerkin(
    test: &[SplineSpace1D; 3],
    trial: &[SplineSpace1D; 3],
    coeff: &dyn Fn([f64; 3]) -> Matrix3<f64>,
    weight: &dyn Fn([f64; 3]) -> f64,
    q: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let nt = [test[0].dim(), test[1].dim(), test[2].dim()];
    let ns = [trial[0].dim(), trial[1].dim(), trial[2].dim()];
    guard(nt.iter().product::<usize>().max(ns.iter().product()))?;
    let (gx, gw) = gauss_legendre(q);
    // Quadrature points of every element, per direction.
    let pts: Vec<Vec<Vec<(f64, f64)>>> = (0..3)
        .map(|t| {
            let br = test[t].breakpoints();
            br.windows(2)
                .map(|e| {
                    let h = e[1] - e[0];
                    gx.iter()
                        .zip(&gw)
                        .map(|(x, w)| (e[0] + 0.5 * h * (x + 1.0), 0.5 * h * w))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut a = DMatrix::zeros(nt.iter().product(), ns.iter().product());
    let mut f = DVector::zeros(nt.iter().product());
    let lin = |n: [usize; 3], i: [usize; 3]| i[0] + n[0] * (i[1] + n[1] * i[2]);
    let expand = |sp: &[SplineSpace1D; 3], eta: [f64; 3]| -> Result<Vec<(usize, [f64; 3], f64)>> {
        let b: Vec<_> = (0..3).map(|t| basis_at(&sp[t], eta[t])).collect::<Result<_>>()?;
        let n = [sp[0].dim(), sp[1].dim(), sp[2].dim()];
        let mut out = Vec::new();
        for &(i3, v3, d3) in &b[2] {
            for &(i2, v2, d2) in &b[1] {
                for &(i1, v1, d1) in &b[0] {
                    out.push((
                        lin(n, [i1, i2, i3]),
                        [d1 * v2 * v3, v1 * d2 * v3, v1 * v2 * d3],
                        v1 * v2 * v3,
                    ));
                }
            }
        }
        Ok(out)
    };
    for e3 in &pts[2] {
        for e2 in &pts[1] {
            for e1 in &pts[0] {
                for &(z, w3) in e3 {
                    for &(y, w2) in e2 {
                        for &(x, w1) in e1 {
                            let eta = [x, y, z];
                            let w = w1 * w2 * w3;
                            let c = coeff(eta);
                            let tb = expand(test, eta)?;
                            let sb = expand(trial, eta)?;
                            let fw = weight(eta) * w;
                            for &(i, gi, vi) in &tb {
                                f[i] += fw * vi;
                                // Σ_l c[k][l] ∂_l test_i, per k.
                                let ci: [f64; 3] = std::array::from_fn(|k| (0..3).map(|l| c[(k, l)] * gi[l]).sum());
                                for &(j, gj, _) in &sb {
                                    a[(i, j)] += w * (ci[0] * gj[0] + ci[1] * gj[1] + ci[2] * gj[2]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((a, f))
}

/// Direct solve of an SPD system by Cholesky.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(crate::error::mismatch(
            "dense_solve",
            format!("{}x{} matrix, vector of {}", a.nrows(), a.ncols(), b.len()),
        ));
    }
    guard(a.nrows())?;
    let asym = (a - a.transpose()).amax();
    if asym > 1e-10 * a.amax() {
        return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e}")));
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
    Ok(chol.solve(b))
}
