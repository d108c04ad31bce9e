//! Small dense linear-algebra helpers built on nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{mismatch, Error, Result};

/// Left singular vectors and singular values (descending) of `a`.
///
/// Wide matrices go through a QR factorization of the transpose first so the
/// SVD only ever sees a square factor.
pub fn left_singular(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (DMatrix::zeros(m, 0), Vec::new());
    }
    let base = if n > m {
        let qr = a.transpose().qr();
        qr.r().transpose()
    } else {
        a.clone()
    };
    let svd = base.svd(true, false);
    let u = svd.u.expect("requested U");
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut us = DMatrix::zeros(m, idx.len());
    let mut sig = Vec::with_capacity(idx.len());
    for (c, &i) in idx.iter().enumerate() {
        us.set_column(c, &u.column(i));
        sig.push(s[i]);
    }
    (us, sig)
}

/// Smallest `k >= 1` such that the tail `sqrt(Σ_{i>=k} σ_i²)` is within
/// `budget`.
pub fn rank_for_budget(sigma: &[f64], budget: f64) -> usize {
    if sigma.is_empty() {
        return 0;
    }
    let mut tail = 0.0;
    let mut k = sigma.len();
    while k > 1 {
        let t = tail + sigma[k - 1] * sigma[k - 1];
        if t.sqrt() <= budget {
            tail = t;
            k -= 1;
        } else {
            break;
        }
    }
    k
}

/// Thin QR factorization. For `n x m` input returns `Q` with `min(n, m)`
/// orthonormal columns and `R` of size `min(n, m) x m`.
pub fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return (DMatrix::zeros(n, 0), DMatrix::zeros(0, m));
    }
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// Generalized symmetric-definite eigenproblem `K u = λ M u`.
///
/// Returns eigenvalues in ascending order and eigenvectors normalized so
/// that `Uᵀ M U = I`.
pub fn generalized_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.shape() != (n, n) || m.shape() != (n, n) {
        return Err(mismatch(
            "generalized_eigen",
            format!("K {:?}, M {:?}", k.shape(), m.shape()),
        ));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix".into()))?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let linv_k = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut w = DMatrix::zeros(n, n);
    let mut lam = Vec::with_capacity(n);
    for (c, &i) in idx.iter().enumerate() {
        w.set_column(c, &eig.eigenvectors.column(i));
        lam.push(eig.eigenvalues[i]);
    }
    let u = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor".into()))?;
    Ok((lam, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_rank_keeps_at_least_one() {
        assert_eq!(rank_for_budget(&[1.0, 0.5, 0.1], 10.0), 1);
        assert_eq!(rank_for_budget(&[1.0, 0.5, 0.1], 0.1), 2);
        assert_eq!(rank_for_budget(&[1.0, 0.5, 0.1], 0.0), 3);
        assert_eq!(rank_for_budget(&[], 1.0), 0);
    }

    #[test]
    fn wide_and_tall_svd_agree() {
        let a = DMatrix::from_fn(3, 7, |i, j| ((i * 7 + j) as f64).sin());
        let (u, s) = left_singular(&a);
        let (_, s2) = left_singular(&a.transpose());
        for (x, y) in s.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-12);
        }
        let utu = u.transpose() * &u;
        assert!((utu - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn generalized_eigen_normalization() {
        let n = 5;
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                4.0
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let (lam, u) = generalized_eigen(&k, &m).unwrap();
        let utmu = u.transpose() * &m * &u;
        assert!((utmu - DMatrix::identity(n, n)).norm() < 1e-12);
        let utku = u.transpose() * &k * &u;
        for i in 0..n {
            assert!((utku[(i, i)] - lam[i]).abs() < 1e-12);
        }
        assert!(lam.windows(2).all(|w| w[0] <= w[1]));
    }
}
