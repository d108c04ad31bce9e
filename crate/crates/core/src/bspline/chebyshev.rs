//! Chebyshev series on the unit interval `[0, 1]`.

use std::f64::consts::PI;

/// `T_0 .. T_{len-1}` evaluated at `eta ∈ [0, 1]` (argument mapped to `2η-1`).
pub fn chebyshev_values(len: usize, eta: f64) -> Vec<f64> {
    let x = 2.0 * eta - 1.0;
    let mut t = Vec::with_capacity(len);
    if len > 0 {
        t.push(1.0);
    }
    if len > 1 {
        t.push(x);
    }
    for k in 2..len {
        let v = 2.0 * x * t[k - 1] - t[k - 2];
        t.push(v);
    }
    t
}

/// Clenshaw evaluation of `Σ c_k T_k(2η - 1)`.
pub fn chebyshev_eval(coeffs: &[f64], eta: f64) -> f64 {
    let x = 2.0 * eta - 1.0;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(&c0) => c0 + x * b1 - b2,
        None => 0.0,
    }
}

/// Chebyshev–Lobatto points `η_j = (1 - cos(π j / n)) / 2`, `j = 0..=n`,
/// ascending in `[0, 1]`.
pub fn lobatto_points(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![0.5];
    }
    (0..=n)
        .map(|j| 0.5 * (1.0 - (PI * j as f64 / n as f64).cos()))
        .collect()
}

/// Matrix mapping values at [`lobatto_points`] to Chebyshev coefficients of
/// the interpolant (degree `n`), stored row-major `(n+1) x (n+1)`.
pub fn values_to_coeffs_matrix(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![1.0];
    }
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    for k in 0..m {
        let ck = if k == 0 || k == n { 2.0 } else { 1.0 };
        for j in 0..m {
            let cj = if j == 0 || j == n { 2.0 } else { 1.0 };
            // Points are ascending in η, i.e. x_j = -cos(π j/n); T_k(-y) = (-1)^k T_k(y).
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            a[k * m + j] = sign * 2.0 / (n as f64 * ck * cj) * (PI * (k * j) as f64 / n as f64).cos();
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_matches_direct_sum() {
        let c = [0.3, -1.0, 0.25, 2.0, 0.5];
        for &eta in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            let t = chebyshev_values(c.len(), eta);
            let direct: f64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
            assert!((direct - chebyshev_eval(&c, eta)).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let c = [1.0, 0.5, -0.25, 0.125, 0.0, 0.3];
        let n = 7;
        let pts = lobatto_points(n);
        let vals: Vec<f64> = pts.iter().map(|&e| chebyshev_eval(&c, e)).collect();
        let a = values_to_coeffs_matrix(n);
        for k in 0..=n {
            let ck: f64 = (0..=n).map(|j| a[k * (n + 1) + j] * vals[j]).sum();
            let want = c.get(k).copied().unwrap_or(0.0);
            assert!((ck - want).abs() < 1e-13, "k={k}");
        }
    }
}
