use nalgebra::DMatrix;

use crate::bspline::chebyshev::{chebyshev_values, lobatto_points, values_to_coeffs_matrix};
use crate::error::{Error, Result};
use crate::sampling::halton_points;
use crate::tucker::{sthosvd, DenseTensor3, MultilinearRank, TuckerTensor3};

/// Trivariate function in separable Chebyshev form:
/// `g(η) ≈ Σ core[a,b,c] φ1_a(η₁) φ2_b(η₂) φ3_c(η₃)`, where column `a` of
/// factor 1 holds the Chebyshev coefficients of `φ1_a` on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableFunction3 {
    coeffs: TuckerTensor3,
    validation_error: f64,
}

/// Controls for [`approximate_function_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxOptions {
    /// Starting polynomial degree per direction.
    pub initial_degree: usize,
    /// Maximum number of interpolation points per direction.
    pub max_points: usize,
    /// Number of Halton validation points.
    pub validation_points: usize,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            initial_degree: 8,
            max_points: 129,
            validation_points: 512,
        }
    }
}

impl SeparableFunction3 {
    /// The zero function (rank (0,0,0)).
    pub fn zero() -> Self {
        let coeffs = TuckerTensor3::new(
            DenseTensor3::zeros([0, 0, 0]),
            [DMatrix::zeros(1, 0), DMatrix::zeros(1, 0), DMatrix::zeros(1, 0)],
        )
        .expect("consistent empty shapes");
        Self {
            coeffs,
            validation_error: 0.0,
        }
    }

    /// Wraps a Tucker tensor of Chebyshev coefficients.
    pub fn from_coefficients(coeffs: TuckerTensor3) -> Self {
        Self {
            coeffs,
            validation_error: 0.0,
        }
    }

    pub fn rank(&self) -> MultilinearRank {
        self.coeffs.rank()
    }

    pub fn is_zero(&self) -> bool {
        self.rank().0.contains(&0)
    }

    /// Number of Chebyshev coefficients per direction.
    pub fn lengths(&self) -> [usize; 3] {
        self.coeffs.dims()
    }

    pub fn coefficients(&self) -> &TuckerTensor3 {
        &self.coeffs
    }

    /// Max-abs error measured on the validation sample.
    pub fn validation_error(&self) -> f64 {
        self.validation_error
    }

    /// Chebyshev coefficients of univariate factor `r` in direction `t`.
    pub fn factor_column(&self, t: usize, r: usize) -> Vec<f64> {
        self.coeffs.factor(t).column(r).iter().copied().collect()
    }

    pub fn eval(&self, eta: [f64; 3]) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let v: Vec<Vec<f64>> = (0..3)
            .map(|t| {
                let f = self.coeffs.factor(t);
                let tv = chebyshev_values(f.nrows(), eta[t]);
                (0..f.ncols())
                    .map(|r| f.column(r).iter().zip(&tv).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let core = self.coeffs.core();
        let [r0, r1, r2] = core.dims();
        let mut s = 0.0;
        for c in 0..r2 {
            for b in 0..r1 {
                let w = v[2][c] * v[1][b];
                for a in 0..r0 {
                    s += w * v[0][a] * core.get(a, b, c);
                }
            }
        }
        s
    }
}

/// Separable approximation of `g` with relative accuracy `eps`
/// (measured against `max |g|`).
pub fn approximate_function(g: &dyn Fn([f64; 3]) -> f64, eps: f64) -> Result<SeparableFunction3> {
    approximate_function_with(&|x| Ok(g(x)), eps, None, ApproxOptions::default())
}

/// Separable approximation with explicit options. When `scale` is given,
/// the accuracy target is `eps * scale` instead of `eps * max |g|`; a
/// function whose samples all lie below that target is returned as zero.
pub fn approximate_function_with(
    g: &dyn Fn([f64; 3]) -> Result<f64>,
    eps: f64,
    scale: Option<f64>,
    opts: ApproxOptions,
) -> Result<SeparableFunction3> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {eps}")));
    }
    let validation = halton_points(opts.validation_points);
    let g_val: Vec<f64> = validation.iter().map(|&x| g(x)).collect::<Result<_>>()?;
    let mut degree = [opts.initial_degree.max(1); 3];
    let mut last_err = f64::INFINITY;
    for tighten in 0..4 {
        let (coef, max_g) = loop {
            let (coef, max_g, pending) = interpolate(g, degree)?;
            let scale_now = scale.unwrap_or_else(|| max_g.max(max_abs(&g_val)));
            let tol = eps * scale_now * 0.1f64.powi(tighten);
            if max_g.max(max_abs(&g_val)) <= eps * scale_now {
                return Ok(SeparableFunction3::zero());
            }
            let floor = 1e-14 * coef.max_abs();
            let mut done = true;
            for t in 0..3 {
                if pending[t] > (0.1 * tol).max(floor) {
                    done = false;
                    let next = 2 * degree[t];
                    if next + 1 > opts.max_points {
                        return Err(Error::NonSeparable {
                            cap: opts.max_points,
                            detail: format!(
                                "direction {} still has trailing coefficients of size {:e}",
                                t + 1,
                                pending[t]
                            ),
                        });
                    }
                    degree[t] = next;
                }
            }
            if done {
                break (coef, max_g);
            }
        };
        let scale_now = scale.unwrap_or_else(|| max_g.max(max_abs(&g_val)));
        let target = eps * scale_now;
        let tol = target * 0.1f64.powi(tighten);
        let chopped = chop(&coef, 0.01 * tol);
        let norm = chopped.norm();
        let compressed = if norm == 0.0 {
            return Ok(SeparableFunction3::zero());
        } else {
            sthosvd(&chopped, (tol / norm).min(1.0))?
        };
        let mut out = SeparableFunction3::from_coefficients(compressed);
        let err = validation
            .iter()
            .zip(&g_val)
            .map(|(&x, &v)| (out.eval(x) - v).abs())
            .fold(0.0, f64::max);
        out.validation_error = err;
        if err <= 10.0 * target {
            return Ok(out);
        }
        last_err = err;
    }
    Err(Error::NonSeparable {
        cap: opts.max_points,
        detail: format!("validation error {last_err:e} above 10x tolerance"),
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Samples `g` on the tensor Lobatto grid and converts to Chebyshev
/// coefficients. Returns `(coefficients, max |samples|, tail per direction)`.
fn interpolate(g: &dyn Fn([f64; 3]) -> Result<f64>, degree: [usize; 3]) -> Result<(DenseTensor3, f64, [f64; 3])> {
    let pts: Vec<Vec<f64>> = degree.iter().map(|&n| lobatto_points(n)).collect();
    let dims = degree.map(|n| n + 1);
    let mut vals = DenseTensor3::zeros(dims);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let v = g([pts[0][i], pts[1][j], pts[2][k]])?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "function is not finite at η = ({}, {}, {})",
                        pts[0][i], pts[1][j], pts[2][k]
                    )));
                }
                vals.set(i, j, k, v);
            }
        }
    }
    let max_g = vals.max_abs();
    let mats: Vec<DMatrix<f64>> = degree
        .iter()
        .map(|&n| DMatrix::from_row_slice(n + 1, n + 1, &values_to_coeffs_matrix(n)))
        .collect();
    let coef = vals.multi_mode_product([&mats[0], &mats[1], &mats[2]])?;
    let mut tail = [0.0; 3];
    for (t, tl) in tail.iter_mut().enumerate() {
        let n = dims[t];
        let from = n.saturating_sub(2);
        *tl = slice_max(&coef, t, from..n);
    }
    Ok((coef, max_g, tail))
}

fn slice_max(c: &DenseTensor3, mode: usize, range: std::ops::Range<usize>) -> f64 {
    let d = c.dims();
    let mut m = 0.0f64;
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let idx = [i, j, k][mode];
                if range.contains(&idx) {
                    m = m.max(c.get(i, j, k).abs());
                }
            }
        }
    }
    m
}

/// Drops trailing coefficient slices whose entries are all below `thresh`.
fn chop(c: &DenseTensor3, thresh: f64) -> DenseTensor3 {
    let d = c.dims();
    let mut keep = [1usize; 3];
    for (t, kt) in keep.iter_mut().enumerate() {
        for idx in (0..d[t]).rev() {
            if slice_max(c, t, idx..idx + 1) > thresh {
                *kt = idx + 1;
                break;
            }
        }
    }
    DenseTensor3::from_fn(keep, |i, j, k| c.get(i, j, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_polynomial() {
        let f = approximate_function(&|x| x[0] * x[1] * x[2], 1e-12).unwrap();
        assert_eq!(f.rank().0, [1, 1, 1]);
        assert!(f.lengths().iter().all(|&l| l <= 3));
        assert!(f.validation_error() <= 1e-14);
    }

    #[test]
    fn exponential_is_rank_one() {
        let g = |x: [f64; 3]| (x[0] + x[1] + x[2]).exp();
        let eps = 1e-10;
        let f = approximate_function(&g, eps).unwrap();
        assert_eq!(f.rank().0, [1, 1, 1]);
        let maxg = 3f64.exp();
        for k in 0..50 {
            let x = [k as f64 / 49.0, (k * 7 % 50) as f64 / 49.0, (k * 13 % 50) as f64 / 49.0];
            assert!((f.eval(x) - g(x)).abs() <= 10.0 * eps * maxg);
        }
    }

    #[test]
    fn zero_function_has_zero_rank() {
        let f = approximate_function(&|_| 0.0, 1e-8).unwrap();
        assert!(f.is_zero());
        assert_eq!(f.eval([0.3, 0.3, 0.3]), 0.0);
    }

    #[test]
    fn rough_function_hits_degree_cap() {
        let g = |x: [f64; 3]| (x[0] - 0.5).abs() + x[1];
        let r = approximate_function_with(
            &|x| Ok(g(x)),
            1e-10,
            None,
            ApproxOptions {
                max_points: 33,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::NonSeparable { .. })));
    }

    #[test]
    fn coupled_function_has_higher_rank() {
        let g = |x: [f64; 3]| 1.0 / (1.0 + x[0] + x[1] * x[2]);
        let f = approximate_function(&g, 1e-8).unwrap();
        assert!(f.rank().max() > 1);
        assert!(f.validation_error() <= 1e-7);
    }
}
