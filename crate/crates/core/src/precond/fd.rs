//! Fast-diagonalization preconditioners for weighted Kronecker sums
//! `P = Σ_t c_t (K_t in direction t, M elsewhere)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::eigen::ApproxEigen1D;
use super::expsum::{build_exp_sum, ExpSum};
use crate::bspline::SplineSpace1D;
use crate::error::{mismatch, Error, Result};
use crate::tucker::{DenseTensor3, TuckerSum, TuckerTensor3};

/// Approximate inverse applied to Tucker tensors.
pub trait Preconditioner: Send + Sync {
    fn dims(&self) -> [usize; 3];

    /// `P⁻¹ s` as an unreduced sum, ready for truncation.
    fn apply_lazy(&self, s: &TuckerTensor3) -> Result<TuckerSum>;

    fn apply(&self, s: &TuckerTensor3) -> Result<TuckerTensor3> {
        Ok(self.apply_lazy(s)?.to_tucker())
    }
}

fn check_dims(op: &'static str, want: [usize; 3], got: [usize; 3]) -> Result<()> {
    if want != got {
        return Err(mismatch(
            op,
            format!("preconditioner dims {want:?}, input dims {got:?}"),
        ));
    }
    Ok(())
}

/// Exact fast diagonalization. The inverse eigenvalue sum is not separable,
/// so the output core is dense of size `n1 x n2 x n3`; intended for small
/// problems and as a reference.
#[derive(Clone)]
pub struct ExactFd {
    eig: [Arc<ApproxEigen1D>; 3],
    weights: [f64; 3],
}

impl ExactFd {
    /// Exact eigendecompositions of the pencils of `spaces`.
    pub fn from_spaces(spaces: &[SplineSpace1D; 3], weights: [f64; 3]) -> Result<Self> {
        let mut eig = Vec::with_capacity(3);
        for s in spaces {
            let (k, m) = crate::bspline::assemble_pencil(s)?;
            eig.push(Arc::new(ApproxEigen1D::exact(&k, &m)?));
        }
        let eig: [Arc<ApproxEigen1D>; 3] = eig.try_into().unwrap_or_else(|_| unreachable!());
        Self::new(eig, weights)
    }

    /// Uses the given decompositions as they are, approximate or not.
    pub fn new(eig: [Arc<ApproxEigen1D>; 3], weights: [f64; 3]) -> Result<Self> {
        let lmin: f64 = (0..3).map(|t| weights[t] * min_of(eig[t].eigenvalues())).sum();
        if !(lmin > 0.0) {
            return Err(Error::InvalidInput("Kronecker-sum eigenvalues must be positive".into()));
        }
        Ok(Self { eig, weights })
    }

    pub fn eigen(&self, mode: usize) -> &ApproxEigen1D {
        &self.eig[mode]
    }
}

impl Preconditioner for ExactFd {
    fn dims(&self) -> [usize; 3] {
        [0, 1, 2].map(|t| self.eig[t].dim())
    }

    fn apply_lazy(&self, s: &TuckerTensor3) -> Result<TuckerSum> {
        check_dims("ExactFd::apply", self.dims(), s.dims())?;
        let z: Vec<DMatrix<f64>> = (0..3)
            .map(|t| self.eig[t].apply(s.factor(t), true))
            .collect::<Result<_>>()?;
        let mut q = s.core().multi_mode_product([&z[0], &z[1], &z[2]])?;
        let lam = [0, 1, 2].map(|t| self.eig[t].eigenvalues());
        let [n1, n2, _] = q.dims();
        for (idx, v) in q.data_mut().iter_mut().enumerate() {
            let (i, j, k) = (idx % n1, (idx / n1) % n2, idx / (n1 * n2));
            *v /= self.weights[0] * lam[0][i] + self.weights[1] * lam[1][j] + self.weights[2] * lam[2][k];
        }
        let factors: Vec<DMatrix<f64>> = (0..3).map(|t| self.eig[t].to_dense()).collect::<Result<_>>()?;
        let mut out = TuckerSum::new(self.dims());
        let off: Vec<usize> = factors
            .into_iter()
            .enumerate()
            .map(|(t, f)| out.push_factor(t, f))
            .collect::<Result<_>>()?;
        out.push_block([off[0], off[1], off[2]], Arc::new(q), 1.0)?;
        Ok(out)
    }
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Setup diagnostics of a [`LowRankFd`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdDiagnostics {
    pub interval: f64,
    pub rank: usize,
    pub expsum_error: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Low-rank fast diagonalization: the inverse eigenvalue sum replaced by an
/// exponential sum, which turns it into a sum of `R` Kronecker products of
/// diagonal matrices.
#[derive(Clone)]
pub struct LowRankFd {
    eig: [Arc<ApproxEigen1D>; 3],
    weights: [f64; 3],
    expsum: ExpSum,
    lambda_min: f64,
    lambda_max: f64,
    // diag[t][j][m] = exp(-α_j c_t Λ̃_t[m] / λ_min)
    diag: [Vec<Vec<f64>>; 3],
}

impl LowRankFd {
    /// Approximate eigendecompositions of the pencils of `spaces`.
    pub fn from_spaces(spaces: &[SplineSpace1D; 3], weights: [f64; 3], eps: f64) -> Result<Self> {
        let eig: Vec<Arc<ApproxEigen1D>> = spaces
            .iter()
            .map(|s| ApproxEigen1D::from_space(s).map(Arc::new))
            .collect::<Result<_>>()?;
        Self::new(eig.try_into().unwrap_or_else(|_| unreachable!()), weights, eps)
    }

    pub fn new(eig: [Arc<ApproxEigen1D>; 3], weights: [f64; 3], eps: f64) -> Result<Self> {
        if weights.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::InvalidInput("direction weights must be positive".into()));
        }
        let lambda_min: f64 = (0..3).map(|t| weights[t] * min_of(eig[t].eigenvalues())).sum();
        let lambda_max: f64 = (0..3).map(|t| weights[t] * max_of(eig[t].eigenvalues())).sum();
        if !(lambda_min > 0.0) {
            return Err(Error::InvalidInput(format!(
                "smallest Kronecker-sum eigenvalue must be positive, got {lambda_min:e}"
            )));
        }
        let expsum = build_exp_sum(lambda_min, lambda_max, eps)?;
        let diag = [0, 1, 2].map(|t| {
            expsum
                .exponents()
                .iter()
                .map(|a| {
                    eig[t]
                        .eigenvalues()
                        .iter()
                        .map(|l| (-a * weights[t] * l / lambda_min).exp())
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            eig,
            weights,
            expsum,
            lambda_min,
            lambda_max,
            diag,
        })
    }

    pub fn rank(&self) -> usize {
        self.expsum.rank()
    }

    pub fn expsum(&self) -> &ExpSum {
        &self.expsum
    }

    pub fn eigen(&self, mode: usize) -> &ApproxEigen1D {
        &self.eig[mode]
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Diagonal of `D_(t,j)`.
    pub fn diagonal(&self, mode: usize, term: usize) -> &[f64] {
        &self.diag[mode][term]
    }

    /// Core weights `ω_j / λ_min`.
    pub fn core_weights(&self) -> Vec<f64> {
        self.expsum.weights().iter().map(|w| w / self.lambda_min).collect()
    }

    pub fn diagnostics(&self) -> FdDiagnostics {
        FdDiagnostics {
            interval: self.expsum.interval(),
            rank: self.rank(),
            expsum_error: self.expsum.measured_error(),
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
        }
    }
}

impl Preconditioner for LowRankFd {
    fn dims(&self) -> [usize; 3] {
        [0, 1, 2].map(|t| self.eig[t].dim())
    }

    fn apply_lazy(&self, s: &TuckerTensor3) -> Result<TuckerSum> {
        check_dims("LowRankFd::apply", self.dims(), s.dims())?;
        let r = self.rank();
        let ranks = s.rank().0;
        let mut out = TuckerSum::new(self.dims());
        let mut off = [0usize; 3];
        for t in 0..3 {
            let n = self.eig[t].dim();
            let z = self.eig[t].apply(s.factor(t), true)?;
            let rt = ranks[t];
            let mut w = DMatrix::zeros(n, r * rt);
            for j in 0..r {
                let d = &self.diag[t][j];
                for c in 0..rt {
                    for m in 0..n {
                        w[(m, j * rt + c)] = d[m] * z[(m, c)];
                    }
                }
            }
            off[t] = out.push_factor(t, self.eig[t].apply(&w, false)?)?;
        }
        let core = Arc::new(s.core().clone());
        for (j, cw) in self.core_weights().into_iter().enumerate() {
            let o = [0, 1, 2].map(|t| off[t] + j * ranks[t]);
            out.push_block(o, core.clone(), cw)?;
        }
        Ok(out)
    }
}

/// Shared handle for trait objects.
pub type SharedPreconditioner = Arc<dyn Preconditioner>;

/// Dense `D̃ · Λsum` diagonal, for checking the spectral bound on small sizes.
pub fn sandwich_diagonal(p: &LowRankFd) -> DenseTensor3 {
    let lam = [0, 1, 2].map(|t| p.eigen(t).eigenvalues());
    let cw = p.core_weights();
    let dims = p.dims();
    DenseTensor3::from_fn(dims, |i, j, k| {
        let total = p.weights[0] * lam[0][i] + p.weights[1] * lam[1][j] + p.weights[2] * lam[2][k];
        let approx: f64 = (0..p.rank())
            .map(|r| cw[r] * p.diag[0][r][i] * p.diag[1][r][j] * p.diag[2][r][k])
            .sum();
        total * approx
    })
}
