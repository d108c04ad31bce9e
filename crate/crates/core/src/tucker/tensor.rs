use std::fmt;

use nalgebra::DMatrix;

use super::dense::DenseTensor3;
use crate::error::{mismatch, Error, Result};
use crate::linalg::thin_qr;

/// Per-mode ranks of a Tucker tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MultilinearRank(pub [usize; 3]);

impl MultilinearRank {
    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn product(&self) -> usize {
        self.0.iter().product()
    }

    /// Componentwise maximum.
    pub fn join(&self, other: &Self) -> Self {
        Self([
            self.0[0].max(other.0[0]),
            self.0[1].max(other.0[1]),
            self.0[2].max(other.0[2]),
        ])
    }
}

impl fmt::Display for MultilinearRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// A 3-way tensor in Tucker format: `core ×_1 U1 ×_2 U2 ×_3 U3`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerTensor3 {
    core: DenseTensor3,
    factors: [DMatrix<f64>; 3],
}

impl TuckerTensor3 {
    pub fn new(core: DenseTensor3, factors: [DMatrix<f64>; 3]) -> Result<Self> {
        let r = core.dims();
        for t in 0..3 {
            if factors[t].ncols() != r[t] {
                return Err(mismatch(
                    "TuckerTensor3::new",
                    format!(
                        "factor {t} has {} columns but core mode {t} has size {}",
                        factors[t].ncols(),
                        r[t]
                    ),
                ));
            }
        }
        Ok(Self { core, factors })
    }

    /// The zero tensor, stored with rank (1,1,1).
    pub fn zeros(dims: [usize; 3]) -> Self {
        let factors = dims.map(|n| {
            let mut m = DMatrix::zeros(n, 1);
            if n > 0 {
                m[(0, 0)] = 1.0;
            }
            m
        });
        Self {
            core: DenseTensor3::zeros([1, 1, 1]),
            factors,
        }
    }

    /// Rank-one tensor `a3 ⊗ a2 ⊗ a1` scaled by `s`.
    pub fn rank_one(s: f64, vecs: [&[f64]; 3]) -> Self {
        let factors = vecs.map(|v| DMatrix::from_column_slice(v.len(), 1, v));
        Self {
            core: DenseTensor3::from_vec([1, 1, 1], vec![s]).unwrap(),
            factors,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.factors[0].nrows(),
            self.factors[1].nrows(),
            self.factors[2].nrows(),
        ]
    }

    pub fn rank(&self) -> MultilinearRank {
        MultilinearRank(self.core.dims())
    }

    pub fn core(&self) -> &DenseTensor3 {
        &self.core
    }

    pub fn factors(&self) -> &[DMatrix<f64>; 3] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn into_parts(self) -> (DenseTensor3, [DMatrix<f64>; 3]) {
        (self.core, self.factors)
    }

    /// Number of stored floating point values (core plus factors).
    pub fn storage(&self) -> usize {
        self.core.len() + self.factors.iter().map(|f| f.len()).sum::<usize>()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.core.scale_mut(s);
        out
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.core.scale_mut(s);
    }

    /// Entry `(i, j, k)` of the represented tensor.
    pub fn entry(&self, i: usize, j: usize, k: usize) -> f64 {
        let [r0, r1, r2] = self.core.dims();
        let mut s = 0.0;
        for c in 0..r2 {
            let w2 = self.factors[2][(k, c)];
            if w2 == 0.0 {
                continue;
            }
            for b in 0..r1 {
                let w1 = w2 * self.factors[1][(j, b)];
                if w1 == 0.0 {
                    continue;
                }
                for a in 0..r0 {
                    s += w1 * self.factors[0][(i, a)] * self.core.get(a, b, c);
                }
            }
        }
        s
    }

    /// Expands to a dense tensor, refusing if more than `guard` entries would
    /// be allocated.
    pub fn to_dense(&self, guard: usize) -> Result<DenseTensor3> {
        let d = self.dims();
        let len = d[0].saturating_mul(d[1]).saturating_mul(d[2]);
        if len > guard {
            return Err(Error::MemoryGuard {
                requested: len,
                limit: guard,
            });
        }
        self.core
            .multi_mode_product([&self.factors[0], &self.factors[1], &self.factors[2]])
    }

    /// Lossless embedding of a dense tensor (identity factors).
    pub fn from_dense(x: &DenseTensor3) -> Self {
        let d = x.dims();
        Self {
            core: x.clone(),
            factors: d.map(|n| DMatrix::identity(n, n)),
        }
    }

    /// Euclidean inner product of the vectorizations.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(mismatch(
                "TuckerTensor3::inner",
                format!("{:?} vs {:?}", self.dims(), other.dims()),
            ));
        }
        let g: [DMatrix<f64>; 3] = std::array::from_fn(|t| self.factors[t].transpose() * &other.factors[t]);
        let projected = other.core.multi_mode_product([&g[0], &g[1], &g[2]])?;
        self.core.dot(&projected)
    }

    /// Euclidean norm. Uses QR factors of the factor matrices so no
    /// cancellation occurs for non-orthonormal representations.
    pub fn norm(&self) -> f64 {
        let r: Vec<DMatrix<f64>> = self.factors.iter().map(|f| thin_qr(f).1).collect();
        match self.core.multi_mode_product([&r[0], &r[1], &r[2]]) {
            Ok(z) => z.norm(),
            Err(_) => 0.0,
        }
    }

    /// Exact sum with block-diagonal core; ranks add.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(1.0, other, 1.0)
    }

    /// `a*self + b*other`, exact, with block-diagonal core.
    pub fn add_scaled(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(mismatch(
                "TuckerTensor3::add",
                format!("{:?} vs {:?}", self.dims(), other.dims()),
            ));
        }
        let r = self.core.dims();
        let s = other.core.dims();
        let mut core = DenseTensor3::zeros([r[0] + s[0], r[1] + s[1], r[2] + s[2]]);
        core.add_block([0, 0, 0], a, &self.core);
        core.add_block(r, b, &other.core);
        let factors = std::array::from_fn(|t| hcat(&self.factors[t], &other.factors[t]));
        Ok(Self { core, factors })
    }

    /// Whether every factor has orthonormal columns within `tol`.
    pub fn has_orthonormal_factors(&self, tol: f64) -> bool {
        self.factors.iter().all(|f| {
            let g = f.transpose() * f;
            (g - DMatrix::identity(f.ncols(), f.ncols())).amax() <= tol
        })
    }
}

pub(crate) fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
