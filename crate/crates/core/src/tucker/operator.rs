use std::sync::Arc;

use nalgebra::DMatrix;

use super::banded::BandedMatrix;
use super::dense::DenseTensor3;
use super::sum::TuckerSum;
use super::tensor::{MultilinearRank, TuckerTensor3};
use crate::error::{mismatch, Error, Result};

/// Linear operator `Σ c[i1,i2,i3] C3_{i3} ⊗ C2_{i2} ⊗ C1_{i1}` with banded
/// factor matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerOperator3 {
    core: DenseTensor3,
    factors: [Vec<BandedMatrix>; 3],
}

impl TuckerOperator3 {
    pub fn new(core: DenseTensor3, factors: [Vec<BandedMatrix>; 3]) -> Result<Self> {
        let r = core.dims();
        for t in 0..3 {
            if factors[t].len() != r[t] {
                return Err(mismatch(
                    "TuckerOperator3::new",
                    format!("mode {t}: {} factors for core size {}", factors[t].len(), r[t]),
                ));
            }
            if let Some(first) = factors[t].first() {
                if factors[t].iter().any(|m| m.shape() != first.shape()) {
                    return Err(mismatch(
                        "TuckerOperator3::new",
                        format!("mode {t}: factor shapes differ"),
                    ));
                }
            } else {
                return Err(Error::InvalidInput(format!("mode {t} has no factor matrices")));
            }
        }
        Ok(Self { core, factors })
    }

    /// Kronecker product `A3 ⊗ A2 ⊗ A1` as a rank-(1,1,1) operator.
    pub fn kronecker(a: [BandedMatrix; 3]) -> Self {
        let [a0, a1, a2] = a;
        Self {
            core: DenseTensor3::from_vec([1, 1, 1], vec![1.0]).unwrap(),
            factors: [vec![a0], vec![a1], vec![a2]],
        }
    }

    pub fn rank(&self) -> MultilinearRank {
        MultilinearRank(self.core.dims())
    }

    pub fn core(&self) -> &DenseTensor3 {
        &self.core
    }

    pub fn factors(&self, mode: usize) -> &[BandedMatrix] {
        &self.factors[mode]
    }

    /// Row dimensions per mode.
    pub fn row_dims(&self) -> [usize; 3] {
        std::array::from_fn(|t| self.factors[t][0].nrows())
    }

    /// Column dimensions per mode.
    pub fn col_dims(&self) -> [usize; 3] {
        std::array::from_fn(|t| self.factors[t][0].ncols())
    }

    pub fn is_square(&self) -> bool {
        self.row_dims() == self.col_dims()
    }

    /// Exact sum of operators with block-diagonal core.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.row_dims() != other.row_dims() || self.col_dims() != other.col_dims() {
            return Err(mismatch("TuckerOperator3::add", "operator shapes differ"));
        }
        let r = self.core.dims();
        let s = other.core.dims();
        let mut core = DenseTensor3::zeros([r[0] + s[0], r[1] + s[1], r[2] + s[2]]);
        core.add_block([0; 3], 1.0, &self.core);
        core.add_block(r, 1.0, &other.core);
        let factors = std::array::from_fn(|t| {
            let mut v = self.factors[t].clone();
            v.extend(other.factors[t].iter().cloned());
            v
        });
        Ok(Self { core, factors })
    }

    /// Transposed operator.
    pub fn transpose(&self) -> Self {
        Self {
            core: self.core.clone(),
            factors: std::array::from_fn(|t| self.factors[t].iter().map(|m| m.transpose()).collect()),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.core.scale_mut(s);
        out
    }

    /// `A x` as an unevaluated sum; ranks multiply.
    pub fn apply_lazy(&self, x: &TuckerTensor3) -> Result<TuckerSum> {
        if x.dims() != self.col_dims() {
            return Err(mismatch(
                "tucker_matvec",
                format!("operator columns {:?}, vector dims {:?}", self.col_dims(), x.dims()),
            ));
        }
        let r = x.rank().0;
        let mut out = TuckerSum::new(self.row_dims());
        let mut base = [0usize; 3];
        for t in 0..3 {
            for (i, m) in self.factors[t].iter().enumerate() {
                let off = out.push_factor(t, m.mul_dense(x.factor(t))?)?;
                if i == 0 {
                    base[t] = off;
                }
            }
        }
        let xc = Arc::new(x.core().clone());
        let rc = self.core.dims();
        for k in 0..rc[2] {
            for j in 0..rc[1] {
                for i in 0..rc[0] {
                    let c = self.core.get(i, j, k);
                    if c != 0.0 {
                        out.push_block(
                            [base[0] + i * r[0], base[1] + j * r[1], base[2] + k * r[2]],
                            xc.clone(),
                            c,
                        )?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A x` with the full Kronecker-structured core materialized
    /// (rank `R_A ∘ r`).
    pub fn apply(&self, x: &TuckerTensor3) -> Result<TuckerTensor3> {
        let lazy = self.apply_lazy(x)?;
        let rank = [0, 1, 2].map(|t| self.core.dims()[t] * x.rank().0[t]);
        let t = lazy.to_tucker();
        debug_assert_eq!(t.rank().0, rank);
        Ok(t)
    }

    /// Dense matrix of the operator, refusing beyond `guard` entries.
    pub fn to_dense(&self, guard: usize) -> Result<DMatrix<f64>> {
        let rows: usize = self.row_dims().iter().product();
        let cols: usize = self.col_dims().iter().product();
        let len = rows.saturating_mul(cols);
        if len > guard {
            return Err(Error::MemoryGuard {
                requested: len,
                limit: guard,
            });
        }
        let dense: [Vec<DMatrix<f64>>; 3] =
            std::array::from_fn(|t| self.factors[t].iter().map(|m| m.to_dense()).collect());
        let mut out = DMatrix::zeros(rows, cols);
        let rc = self.core.dims();
        for k in 0..rc[2] {
            for j in 0..rc[1] {
                for i in 0..rc[0] {
                    let c = self.core.get(i, j, k);
                    if c != 0.0 {
                        let kron = dense[2][k].kronecker(&dense[1][j]).kronecker(&dense[0][i]);
                        out += kron * c;
                    }
                }
            }
        }
        Ok(out)
    }
}
