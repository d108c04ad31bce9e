//! Tucker-format tensors and operators.

mod banded;
mod dense;
pub mod io;
mod operator;
mod sum;
mod tensor;
mod truncation;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::DenseTensor3;
pub use operator::TuckerOperator3;
pub use sum::TuckerSum;
pub use tensor::{MultilinearRank, TuckerTensor3};
pub use truncation::{
    sthosvd, truncate_dynamic, truncate_dynamic_blocks, truncate_rel, truncate_sum, DynamicOutcome, DynamicParams,
};

use crate::error::Result;

/// Default limit on dense expansions (entries).
pub const DEFAULT_DENSE_GUARD: usize = 1 << 27;

/// `A x`; ranks multiply componentwise.
pub fn tucker_matvec(a: &TuckerOperator3, x: &TuckerTensor3) -> Result<TuckerTensor3> {
    a.apply(x)
}

/// `x + y`; ranks add componentwise.
pub fn tucker_add(x: &TuckerTensor3, y: &TuckerTensor3) -> Result<TuckerTensor3> {
    x.add(y)
}

/// Euclidean inner product of the vectorizations.
pub fn tucker_inner(x: &TuckerTensor3, y: &TuckerTensor3) -> Result<f64> {
    x.inner(y)
}
