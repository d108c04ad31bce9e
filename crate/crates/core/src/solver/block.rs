use crate::error::{mismatch, Result};
use crate::precond::Preconditioner;
use crate::tucker::{truncate_sum, MultilinearRank, TuckerOperator3, TuckerSum, TuckerTensor3};

/// Linear map between block vectors of Tucker tensors, returning unreduced
/// sums so the caller decides how to truncate.
pub trait BlockMap: Send + Sync {
    /// Dimensions of each output component.
    fn block_dims(&self) -> Vec<[usize; 3]>;

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>>;
}

impl BlockMap for TuckerOperator3 {
    fn block_dims(&self) -> Vec<[usize; 3]> {
        vec![self.row_dims()]
    }

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
        check_len("TuckerOperator3", 1, x.len())?;
        Ok(vec![self.apply_lazy(&x[0])?])
    }
}

impl<P: Preconditioner + ?Sized> BlockMap for P {
    fn block_dims(&self) -> Vec<[usize; 3]> {
        vec![self.dims()]
    }

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
        check_len("Preconditioner", 1, x.len())?;
        Ok(vec![self.apply_lazy(&x[0])?])
    }
}

/// Square grid of Tucker operators; `None` blocks are zero.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    blocks: Vec<Vec<Option<TuckerOperator3>>>,
    dims: Vec<[usize; 3]>,
}

impl BlockOperator {
    pub fn new(blocks: Vec<Vec<Option<TuckerOperator3>>>, dims: Vec<[usize; 3]>) -> Result<Self> {
        let k = dims.len();
        if blocks.len() != k || blocks.iter().any(|row| row.len() != k) {
            return Err(mismatch("BlockOperator::new", format!("expected a {k}x{k} grid")));
        }
        for (i, row) in blocks.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    if b.row_dims() != dims[i] || b.col_dims() != dims[j] {
                        return Err(mismatch(
                            "BlockOperator::new",
                            format!("block ({i},{j}) is {:?} x {:?}", b.row_dims(), b.col_dims()),
                        ));
                    }
                }
            }
        }
        Ok(Self { blocks, dims })
    }

    pub fn size(&self) -> usize {
        self.dims.len()
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&TuckerOperator3> {
        self.blocks[i][j].as_ref()
    }
}

impl BlockMap for BlockOperator {
    fn block_dims(&self) -> Vec<[usize; 3]> {
        self.dims.clone()
    }

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
        check_len("BlockOperator", self.size(), x.len())?;
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut s = TuckerSum::new(self.dims[i]);
                for (b, xj) in row.iter().zip(x) {
                    if let Some(b) = b {
                        s.append(&b.apply_lazy(xj)?, 1.0)?;
                    }
                }
                Ok(s)
            })
            .collect()
    }
}

/// Block-diagonal preconditioner, one applicator per component.
pub struct BlockDiagonal(pub Vec<std::sync::Arc<dyn Preconditioner>>);

impl BlockMap for BlockDiagonal {
    fn block_dims(&self) -> Vec<[usize; 3]> {
        self.0.iter().map(|p| p.dims()).collect()
    }

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
        check_len("BlockDiagonal", self.0.len(), x.len())?;
        self.0.iter().zip(x).map(|(p, xi)| p.apply_lazy(xi)).collect()
    }
}

fn check_len(op: &'static str, want: usize, got: usize) -> Result<()> {
    if want != got {
        return Err(mismatch(op, format!("expected {want} components, got {got}")));
    }
    Ok(())
}

/// Sum of componentwise inner products.
pub fn block_inner(a: &[TuckerTensor3], b: &[TuckerTensor3]) -> Result<f64> {
    check_len("block_inner", a.len(), b.len())?;
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

pub fn block_norm(a: &[TuckerTensor3]) -> f64 {
    a.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt()
}

/// Componentwise maximum of the multilinear ranks.
pub fn block_rank(a: &[TuckerTensor3]) -> MultilinearRank {
    a.iter().fold(MultilinearRank([0; 3]), |m, x| m.join(&x.rank()))
}

/// Truncates every component of a lazy block vector at relative `eps`.
pub fn truncate_blocks(s: &[TuckerSum], eps: f64) -> Result<Vec<TuckerTensor3>> {
    s.iter().map(|x| truncate_sum(x, eps)).collect()
}

/// Lazy `a + c·b`, componentwise.
pub fn lazy_axpy(a: &[TuckerTensor3], c: f64, b: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
    check_len("lazy_axpy", a.len(), b.len())?;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut s = TuckerSum::from_tucker(x);
            s.push_tucker(y, c)?;
            Ok(s)
        })
        .collect()
}
