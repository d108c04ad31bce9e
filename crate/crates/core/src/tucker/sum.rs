use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::dense::DenseTensor3;
use super::tensor::{MultilinearRank, TuckerTensor3};
use crate::error::{mismatch, Result};
use crate::linalg::thin_qr;

#[derive(Clone, Debug)]
struct CoreBlock {
    offset: [usize; 3],
    core: Arc<DenseTensor3>,
    scale: f64,
}

/// Unevaluated linear combination of Tucker terms that share a set of
/// concatenated factor matrices.
///
/// Matrix-vector products, sums and preconditioner applications produce
/// this form; its block-structured core is never expanded unless
/// [`TuckerSum::to_tucker`] is called. Truncation works on the small
/// QR-reduced core instead.
#[derive(Clone, Debug)]
pub struct TuckerSum {
    dims: [usize; 3],
    chunks: [Vec<DMatrix<f64>>; 3],
    widths: [usize; 3],
    blocks: Vec<CoreBlock>,
}

/// Orthonormal basis of the factor spans plus the core expressed in it.
pub(crate) struct ReducedSum {
    pub q: [DMatrix<f64>; 3],
    pub r: [DMatrix<f64>; 3],
}

impl TuckerSum {
    pub fn new(dims: [usize; 3]) -> Self {
        Self {
            dims,
            chunks: Default::default(),
            widths: [0; 3],
            blocks: Vec::new(),
        }
    }

    pub fn from_tucker(x: &TuckerTensor3) -> Self {
        let mut s = Self::new(x.dims());
        s.push_tucker(x, 1.0).expect("dims match by construction");
        s
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Rank of the unevaluated representation (sum of factor widths).
    pub fn width(&self) -> MultilinearRank {
        MultilinearRank(self.widths)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Appends factor columns for one mode and returns their column offset.
    pub fn push_factor(&mut self, mode: usize, mat: DMatrix<f64>) -> Result<usize> {
        if mat.nrows() != self.dims[mode] {
            return Err(mismatch(
                "TuckerSum::push_factor",
                format!("mode {mode} expects {} rows, got {}", self.dims[mode], mat.nrows()),
            ));
        }
        let off = self.widths[mode];
        self.widths[mode] += mat.ncols();
        if mat.ncols() > 0 {
            self.chunks[mode].push(mat);
        }
        Ok(off)
    }

    /// Adds `scale * core` at the given factor column offsets.
    pub fn push_block(&mut self, offset: [usize; 3], core: Arc<DenseTensor3>, scale: f64) -> Result<()> {
        let d = core.dims();
        for t in 0..3 {
            if offset[t] + d[t] > self.widths[t] {
                return Err(mismatch(
                    "TuckerSum::push_block",
                    format!("block exceeds factor width in mode {t}"),
                ));
            }
        }
        if core.is_empty() || scale == 0.0 {
            return Ok(());
        }
        self.blocks.push(CoreBlock { offset, core, scale });
        Ok(())
    }

    pub fn push_tucker(&mut self, x: &TuckerTensor3, scale: f64) -> Result<()> {
        if x.dims() != self.dims {
            return Err(mismatch(
                "TuckerSum::push_tucker",
                format!("{:?} vs {:?}", x.dims(), self.dims),
            ));
        }
        let mut off = [0; 3];
        for t in 0..3 {
            off[t] = self.push_factor(t, x.factor(t).clone())?;
        }
        self.push_block(off, Arc::new(x.core().clone()), scale)
    }

    /// `self += scale * other`.
    pub fn append(&mut self, other: &TuckerSum, scale: f64) -> Result<()> {
        if other.dims != self.dims {
            return Err(mismatch(
                "TuckerSum::append",
                format!("{:?} vs {:?}", other.dims, self.dims),
            ));
        }
        let base = self.widths;
        for t in 0..3 {
            for c in &other.chunks[t] {
                self.push_factor(t, c.clone())?;
            }
        }
        for b in &other.blocks {
            self.blocks.push(CoreBlock {
                offset: [b.offset[0] + base[0], b.offset[1] + base[1], b.offset[2] + base[2]],
                core: b.core.clone(),
                scale: b.scale * scale,
            });
        }
        Ok(())
    }

    /// Concatenated factor matrix of one mode.
    pub fn factor(&self, mode: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dims[mode], self.widths[mode]);
        let mut c0 = 0;
        for c in &self.chunks[mode] {
            out.columns_mut(c0, c.ncols()).copy_from(c);
            c0 += c.ncols();
        }
        out
    }

    /// Materializes the block-structured core. Ranks equal [`Self::width`].
    pub fn to_tucker(&self) -> TuckerTensor3 {
        let mut core = DenseTensor3::zeros(self.widths);
        for b in &self.blocks {
            core.add_block(b.offset, b.scale, &b.core);
        }
        TuckerTensor3::new(core, std::array::from_fn(|t| self.factor(t))).expect("consistent widths")
    }

    pub(crate) fn reduce(&self) -> ReducedSum {
        let mut q: [DMatrix<f64>; 3] = Default::default();
        let mut r: [DMatrix<f64>; 3] = Default::default();
        for t in 0..3 {
            let (qt, rt) = thin_qr(&self.factor(t));
            q[t] = qt;
            r[t] = rt;
        }
        ReducedSum { q, r }
    }

    /// Core of the sum expressed in coordinates `mats[t]` (one column block
    /// per factor column), restricted to blocks in `range`:
    /// `Σ_b s_b · core_b ×_1 M1[:, off1] ×_2 M2[:, off2] ×_3 M3[:, off3]`.
    pub(crate) fn project_blocks(&self, mats: &[DMatrix<f64>; 3], range: std::ops::Range<usize>) -> DenseTensor3 {
        let k = [mats[0].nrows(), mats[1].nrows(), mats[2].nrows()];
        let mut z = DenseTensor3::zeros(k);
        if k.contains(&0) {
            return z;
        }
        // Group blocks that share a core and their first two offsets so the
        // mode-3 coordinates can be summed before touching the core.
        let mut cores: Vec<Arc<DenseTensor3>> = Vec::new();
        type Inner = BTreeMap<usize, DMatrix<f64>>;
        let mut groups: BTreeMap<(usize, usize), Inner> = BTreeMap::new();
        for b in &self.blocks[range] {
            let id = match cores.iter().position(|c| Arc::ptr_eq(c, &b.core)) {
                Some(i) => i,
                None => {
                    cores.push(b.core.clone());
                    cores.len() - 1
                }
            };
            let d = b.core.dims();
            let m3 = mats[2].columns(b.offset[2], d[2]) * b.scale;
            groups
                .entry((id, b.offset[0]))
                .or_default()
                .entry(b.offset[1])
                .and_modify(|m| *m += &m3)
                .or_insert(m3);
        }
        for ((id, off0), inner) in groups {
            let core = &cores[id];
            let d = core.dims();
            let mut acc = DenseTensor3::zeros([d[0], k[1], k[2]]);
            for (off1, m3) in inner {
                let m2 = mats[1].columns(off1, d[1]).into_owned();
                let t = core.mode_product_unchecked(2, &m3).mode_product_unchecked(1, &m2);
                acc.axpy(1.0, &t).expect("same dims");
            }
            let m1 = mats[0].columns(off0, d[0]).into_owned();
            z.axpy(1.0, &acc.mode_product_unchecked(0, &m1)).expect("same dims");
        }
        z
    }

    /// Euclidean norm, computed on the QR-reduced core.
    pub fn norm(&self) -> f64 {
        if self.blocks.is_empty() {
            return 0.0;
        }
        let red = self.reduce();
        self.project_blocks(&red.r, 0..self.blocks.len()).norm()
    }

    /// Inner product with a Tucker tensor.
    pub fn inner_tucker(&self, y: &TuckerTensor3) -> Result<f64> {
        if y.dims() != self.dims {
            return Err(mismatch(
                "TuckerSum::inner_tucker",
                format!("{:?} vs {:?}", self.dims, y.dims()),
            ));
        }
        if self.blocks.is_empty() {
            return Ok(0.0);
        }
        // Coordinates of every sum column in y's factor basis: Yᵀ U.
        let g: [DMatrix<f64>; 3] = std::array::from_fn(|t| y.factor(t).transpose() * self.factor(t));
        let z = self.project_blocks(&g, 0..self.blocks.len());
        z.dot(y.core())
    }

    pub(crate) fn block_count(&self) -> usize {
        self.blocks.len()
    }
}
