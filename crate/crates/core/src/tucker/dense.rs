use nalgebra::{DMatrix, DMatrixView};

use crate::error::{mismatch, Error, Result};

/// Dense 3-way tensor stored with the first index running fastest.
///
/// The flat buffer is therefore the column-major mode-1 unfolding, and the
/// vectorization `vec(X)[i1 + n1*(i2 + n2*i3)]` matches the ordering used by
/// Kronecker products `A3 ⊗ A2 ⊗ A1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let len = dims[0] * dims[1] * dims[2];
        if data.len() != len {
            return Err(mismatch(
                "DenseTensor3::from_vec",
                format!("dims {dims:?} need {len} entries, got {}", data.len()),
            ));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] += v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(mismatch(
                "DenseTensor3::dot",
                format!("{:?} vs {:?}", self.dims, other.dims),
            ));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(mismatch(
                "DenseTensor3::axpy",
                format!("{:?} vs {:?}", self.dims, other.dims),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    /// Adds `s * block` into the sub-tensor starting at `offset`.
    pub fn add_block(&mut self, offset: [usize; 3], s: f64, block: &Self) {
        let [b0, b1, b2] = block.dims;
        debug_assert!(offset[0] + b0 <= self.dims[0]);
        debug_assert!(offset[1] + b1 <= self.dims[1]);
        debug_assert!(offset[2] + b2 <= self.dims[2]);
        for k in 0..b2 {
            for j in 0..b1 {
                let dst = self.offset(offset[0], offset[1] + j, offset[2] + k);
                let src = b0 * (j + b1 * k);
                let d = &mut self.data[dst..dst + b0];
                for (x, y) in d.iter_mut().zip(&block.data[src..src + b0]) {
                    *x += s * y;
                }
            }
        }
    }

    /// Mode-`mode` unfolding (0-based mode). Rows run over the chosen index,
    /// columns over the remaining two in colexicographic order.
    pub fn unfold(&self, mode: usize) -> DMatrix<f64> {
        let [n0, n1, n2] = self.dims;
        match mode {
            0 => DMatrix::from_column_slice(n0, n1 * n2, &self.data),
            1 => DMatrix::from_fn(n1, n0 * n2, |j, c| self.get(c % n0.max(1), j, c / n0.max(1))),
            2 => DMatrix::from_fn(n2, n0 * n1, |k, c| self.get(c % n0.max(1), c / n0.max(1), k)),
            _ => panic!("mode index {mode} out of range"),
        }
    }

    /// Inverse of [`DenseTensor3::unfold`].
    pub fn fold(mode: usize, mat: &DMatrix<f64>, dims: [usize; 3]) -> Result<Self> {
        let [n0, n1, n2] = dims;
        let (r, c) = match mode {
            0 => (n0, n1 * n2),
            1 => (n1, n0 * n2),
            2 => (n2, n0 * n1),
            _ => return Err(Error::InvalidInput(format!("mode index {mode} out of range"))),
        };
        if mat.shape() != (r, c) {
            return Err(mismatch(
                "DenseTensor3::fold",
                format!("matrix {:?} does not fold into {dims:?}", mat.shape()),
            ));
        }
        Ok(match mode {
            0 => Self {
                dims,
                data: mat.as_slice().to_vec(),
            },
            1 => Self::from_fn(dims, |i, j, k| mat[(j, i + n0 * k)]),
            _ => Self::from_fn(dims, |i, j, k| mat[(k, i + n0 * j)]),
        })
    }

    /// m-mode product `X ×_m J`: contracts index `mode` of `X` with the
    /// columns of `J`, producing `Y[.., i_m -> l, ..] = Σ_j J[l, j] X[.., j, ..]`.
    pub fn mode_product(&self, mode: usize, j: &DMatrix<f64>) -> Result<Self> {
        if mode > 2 {
            return Err(Error::InvalidInput(format!("mode index {mode} out of range")));
        }
        if j.ncols() != self.dims[mode] {
            return Err(mismatch(
                "mode_product",
                format!(
                    "matrix has {} columns, tensor mode {} has size {}",
                    j.ncols(),
                    mode,
                    self.dims[mode]
                ),
            ));
        }
        Ok(self.mode_product_unchecked(mode, j))
    }

    pub(crate) fn mode_product_unchecked(&self, mode: usize, j: &DMatrix<f64>) -> Self {
        let [n0, n1, n2] = self.dims;
        let l = j.nrows();
        let mut dims = self.dims;
        dims[mode] = l;
        if dims.contains(&0) || self.data.is_empty() {
            return Self::zeros(dims);
        }
        match mode {
            0 => {
                let x = DMatrixView::from_slice(&self.data, n0, n1 * n2);
                let y = j * x;
                Self {
                    dims,
                    data: y.data.into(),
                }
            }
            1 => {
                let mut data = vec![0.0; n0 * l * n2];
                let jt = j.transpose();
                for k in 0..n2 {
                    let x = DMatrixView::from_slice(&self.data[k * n0 * n1..(k + 1) * n0 * n1], n0, n1);
                    let y = x * &jt;
                    data[k * n0 * l..(k + 1) * n0 * l].copy_from_slice(y.as_slice());
                }
                Self { dims, data }
            }
            _ => {
                let x = DMatrixView::from_slice(&self.data, n0 * n1, n2);
                let y = x * j.transpose();
                Self {
                    dims,
                    data: y.data.into(),
                }
            }
        }
    }

    /// `X ×_1 A ×_2 B ×_3 C`, ordering the products so the intermediate
    /// tensors stay as small as possible.
    pub fn multi_mode_product(&self, mats: [&DMatrix<f64>; 3]) -> Result<Self> {
        for (m, a) in mats.iter().enumerate() {
            if a.ncols() != self.dims[m] {
                return Err(mismatch(
                    "multi_mode_product",
                    format!("factor {m} has {} columns, expected {}", a.ncols(), self.dims[m]),
                ));
            }
        }
        let mut order = [0usize, 1, 2];
        // Shrinking products first keeps the working tensor small.
        order.sort_by(|&a, &b| {
            let ra = mats[a].nrows() as f64 / mats[a].ncols().max(1) as f64;
            let rb = mats[b].nrows() as f64 / mats[b].ncols().max(1) as f64;
            ra.partial_cmp(&rb).unwrap()
        });
        let mut t = self.mode_product_unchecked(order[0], mats[order[0]]);
        t = t.mode_product_unchecked(order[1], mats[order[1]]);
        Ok(t.mode_product_unchecked(order[2], mats[order[2]]))
    }
}
