use nalgebra::DMatrix;

use crate::error::{mismatch, Result};

/// Rectangular banded matrix. Entry `(i, j)` is stored when
/// `i - lower <= j <= i + upper`; everything else is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedMatrix {
    nrows: usize,
    ncols: usize,
    lower: usize,
    upper: usize,
    // Row-major, `lower + upper + 1` slots per row; slot `d` holds column `i + d - lower`.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(nrows: usize, ncols: usize, lower: usize, upper: usize) -> Self {
        Self {
            nrows,
            ncols,
            lower,
            upper,
            data: vec![0.0; nrows * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n, 0, 0);
        m.data.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    /// Builds a banded matrix from a dense one, with the band detected from
    /// the entries whose magnitude exceeds `drop_tol`.
    pub fn from_dense(a: &DMatrix<f64>, drop_tol: f64) -> Self {
        let (n, m) = a.shape();
        let (mut lower, mut upper) = (0usize, 0usize);
        for j in 0..m {
            for i in 0..n {
                if a[(i, j)].abs() > drop_tol {
                    if i > j {
                        lower = lower.max(i - j);
                    } else {
                        upper = upper.max(j - i);
                    }
                }
            }
        }
        let mut b = Self::zeros(n, m, lower, upper);
        for i in 0..n {
            for j in b.col_range(i) {
                b.set(i, j, a[(i, j)]);
            }
        }
        b
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.lower, self.upper)
    }

    #[inline]
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    /// Columns stored for row `i`.
    #[inline]
    pub fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        let lo = i.saturating_sub(self.lower);
        let hi = (i + self.upper + 1).min(self.ncols);
        lo..hi.max(lo)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.lower < i || j > i + self.upper || i >= self.nrows || j >= self.ncols {
            None
        } else {
            Some(i * self.width() + j + self.lower - i)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets a stored entry. Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in self.col_range(i) {
                a[(i, j)] = self.get(i, j);
            }
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows, self.upper, self.lower);
        for i in 0..self.nrows {
            for j in self.col_range(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Max-abs entry asymmetry; zero for exactly symmetric matrices.
    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.nrows {
            for j in self.col_range(i) {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(mismatch(
                "BandedMatrix::matvec",
                format!("matrix has {} columns, vector has {}", self.ncols, x.len()),
            ));
        }
        Ok((0..self.nrows)
            .map(|i| self.col_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }

    /// `self * x` for a dense block of columns.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.ncols {
            return Err(mismatch(
                "BandedMatrix::mul_dense",
                format!("matrix has {} columns, block has {} rows", self.ncols, x.nrows()),
            ));
        }
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        let w = self.width();
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let xs = xc.as_slice();
            let yc = y.column_mut(c);
            let ys = yc.data.into_slice_mut();
            for (i, yi) in ys.iter_mut().enumerate() {
                let row = &self.data[i * w..(i + 1) * w];
                let mut s = 0.0;
                for j in self.col_range(i) {
                    s += row[j + self.lower - i] * xs[j];
                }
                *yi = s;
            }
        }
        Ok(y)
    }
}

/// LU factors of a square banded matrix, computed without pivoting so both
/// factors stay inside the original band.
#[derive(Clone, Debug)]
pub struct BandedLu {
    lu: BandedMatrix,
}

impl BandedLu {
    /// Factors `a`. Returns `None` when a pivot falls below `rel_pivot`
    /// times the largest entry of `a`.
    pub fn factor(a: &BandedMatrix, rel_pivot: f64) -> Option<Self> {
        let n = a.nrows;
        if a.ncols != n {
            return None;
        }
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut lu = a.clone();
        let (l, u) = (lu.lower, lu.upper);
        for k in 0..n {
            let piv = lu.get(k, k);
            if !(piv.abs() > rel_pivot * scale) {
                return None;
            }
            for i in k + 1..(k + l + 1).min(n) {
                let f = lu.get(i, k) / piv;
                lu.set(i, k, f);
                if f != 0.0 {
                    for j in k + 1..(k + u + 1).min(n) {
                        lu.add_at(i, j, -f * lu.get(k, j));
                    }
                }
            }
        }
        Some(Self { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.lu.nrows;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.lu.lower)..i {
                s -= self.lu.get(i, j) * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.lu.upper + 1).min(n) {
                s -= self.lu.get(i, j) * b[j];
            }
            b[i] = s / self.lu.get(i, i);
        }
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.lu.nrows;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.lu.upper)..i {
                s -= self.lu.get(j, i) * b[j];
            }
            b[i] = s / self.lu.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + self.lu.lower + 1).min(n) {
                s -= self.lu.get(j, i) * b[j];
            }
            b[i] = s;
        }
    }
}
