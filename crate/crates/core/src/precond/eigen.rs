//! Per-direction eigendecompositions for fast diagonalization.
//!
//! For degree `p >= 3` the discrete eigenvectors of the pencil `(K, M)` are
//! approximated. The space is split into a part `V1` of splines whose
//! derivatives of the orders that the exact eigenfunctions kill at each end
//! vanish there, and its M-orthogonal complement `V2`. On `V1` the
//! eigenvectors are taken as spline interpolants of the analytic
//! eigenfunctions (sines), with the analytic eigenvalues. On the small
//! complement the projected pencil is solved exactly. Lower degrees, and
//! callers that ask for it, get the exact dense decomposition.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::{DMatrix, LU};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::bspline::{assemble_pencil, BoundaryCondition, SplineSpace1D};
use crate::error::{mismatch, Error, Result};
use crate::linalg::generalized_eigen;
use crate::tucker::{BandedLu, BandedMatrix};

/// Below this many smooth modes the sine transform is a dense multiply.
pub const FAST_TRANSFORM_MIN: usize = 32;

const PIVOT_TOL: f64 = 1e-12;

/// How the sine factor is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformMode {
    /// FFT when there are at least [`FAST_TRANSFORM_MIN`] smooth modes.
    Auto,
    Fast,
    Dense,
}

/// Eigenvector applicator `Ũ = [V1 U1 | V2 U2]` with eigenvalues `Λ̃`.
#[derive(Clone)]
pub struct ApproxEigen1D {
    n: usize,
    eigenvalues: Vec<f64>,
    kind: Kind,
    mode: TransformMode,
}

#[derive(Clone)]
enum Kind {
    Exact(DMatrix<f64>),
    Split(Box<Split>),
}

#[derive(Clone)]
struct Split {
    n1: usize,
    v1: BandedMatrix,
    v1t: BandedMatrix,
    colloc: Solver,
    sine: SineTransform,
    // V2 U2, dense n x n2.
    w2: DMatrix<f64>,
    points: Vec<f64>,
}

#[derive(Clone)]
enum Solver {
    Banded(BandedLu),
    // Factors of `A` and `Aᵀ`; nalgebra has no transposed LU solve.
    Dense(Box<[LU<f64, nalgebra::Dyn, nalgebra::Dyn>; 2]>),
}

impl Solver {
    fn new(a: &DMatrix<f64>) -> Result<Self> {
        let banded = BandedMatrix::from_dense(a, 0.0);
        if let Some(lu) = BandedLu::factor(&banded, PIVOT_TOL) {
            return Ok(Self::Banded(lu));
        }
        let lu = a.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::EigenSetup("singular collocation or Gram matrix".into()));
        }
        Ok(Self::Dense(Box::new([lu, a.transpose().lu()])))
    }

    fn solve(&self, b: &mut DMatrix<f64>, transpose: bool) {
        match self {
            Self::Banded(lu) => {
                for mut c in b.column_iter_mut() {
                    let s = c.as_mut_slice();
                    if transpose {
                        lu.solve_transpose_in_place(s);
                    } else {
                        lu.solve_in_place(s);
                    }
                }
            }
            Self::Dense(lu) => {
                lu[usize::from(transpose)].solve_mut(b);
            }
        }
    }
}

/// `S[i][j] = c_j sin((j - c) π x_i + φ)` with `x_i = (i - s) h`, `i, j`
/// 1-based, applied through one FFT of length `2 n_el` per column.
#[derive(Clone)]
struct SineTransform {
    n1: usize,
    len: usize,
    shift: f64,
    center: f64,
    phase: f64,
    scale: Vec<f64>,
    dense: DMatrix<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    fn new(n1: usize, n_el: usize, shift: f64, k0: bool, k1: bool) -> Self {
        let center = 0.5 * (f64::from(u8::from(k0)) + f64::from(u8::from(k1)));
        let phase = if k0 { PI / 2.0 } else { 0.0 };
        let scale: Vec<f64> = (1..=n1)
            .map(|j| if j as f64 == center { 1.0 } else { SQRT_2 })
            .collect();
        let h = 1.0 / n_el as f64;
        let dense = DMatrix::from_fn(n1, n1, |i, j| {
            let x = (i as f64 + 1.0 - shift) * h;
            scale[j] * ((j as f64 + 1.0 - center) * PI * x + phase).sin()
        });
        let len = 2 * n_el;
        let fft = FftPlanner::new().plan_fft_inverse(len);
        Self {
            n1,
            len,
            shift,
            center,
            phase,
            scale,
            dense,
            fft,
        }
    }

    fn apply(&self, b: &DMatrix<f64>, transpose: bool, fast: bool) -> DMatrix<f64> {
        if !fast {
            return if transpose {
                self.dense.tr_mul(b)
            } else {
                &self.dense * b
            };
        }
        let l = self.len as f64;
        let cis = |t: f64| Complex::new(t.cos(), t.sin());
        let mut out = DMatrix::zeros(self.n1, b.ncols());
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (c, col) in b.column_iter().enumerate() {
            buf.iter_mut().for_each(|v| *v = Complex::new(0.0, 0.0));
            for k in 1..=self.n1 {
                let kf = k as f64;
                buf[k % self.len] = if transpose {
                    col[k - 1] * cis(-2.0 * PI * self.center * (kf - self.shift) / l)
                } else {
                    self.scale[k - 1] * col[k - 1] * cis(-2.0 * PI * kf * self.shift / l)
                };
            }
            self.fft.process(&mut buf);
            for k in 1..=self.n1 {
                let kf = k as f64;
                let x = buf[k % self.len];
                out[(k - 1, c)] = if transpose {
                    self.scale[k - 1] * (cis(self.phase - 2.0 * PI * kf * self.shift / l) * x).im
                } else {
                    (cis(self.phase - 2.0 * PI * self.center * (kf - self.shift) / l) * x).im
                };
            }
        }
        out
    }
}

/// Derivative orders the analytic eigenfunctions annihilate at an end.
fn constrained_orders(p: usize, bc: BoundaryCondition) -> Vec<usize> {
    let start = match bc {
        BoundaryCondition::Dirichlet => 2,
        BoundaryCondition::Neumann => 1,
    };
    (start..p).step_by(2).collect()
}

impl ApproxEigen1D {
    /// Assembles the pencil of `space` and builds the decomposition.
    pub fn from_space(space: &SplineSpace1D) -> Result<Self> {
        let (k, m) = assemble_pencil(space)?;
        Self::new(space, &k, &m)
    }

    /// Approximate decomposition for `p >= 3`, exact otherwise.
    pub fn new(space: &SplineSpace1D, k: &BandedMatrix, m: &BandedMatrix) -> Result<Self> {
        if space.degree() <= 2 {
            Self::exact(k, m)
        } else {
            Self::split(space, k, m)
        }
    }

    /// Exact dense generalized eigendecomposition with `Uᵀ M U = I`.
    pub fn exact(k: &BandedMatrix, m: &BandedMatrix) -> Result<Self> {
        let n = k.nrows();
        if k.shape() != (n, n) || m.shape() != (n, n) {
            return Err(mismatch(
                "ApproxEigen1D::exact",
                format!("K {:?}, M {:?}", k.shape(), m.shape()),
            ));
        }
        let (lam, u) = generalized_eigen(&k.to_dense(), &m.to_dense())
            .map_err(|e| Error::EigenSetup(format!("exact eigendecomposition failed: {e}")))?;
        Ok(Self {
            n,
            eigenvalues: lam.into_iter().map(|l| l.max(0.0)).collect(),
            kind: Kind::Exact(u),
            mode: TransformMode::Auto,
        })
    }

    fn split(space: &SplineSpace1D, k: &BandedMatrix, m: &BandedMatrix) -> Result<Self> {
        let p = space.degree();
        let n_el = space.n_el();
        if n_el <= p {
            return Err(Error::InvalidInput(format!(
                "approximate eigendecomposition needs more elements than the degree (n_el={n_el}, p={p})"
            )));
        }
        let n = space.dim();
        let full = space.full_dim();
        let off = space.first_index();
        let [bc0, bc1] = space.bc();
        let ord = [constrained_orders(p, bc0), constrained_orders(p, bc1)];
        let mut v1_cols: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut seeds: Vec<usize> = Vec::new();
        let mut ends: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
        let mut block_full = [0usize; 2];
        for (end, orders) in ord.iter().enumerate() {
            let top = orders.iter().max().copied().unwrap_or(0);
            block_full[end] = top + 1;
            // Full index of the function `t` steps away from this end.
            let idx = |t: usize| if end == 0 { t } else { full - 1 - t };
            let x = if end == 0 { 0.0 } else { 1.0 };
            let (first, ders) = space.eval_local(x, top)?;
            let d = |order: usize, t: usize| {
                let f = idx(t);
                if f < first || f > first + p {
                    0.0
                } else {
                    ders[order][f - first]
                }
            };
            let is_seed = |t: usize| orders.contains(&t);
            // Seed block G_S[a][b] = d^{orders[a]} b_{orders[b]}, triangular.
            let r = orders.len();
            let gs = DMatrix::from_fn(r, r, |a, b| d(orders[a], orders[b]));
            let gs_lu = gs.lu();
            let mut cols = Vec::new();
            for t in 0..=top {
                let reduced = space.reduced_index(idx(t));
                let Some(ri) = reduced else { continue };
                if is_seed(t) {
                    seeds.push(ri);
                    continue;
                }
                let g = nalgebra::DVector::from_fn(r, |a, _| d(orders[a], t));
                let coef = gs_lu
                    .solve(&g)
                    .ok_or_else(|| Error::EigenSetup("singular endpoint derivative block".into()))?;
                let mut col = vec![(ri, 1.0)];
                for (a, &o) in orders.iter().enumerate() {
                    let rs = space
                        .reduced_index(idx(o))
                        .ok_or_else(|| Error::EigenSetup("seed function removed by boundary condition".into()))?;
                    col.push((rs, -coef[a]));
                }
                cols.push(col);
            }
            ends.push(cols);
        }
        let lo = block_full[0].max(off) - off;
        let hi = (full - block_full[1]).min(off + n) - off;
        if lo > hi {
            return Err(Error::InvalidInput("boundary blocks overlap; refine the mesh".into()));
        }
        v1_cols.append(&mut ends[0]);
        v1_cols.extend((lo..hi).map(|i| vec![(i, 1.0)]));
        v1_cols.append(&mut ends[1]);
        let n1 = v1_cols.len();
        let n2 = seeds.len();
        debug_assert_eq!(n1 + n2, n);
        let mut v1d = DMatrix::zeros(n, n1);
        for (c, col) in v1_cols.iter().enumerate() {
            for &(r, v) in col {
                v1d[(r, c)] = v;
            }
        }
        let v1 = BandedMatrix::from_dense(&v1d, 0.0);
        let v1t = v1.transpose();

        // Interpolation points and collocation matrix Bcol[j][i] = v_i(x_j).
        let h = 1.0 / n_el as f64;
        let k0 = bc0 == BoundaryCondition::Neumann;
        let k1 = bc1 == BoundaryCondition::Neumann;
        let shift = if p.is_multiple_of(2) {
            0.5
        } else if k0 {
            1.0
        } else {
            0.0
        };
        let points: Vec<f64> = (1..=n1).map(|i| ((i as f64 - shift) * h).clamp(0.0, 1.0)).collect();
        let mut bcol = DMatrix::zeros(n1, n1);
        for (j, &x) in points.iter().enumerate() {
            let vals = space.eval_basis(x, 0)?;
            let row = nalgebra::DVector::from_fn(n, |r, _| vals.iter().find(|(i, _)| *i == r).map_or(0.0, |(_, v)| *v));
            let row_v1 = v1t.mul_dense(&DMatrix::from_column_slice(n, 1, row.as_slice()))?;
            for i in 0..n1 {
                bcol[(j, i)] = row_v1[(i, 0)];
            }
        }
        let colloc = Solver::new(&bcol)?;
        let sine = SineTransform::new(n1, n_el, shift, k0, k1);
        let center = 0.5 * (f64::from(u8::from(k0)) + f64::from(u8::from(k1)));
        let mut eigenvalues: Vec<f64> = (1..=n1).map(|j| ((j as f64 - center) * PI).powi(2)).collect();

        // V2: seeds with their V1 component removed M-orthogonally.
        let mut s = DMatrix::zeros(n, n2);
        for (c, &r) in seeds.iter().enumerate() {
            s[(r, c)] = 1.0;
        }
        let mv1 = m.mul_dense(&v1d)?;
        let gram = v1t.mul_dense(&mv1)?;
        let gram = (&gram + gram.transpose()) * 0.5;
        let gram_solver = Solver::new(&gram)?;
        let mut coef = mv1.tr_mul(&s);
        gram_solver.solve(&mut coef, false);
        let v2 = &s - v1.mul_dense(&coef)?;
        let k2 = v2.tr_mul(&k.mul_dense(&v2)?);
        let m2 = v2.tr_mul(&m.mul_dense(&v2)?);
        let m2 = (&m2 + m2.transpose()) * 0.5;
        let k2 = (&k2 + k2.transpose()) * 0.5;
        let diag_min = (0..n2).map(|i| m.get(seeds[i], seeds[i])).fold(f64::INFINITY, f64::min);
        let eig_min = m2.clone().symmetric_eigenvalues().min();
        if n2 > 0 && !(eig_min > 1e-10 * diag_min) {
            return Err(Error::EigenSetup(format!(
                "projected boundary seeds are nearly dependent (smallest Gram eigenvalue {eig_min:e})"
            )));
        }
        let (lam2, u2) = if n2 == 0 {
            (Vec::new(), DMatrix::zeros(0, 0))
        } else {
            generalized_eigen(&k2, &m2)?
        };
        eigenvalues.extend(lam2.iter().map(|l| l.max(0.0)));
        let w2 = v2 * u2;
        Ok(Self {
            n,
            eigenvalues,
            kind: Kind::Split(Box::new(Split {
                n1,
                v1,
                v1t,
                colloc,
                sine,
                w2,
                points,
            })),
            mode: TransformMode::Auto,
        })
    }

    pub fn with_mode(mut self, mode: TransformMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(n1, n2)`: smooth and boundary parts. The exact path reports `(n, 0)`.
    pub fn split_dims(&self) -> (usize, usize) {
        match &self.kind {
            Kind::Exact(_) => (self.n, 0),
            Kind::Split(s) => (s.n1, self.n - s.n1),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, Kind::Exact(_))
    }

    /// `Λ̃`, ordered like the columns of `Ũ`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Interpolation points of the smooth part (empty on the exact path).
    pub fn interpolation_points(&self) -> &[f64] {
        match &self.kind {
            Kind::Exact(_) => &[],
            Kind::Split(s) => &s.points,
        }
    }

    fn fast(&self, n1: usize) -> bool {
        match self.mode {
            TransformMode::Auto => n1 >= FAST_TRANSFORM_MIN,
            TransformMode::Fast => true,
            TransformMode::Dense => false,
        }
    }

    /// `Ũ B` or `Ũᵀ B` for an `n x r` block.
    pub fn apply(&self, b: &DMatrix<f64>, transpose: bool) -> Result<DMatrix<f64>> {
        if b.nrows() != self.n {
            return Err(mismatch(
                "ApproxEigen1D::apply",
                format!("eigenvector matrix is {0}x{0}, block has {1} rows", self.n, b.nrows()),
            ));
        }
        if b.ncols() == 0 {
            return Ok(DMatrix::zeros(self.n, 0));
        }
        let s = match &self.kind {
            Kind::Exact(u) => return Ok(if transpose { u.tr_mul(b) } else { u * b }),
            Kind::Split(s) => s,
        };
        let fast = self.fast(s.n1);
        let n2 = self.n - s.n1;
        if transpose {
            let mut t = s.v1t.mul_dense(b)?;
            s.colloc.solve(&mut t, true);
            let top = s.sine.apply(&t, true, fast);
            let bottom = s.w2.tr_mul(b);
            let mut out = DMatrix::zeros(self.n, b.ncols());
            out.rows_mut(0, s.n1).copy_from(&top);
            out.rows_mut(s.n1, n2).copy_from(&bottom);
            Ok(out)
        } else {
            let top = b.rows(0, s.n1).into_owned();
            let mut t = s.sine.apply(&top, false, fast);
            s.colloc.solve(&mut t, false);
            let mut out = s.v1.mul_dense(&t)?;
            out += &s.w2 * b.rows(s.n1, n2);
            Ok(out)
        }
    }

    /// Dense `Ũ`, materialized through [`apply`](Self::apply).
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        self.apply(&DMatrix::identity(self.n, self.n), false)
    }
}
