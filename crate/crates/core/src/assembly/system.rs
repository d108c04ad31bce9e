use std::sync::Arc;

use nalgebra::DMatrix;

use super::separable::{approximate_function_with, ApproxOptions, SeparableFunction3};
use crate::bspline::{metric, weighted_matrix, weighted_vector, GeometryMap, SplineSpace1D};
use crate::error::{mismatch, Result};
use crate::sampling::halton_points;
use crate::tucker::{BandedMatrix, DenseTensor3, MultilinearRank, TuckerOperator3, TuckerTensor3};

/// Coefficient functions of a second-order form
/// `a(u, v) = ∫ Σ_{k,l} c_{kl} ∂_k u ∂_l v`, indexed `[k][l]` with `k` the
/// trial derivative and `l` the test derivative. `None` means zero.
pub type CoefficientGrid = [[Option<Arc<SeparableFunction3>>; 3]; 3];

/// Output of [`assemble_system`].
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub operator: TuckerOperator3,
    pub rhs: TuckerTensor3,
    /// Separable rank of each metric coefficient, `[k][l]`.
    pub block_ranks: [[MultilinearRank; 3]; 3],
    pub coefficients: CoefficientGrid,
    pub load_weight: SeparableFunction3,
}

impl AssembledSystem {
    /// Operator ranks `(R₁, R₂, R₃)`; equal to the sum of the block ranks.
    pub fn ranks(&self) -> MultilinearRank {
        self.operator.rank()
    }
}

/// Tolerance used for coefficient approximation given a relative solver
/// tolerance.
pub fn assembly_tolerance(tol: f64) -> f64 {
    (tol * 0.1).max(1e-12)
}

/// Separable approximations of the six distinct entries of the metric
/// `Q(η)`; entry `(l, k)` shares the approximation of `(k, l)`.
pub fn approximate_metric(geo: &dyn GeometryMap, eps: f64) -> Result<CoefficientGrid> {
    let scale = halton_points(1000)
        .into_iter()
        .map(|x| metric(geo, x).map(|(q, _)| q.abs().max()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut grid: CoefficientGrid = Default::default();
    for k in 0..3 {
        for l in k..3 {
            let g = |x: [f64; 3]| metric(geo, x).map(|(q, _)| q[(k, l)]);
            let f = approximate_function_with(&g, eps, Some(scale), ApproxOptions::default())?;
            if !f.is_zero() {
                let f = Arc::new(f);
                grid[k][l] = Some(f.clone());
                grid[l][k] = Some(f);
            }
        }
    }
    Ok(grid)
}

/// Separable approximation of `ω(η) = |det J(η)| f(F(η))`.
pub fn approximate_load(geo: &dyn GeometryMap, load: &dyn Fn([f64; 3]) -> f64, eps: f64) -> Result<SeparableFunction3> {
    let g = |x: [f64; 3]| metric(geo, x).map(|(_, det)| det * load(geo.eval(x)));
    approximate_function_with(&g, eps, None, ApproxOptions::default())
}

/// Assembles the Tucker operator of the form with coefficients `coeffs`,
/// test functions from `test` and trial functions from `trial`. Each
/// nonzero coefficient contributes one diagonal block to the core.
pub fn assemble_operator(
    test: &[SplineSpace1D; 3],
    trial: &[SplineSpace1D; 3],
    coeffs: &CoefficientGrid,
) -> Result<TuckerOperator3> {
    let mut factors: [Vec<BandedMatrix>; 3] = Default::default();
    let mut blocks: Vec<(&SeparableFunction3, [usize; 3])> = Vec::new();
    let mut width = [0usize; 3];
    for k in 0..3 {
        for l in 0..3 {
            let Some(c) = coeffs[k][l].as_deref() else { continue };
            if c.is_zero() {
                continue;
            }
            let r = c.rank().0;
            for t in 0..3 {
                let d_row = usize::from(t == l);
                let d_col = usize::from(t == k);
                for col in 0..r[t] {
                    factors[t].push(weighted_matrix(
                        &test[t],
                        &trial[t],
                        d_row,
                        d_col,
                        &c.factor_column(t, col),
                    )?);
                }
            }
            blocks.push((c, width));
            for t in 0..3 {
                width[t] += r[t];
            }
        }
    }
    if blocks.is_empty() {
        let zero = std::array::from_fn(|t| vec![BandedMatrix::zeros(test[t].dim(), trial[t].dim(), 0, 0)]);
        return TuckerOperator3::new(DenseTensor3::zeros([1, 1, 1]), zero);
    }
    let mut core = DenseTensor3::zeros(width);
    for (c, off) in blocks {
        core.add_block(off, 1.0, c.coefficients().core());
    }
    TuckerOperator3::new(core, factors)
}

/// Right-hand side `[f]_i = ∫ b_i ω̃` as a Tucker tensor.
pub fn assemble_rhs(test: &[SplineSpace1D; 3], weight: &SeparableFunction3) -> Result<TuckerTensor3> {
    let dims = [test[0].dim(), test[1].dim(), test[2].dim()];
    if weight.is_zero() {
        return Ok(TuckerTensor3::zeros(dims));
    }
    let r = weight.rank().0;
    let mut factors: [DMatrix<f64>; 3] = Default::default();
    for t in 0..3 {
        let mut f = DMatrix::zeros(dims[t], r[t]);
        for col in 0..r[t] {
            let v = weighted_vector(&test[t], &weight.factor_column(t, col))?;
            f.set_column(col, &nalgebra::DVector::from_vec(v));
        }
        factors[t] = f;
    }
    TuckerTensor3::new(weight.coefficients().core().clone(), factors)
}

/// Assembles the pulled-back Poisson problem `-Δu = f` with homogeneous
/// boundary data encoded in the spaces' boundary flags.
pub fn assemble_system(
    spaces: &[SplineSpace1D; 3],
    geo: &dyn GeometryMap,
    load: &dyn Fn([f64; 3]) -> f64,
    eps: f64,
) -> Result<AssembledSystem> {
    for t in 0..3 {
        if spaces[t].dim() == 0 {
            return Err(mismatch("assemble_system", format!("space {t} is empty")));
        }
    }
    let coefficients = approximate_metric(geo, eps)?;
    let load_weight = approximate_load(geo, load, eps)?;
    let operator = assemble_operator(spaces, spaces, &coefficients)?;
    let rhs = assemble_rhs(spaces, &load_weight)?;
    let block_ranks = std::array::from_fn(|k| {
        std::array::from_fn(|l| {
            coefficients[k][l]
                .as_ref()
                .map_or(MultilinearRank([0; 3]), |c| c.rank())
        })
    });
    Ok(AssembledSystem {
        operator,
        rhs,
        block_ranks,
        coefficients,
        load_weight,
    })
}
