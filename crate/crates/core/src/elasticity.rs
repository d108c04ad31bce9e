//! Compressible linear elasticity as a 3×3 block of Tucker operators.
//!
//! For test component `i` and trial component `j` the pulled-back form is
//! `∫ Σ_{k,l} C^{ij}_{kl} ∂_k u ∂_l v dη` with `G = J⁻¹` and
//! `C^{ij}_{kl} = |det J| (μ δ_ij (G Gᵀ)_{kl} + μ G_{ki} G_{lj} + λ G_{kj} G_{li})`.

use std::sync::Arc;

use nalgebra::Matrix3;

use crate::assembly::{
    approximate_function_with, approximate_load, assemble_operator, assemble_rhs, dirichlet_lift, ApproxOptions,
    BoundaryData, CoefficientGrid, Face,
};
use crate::bspline::geometry::invert_jacobian;
use crate::bspline::{BoundaryCondition, GeometryMap, SplineSpace1D};
use crate::error::{Error, Result};
use crate::precond::{LowRankFd, SharedPreconditioner};
use crate::sampling::halton_points;
use crate::solver::{tpcg_blocks, BlockDiagonal, BlockOperator, SolveReport, TpcgConfig};
use crate::tucker::{MultilinearRank, TuckerOperator3, TuckerTensor3};

/// Lamé parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    /// `λ = 0.3/0.52`, `μ = 1/2.6`, i.e. `E = 1`, `ν = 0.3`.
    pub const PRESET: Lame = Lame {
        lambda: 0.3 / 0.52,
        mu: 1.0 / 2.6,
    };

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.mu > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Lamé parameters need λ >= 0, μ > 0 (got λ={}, μ={})",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }
}

/// Clamped at `η₃ = 0` and `η₃ = 1`, traction free elsewhere.
pub fn column_spaces(p: usize, n_el: usize) -> Result<[SplineSpace1D; 3]> {
    use BoundaryCondition::*;
    Ok([
        SplineSpace1D::new(p, n_el, [Neumann, Neumann])?,
        SplineSpace1D::new(p, n_el, [Neumann, Neumann])?,
        SplineSpace1D::new(p, n_el, [Dirichlet, Dirichlet])?,
    ])
}

/// Prescribed vertical displacement of the top face.
pub fn top_displacement(value: f64) -> BoundaryData {
    BoundaryData::Constant {
        face: Face { direction: 2, end: 1 },
        value,
    }
}

/// `C^{ij}(η)` as a 3×3 matrix over `(k, l)`.
pub fn coefficient_matrix(
    geo: &dyn GeometryMap,
    lame: Lame,
    i: usize,
    j: usize,
    eta: [f64; 3],
) -> Result<Matrix3<f64>> {
    let (g, det) = invert_jacobian(&geo.jacobian(eta), eta)?;
    let q = g * g.transpose();
    let Lame { lambda, mu } = lame;
    let diag = if i == j { mu } else { 0.0 };
    Ok(Matrix3::from_fn(|k, l| {
        det * (diag * q[(k, l)] + mu * g[(k, i)] * g[(l, j)] + lambda * g[(k, j)] * g[(l, i)])
    }))
}

/// Separable approximations of all coefficient grids, indexed
/// `[i][j][k][l]`. Block `(j, i)` reuses the transposed grid of `(i, j)`.
pub fn elasticity_coefficients(geo: &dyn GeometryMap, lame: Lame, eps: f64) -> Result<[[CoefficientGrid; 3]; 3]> {
    lame.validate()?;
    let samples = halton_points(1000);
    let mut scale = 0.0f64;
    for &x in &samples {
        for i in 0..3 {
            for j in i..3 {
                scale = scale.max(coefficient_matrix(geo, lame, i, j, x)?.abs().max());
            }
        }
    }
    let mut out: [[CoefficientGrid; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in i..3 {
            let mut grid: CoefficientGrid = Default::default();
            for k in 0..3 {
                // Diagonal blocks are symmetric in (k, l).
                let l0 = if i == j { k } else { 0 };
                for l in l0..3 {
                    let g = |x: [f64; 3]| coefficient_matrix(geo, lame, i, j, x).map(|c| c[(k, l)]);
                    let f = approximate_function_with(&g, eps, Some(scale), ApproxOptions::default())?;
                    if f.is_zero() {
                        continue;
                    }
                    let f = Arc::new(f);
                    grid[k][l] = Some(f.clone());
                    if i == j {
                        grid[l][k] = Some(f);
                    }
                }
            }
            if i != j {
                out[j][i] = std::array::from_fn(|k| std::array::from_fn(|l| grid[l][k].clone()));
            }
            out[i][j] = grid;
        }
    }
    Ok(out)
}

/// Sum of the separable ranks of a coefficient grid: the operator rank of
/// the block it assembles to.
pub fn grid_rank(grid: &CoefficientGrid) -> MultilinearRank {
    let mut r = [0; 3];
    for row in grid {
        for c in row.iter().flatten() {
            for t in 0..3 {
                r[t] += c.rank().0[t];
            }
        }
    }
    MultilinearRank(r)
}

#[derive(Clone, Debug)]
pub struct ElasticitySystem {
    pub operator: BlockOperator,
    /// Right-hand side with the Dirichlet lift already subtracted.
    pub rhs: Vec<TuckerTensor3>,
    pub coefficients: [[CoefficientGrid; 3]; 3],
    pub block_ranks: [[MultilinearRank; 3]; 3],
}

/// Assembles the block system for a body force `load` (physical
/// coordinates) and Dirichlet data on the third displacement component.
pub fn assemble_elasticity(
    spaces: &[SplineSpace1D; 3],
    geo: &dyn GeometryMap,
    load: [f64; 3],
    lame: Lame,
    boundary: &BoundaryData,
    eps: f64,
) -> Result<ElasticitySystem> {
    let coefficients = elasticity_coefficients(geo, lame, eps)?;
    let dims = [spaces[0].dim(), spaces[1].dim(), spaces[2].dim()];
    let mut blocks: Vec<Vec<Option<TuckerOperator3>>> = vec![vec![None, None, None]; 3];
    let mut block_ranks = [[MultilinearRank([0; 3]); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let grid = &coefficients[i][j];
            block_ranks[i][j] = grid_rank(grid);
            if grid.iter().flatten().any(Option::is_some) {
                blocks[i][j] = Some(assemble_operator(spaces, spaces, grid)?);
            }
        }
    }
    let mut rhs = Vec::with_capacity(3);
    for (i, &fi) in load.iter().enumerate() {
        let f = if fi == 0.0 {
            TuckerTensor3::zeros(dims)
        } else {
            assemble_rhs(spaces, &approximate_load(geo, &|_| fi, eps)?)?
        };
        // The lift lives in the third component only.
        rhs.push(dirichlet_lift(spaces, &coefficients[i][2], &f, boundary)?);
    }
    Ok(ElasticitySystem {
        operator: BlockOperator::new(blocks, vec![dims; 3])?,
        rhs,
        coefficients,
        block_ranks,
    })
}

/// Direction weights of the parametric diagonal block `i`: `2μ + λ` along
/// direction `i`, `μ` elsewhere.
pub fn preconditioner_weights(lame: Lame, i: usize) -> [f64; 3] {
    std::array::from_fn(|d| if d == i { 2.0 * lame.mu + lame.lambda } else { lame.mu })
}

/// Block-diagonal low-rank fast-diagonalization preconditioner built from
/// the geometry-free diagonal blocks.
pub fn block_preconditioner(spaces: &[SplineSpace1D; 3], lame: Lame, eps_prec: f64) -> Result<BlockDiagonal> {
    lame.validate()?;
    let blocks = (0..3)
        .map(|i| {
            let p: SharedPreconditioner = Arc::new(LowRankFd::from_spaces(
                spaces,
                preconditioner_weights(lame, i),
                eps_prec,
            )?);
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockDiagonal(blocks))
}

/// Block TPCG on an assembled system.
pub fn solve_elasticity(
    sys: &ElasticitySystem,
    precond: &BlockDiagonal,
    cfg: &TpcgConfig,
) -> Result<(Vec<TuckerTensor3>, SolveReport)> {
    tpcg_blocks(&sys.operator, &sys.rhs, precond, cfg, None)
}
