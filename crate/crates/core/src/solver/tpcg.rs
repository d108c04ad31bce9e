//! Truncated preconditioned conjugate gradients on Tucker block vectors.
//!
//! The iterate is updated with the dynamic truncation; residual, search
//! direction and its image are truncated at the relative tolerance
//! `η_k = β·tol/‖r_k‖`, so their error stays a fixed fraction of the
//! stopping tolerance. The residual is recomputed from `f - A x` every step.

use std::time::{Duration, Instant};

use crate::error::{mismatch, Error, Result};
use crate::precond::Preconditioner;
use crate::tucker::{
    truncate_dynamic_blocks, DynamicParams, MultilinearRank, TuckerOperator3, TuckerSum, TuckerTensor3,
};

use super::block::{block_inner, block_norm, lazy_axpy, truncate_blocks, BlockMap};
use super::metrics::memory_compression_blocks;

/// Stopping tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tolerance {
    /// Multiplied by `‖f‖` before the loop starts.
    Relative(f64),
    Absolute(f64),
}

impl Tolerance {
    pub fn absolute(&self, rhs_norm: f64) -> f64 {
        match *self {
            Tolerance::Relative(t) => t * rhs_norm,
            Tolerance::Absolute(t) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TpcgConfig {
    pub tol: Tolerance,
    /// Fraction of the stopping tolerance spent on relative truncations.
    pub beta: f64,
    /// Initial tolerance of the dynamic truncation.
    pub eps0: f64,
    pub alpha: f64,
    /// Floor of the dynamic tolerance; `None` uses `0.1·tol_abs`.
    pub eps_min: Option<f64>,
    pub delta: f64,
    pub max_iterations: usize,
}

impl Default for TpcgConfig {
    fn default() -> Self {
        Self {
            tol: Tolerance::Relative(1e-6),
            beta: 0.1,
            eps0: 0.1,
            alpha: 0.5,
            eps_min: None,
            delta: 1e-3,
            max_iterations: 500,
        }
    }
}

impl TpcgConfig {
    fn validate(&self) -> Result<()> {
        let tol = match self.tol {
            Tolerance::Relative(t) | Tolerance::Absolute(t) => t,
        };
        let ok = tol >= 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.eps0 > 0.0
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.delta > 0.0
            && self.eps_min.is_none_or(|e| e > 0.0);
        if !ok {
            return Err(Error::InvalidInput(format!("invalid TPCG configuration {self:?}")));
        }
        Ok(())
    }

    /// Dynamic-truncation floor actually used for a given absolute tolerance.
    pub fn effective_eps_min(&self, tol_abs: f64) -> f64 {
        self.eps_min.unwrap_or(0.1 * tol_abs).clamp(f64::EPSILON, self.eps0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// `p·Ap <= 0` after truncation.
    Breakdown,
}

/// State after iteration `iter` (0 is the initial residual).
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iter: usize,
    /// Norm of the truncated residual, the quantity the stopping test uses.
    pub res_norm: f64,
    /// Per-component ranks of `x_k`, `r_k` and `p_k`.
    pub rank_x: Vec<MultilinearRank>,
    pub rank_r: Vec<MultilinearRank>,
    pub rank_p: Vec<MultilinearRank>,
    /// Dynamic truncation tolerance after this iteration.
    pub eps: f64,
}

fn max_rank(r: &[MultilinearRank]) -> MultilinearRank {
    r.iter().fold(MultilinearRank([0; 3]), |m, x| m.join(x))
}

impl IterationRecord {
    pub fn max_rank_x(&self) -> MultilinearRank {
        max_rank(&self.rank_x)
    }

    pub fn max_rank_r(&self) -> MultilinearRank {
        max_rank(&self.rank_r)
    }

    pub fn max_rank_p(&self) -> MultilinearRank {
        max_rank(&self.rank_p)
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub rhs_norm: f64,
    pub tol_abs: f64,
    /// `‖f - A x‖` of the returned solution, without truncation.
    pub exact_residual: f64,
    pub memory_compression: f64,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.res_norm)
    }

    /// Largest ratio `‖r_{k+1}‖ / ‖r_k‖` over the history (0 if monotone).
    pub fn max_residual_increase(&self) -> f64 {
        self.history
            .windows(2)
            .map(|w| w[1].res_norm / w[0].res_norm)
            .filter(|q| *q > 1.0)
            .fold(0.0, f64::max)
    }
}

fn residual(a: &dyn BlockMap, f: &[TuckerTensor3], x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
    let ax = a.apply_blocks(x)?;
    f.iter()
        .zip(ax)
        .map(|(fi, axi)| {
            let mut s = TuckerSum::from_tucker(fi);
            s.append(&axi, -1.0)?;
            Ok(s)
        })
        .collect()
}

fn sum_norm(s: &[TuckerSum]) -> f64 {
    s.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt()
}

fn ranks(x: &[TuckerTensor3]) -> Vec<MultilinearRank> {
    x.iter().map(|t| t.rank()).collect()
}

/// Solves `A x = f` for block vectors. `x0 = None` starts from zero.
pub fn tpcg_blocks(
    a: &dyn BlockMap,
    f: &[TuckerTensor3],
    precond: &dyn BlockMap,
    cfg: &TpcgConfig,
    x0: Option<&[TuckerTensor3]>,
) -> Result<(Vec<TuckerTensor3>, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let dims = a.block_dims();
    let fdims: Vec<_> = f.iter().map(|x| x.dims()).collect();
    if dims != fdims || precond.block_dims() != dims {
        return Err(mismatch(
            "tpcg",
            format!(
                "operator {dims:?}, rhs {fdims:?}, preconditioner {:?}",
                precond.block_dims()
            ),
        ));
    }
    let mut x: Vec<TuckerTensor3> = match x0 {
        Some(x0) => {
            if x0.iter().map(|x| x.dims()).collect::<Vec<_>>() != dims {
                return Err(mismatch("tpcg", "initial guess has the wrong shape"));
            }
            x0.to_vec()
        }
        None => dims.iter().map(|&d| TuckerTensor3::zeros(d)).collect(),
    };
    let rhs_norm = block_norm(f);
    let tol_abs = cfg.tol.absolute(rhs_norm);
    let eps_min = cfg.effective_eps_min(tol_abs);
    let mut eps = cfg.eps0;

    let r_lazy = residual(a, f, &x)?;
    let r_exact = sum_norm(&r_lazy);
    let mut history = Vec::new();
    let finish = |x: Vec<TuckerTensor3>, status, history: Vec<IterationRecord>| -> Result<_> {
        let exact_residual = sum_norm(&residual(a, f, &x)?);
        let iterations = history.last().map_or(0, |r: &IterationRecord| r.iter);
        let report = SolveReport {
            status,
            iterations,
            history,
            rhs_norm,
            tol_abs,
            exact_residual,
            memory_compression: memory_compression_blocks(&x),
            wall_time: start.elapsed(),
        };
        Ok((x, report))
    };
    if r_exact <= tol_abs {
        history.push(IterationRecord {
            iter: 0,
            res_norm: r_exact,
            rank_x: ranks(&x),
            rank_r: vec![MultilinearRank([0; 3]); x.len()],
            rank_p: vec![MultilinearRank([0; 3]); x.len()],
            eps,
        });
        return finish(x, SolveStatus::Converged, history);
    }
    let mut eta = cfg.beta * tol_abs / r_exact;
    let mut r = truncate_blocks(&r_lazy, eta)?;
    let mut res = block_norm(&r);
    let mut z = truncate_blocks(&precond.apply_blocks(&r)?, eta)?;
    let mut p = z.clone();
    let mut q = truncate_blocks(&a.apply_blocks(&p)?, eta)?;
    let mut xi = block_inner(&p, &q)?;
    history.push(IterationRecord {
        iter: 0,
        res_norm: res,
        rank_x: ranks(&x),
        rank_r: ranks(&r),
        rank_p: ranks(&p),
        eps,
    });
    if !(xi > 0.0) {
        return finish(x, SolveStatus::Breakdown, history);
    }
    let params = DynamicParams {
        alpha: cfg.alpha,
        eps_min,
        delta: cfg.delta,
    };
    for k in 1..=cfg.max_iterations {
        let omega = block_inner(&r, &p)? / xi;
        let mut prev_blocks = Vec::with_capacity(x.len());
        let proposal = x
            .iter()
            .zip(&p)
            .map(|(xi, pi)| {
                let mut s = TuckerSum::from_tucker(xi);
                prev_blocks.push(s.num_blocks());
                s.push_tucker(pi, omega)?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let (xn, eps_new, _, _) = truncate_dynamic_blocks(&proposal, &prev_blocks, eps, params)?;
        x = xn;
        eps = eps_new;

        r = truncate_blocks(&residual(a, f, &x)?, eta)?;
        res = block_norm(&r);
        let converged = res <= tol_abs;
        if !converged {
            eta = cfg.beta * tol_abs / res;
            z = truncate_blocks(&precond.apply_blocks(&r)?, eta)?;
            let beta_k = -block_inner(&z, &q)? / xi;
            p = truncate_blocks(&lazy_axpy(&z, beta_k, &p)?, eta)?;
            q = truncate_blocks(&a.apply_blocks(&p)?, eta)?;
            xi = block_inner(&p, &q)?;
        }
        history.push(IterationRecord {
            iter: k,
            res_norm: res,
            rank_x: ranks(&x),
            rank_r: ranks(&r),
            rank_p: ranks(&p),
            eps,
        });
        if converged {
            return finish(x, SolveStatus::Converged, history);
        }
        if !(xi > 0.0) {
            return finish(x, SolveStatus::Breakdown, history);
        }
    }
    finish(x, SolveStatus::MaxIterations, history)
}

/// Single-component convenience wrapper around [`tpcg_blocks`].
pub fn tpcg(
    a: &TuckerOperator3,
    f: &TuckerTensor3,
    precond: &dyn Preconditioner,
    cfg: &TpcgConfig,
    x0: Option<&TuckerTensor3>,
) -> Result<(TuckerTensor3, SolveReport)> {
    let x0 = x0.map(|x| vec![x.clone()]);
    let (mut x, report) = tpcg_blocks(a, std::slice::from_ref(f), &PrecondMap(precond), cfg, x0.as_deref())?;
    Ok((x.pop().expect("one component"), report))
}

struct PrecondMap<'a>(&'a dyn Preconditioner);

impl BlockMap for PrecondMap<'_> {
    fn block_dims(&self) -> Vec<[usize; 3]> {
        vec![self.0.dims()]
    }

    fn apply_blocks(&self, x: &[TuckerTensor3]) -> Result<Vec<TuckerSum>> {
        x.iter().map(|xi| self.0.apply_lazy(xi)).collect()
    }
}
