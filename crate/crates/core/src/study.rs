//! End-to-end runs on the Poisson presets, shared by the CLI and the
//! acceptance suite.

use crate::assembly::{assemble_system, assembly_tolerance, AssembledSystem};
use crate::bspline::{GeometryPreset, SplineSpace1D};
use crate::error::{Error, Result};
use crate::precond::{ExactFd, FdDiagnostics, LowRankFd, Preconditioner};
use crate::problems::{preset_exact, preset_load};
use crate::solver::{error_norms, tpcg, SolveReport, SolveStatus, Tolerance, TpcgConfig};
use crate::tucker::TuckerTensor3;

/// Homogeneous Dirichlet spaces of degree `p` with `n_el` elements.
pub fn poisson_spaces(p: usize, n_el: usize) -> Result<[SplineSpace1D; 3]> {
    let s = SplineSpace1D::dirichlet(p, n_el)?;
    Ok([s.clone(), s.clone(), s])
}

/// Which fast-diagonalization applicator to use.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrecondKind {
    /// Exponential-sum approximation with this relative accuracy.
    LowRank(f64),
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonOptions {
    pub p: usize,
    pub n_el: usize,
    pub precond: PrecondKind,
    pub tpcg: TpcgConfig,
    /// Coefficient approximation tolerance; `None` derives it from the
    /// solver tolerance.
    pub assembly_eps: Option<f64>,
}

impl PoissonOptions {
    pub fn new(p: usize, n_el: usize) -> Self {
        Self {
            p,
            n_el,
            precond: PrecondKind::LowRank(0.1),
            tpcg: TpcgConfig::default(),
            assembly_eps: None,
        }
    }

    fn assembly_eps(&self) -> f64 {
        self.assembly_eps.unwrap_or_else(|| {
            let t = match self.tpcg.tol {
                Tolerance::Relative(t) => t,
                Tolerance::Absolute(_) => 1e-6,
            };
            assembly_tolerance(t)
        })
    }
}

pub struct PoissonRun {
    pub spaces: [SplineSpace1D; 3],
    pub system: AssembledSystem,
    /// `None` for the exact applicator.
    pub precond: Option<FdDiagnostics>,
    pub solution: TuckerTensor3,
    pub report: SolveReport,
}

/// Assembles, preconditions and solves one preset with its default load.
pub fn solve_poisson(preset: GeometryPreset, opts: &PoissonOptions) -> Result<PoissonRun> {
    solve_with_load(preset, &preset_load(preset), opts)
}

pub fn solve_with_load(
    preset: GeometryPreset,
    load: &dyn Fn([f64; 3]) -> f64,
    opts: &PoissonOptions,
) -> Result<PoissonRun> {
    let spaces = poisson_spaces(opts.p, opts.n_el)?;
    let geo = preset.build();
    let system = assemble_system(&spaces, geo.as_ref(), load, opts.assembly_eps())?;
    let (pre, diag): (Box<dyn Preconditioner>, _) = match opts.precond {
        PrecondKind::LowRank(eps) => {
            let p = LowRankFd::from_spaces(&spaces, [1.0; 3], eps)?;
            let d = p.diagnostics();
            (Box::new(p), Some(d))
        }
        PrecondKind::Exact => (Box::new(ExactFd::from_spaces(&spaces, [1.0; 3])?), None),
    };
    let (solution, report) = tpcg(&system.operator, &system.rhs, pre.as_ref(), &opts.tpcg, None)?;
    Ok(PoissonRun {
        spaces,
        system,
        precond: diag,
        solution,
        report,
    })
}

/// One level of a manufactured-solution study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub p: usize,
    pub n_el: usize,
    pub tol_rel: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub l2: f64,
    pub h1: f64,
    pub max_rank: usize,
    pub memory_compression: f64,
}

/// Runs levels `l` (`n_el = 2^l`) of a preset with a known solution, with
/// the solver tolerance tied to the expected discretization error: the
/// first level is solved at `1e-8`, later ones at one hundredth of the
/// previous relative L² error scaled by the optimal rate `2^-(p+1)`.
pub fn convergence_study(
    preset: GeometryPreset,
    p: usize,
    levels: &[u32],
    eps_prec: f64,
    base: &TpcgConfig,
) -> Result<Vec<ConvergenceRow>> {
    let exact =
        preset_exact(preset).ok_or_else(|| Error::InvalidInput(format!("no exact solution is known on '{preset}'")))?;
    let load = preset_load(preset);
    let geo = preset.build();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut u_norm = None;
    for &level in levels {
        let n_el = 1usize << level;
        let tol_rel = match rows.last() {
            None => 1e-8,
            Some(prev) => {
                let un: f64 = u_norm.expect("set on the first level");
                let steps = level as i32 - prev.level as i32;
                let est = prev.l2 / un * 2f64.powi(-steps * (p as i32 + 1));
                (est / 100.0).clamp(1e-12, 1e-2)
            }
        };
        let opts = PoissonOptions {
            p,
            n_el,
            precond: PrecondKind::LowRank(eps_prec),
            tpcg: TpcgConfig {
                tol: Tolerance::Relative(tol_rel),
                ..*base
            },
            assembly_eps: None,
        };
        let run = solve_with_load(preset, &load, &opts)?;
        let (l2, h1) = error_norms(&run.solution, &run.spaces, geo.as_ref(), &exact)?;
        if u_norm.is_none() {
            let zero = TuckerTensor3::zeros(run.solution.dims());
            u_norm = Some(error_norms(&zero, &run.spaces, geo.as_ref(), &exact)?.0);
        }
        rows.push(ConvergenceRow {
            level,
            p,
            n_el,
            tol_rel,
            iterations: run.report.iterations,
            status: run.report.status,
            l2,
            h1,
            max_rank: run.solution.rank().max(),
            memory_compression: run.report.memory_compression,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log e` against `log(1/h)`.
pub fn fit_order(n_el: &[usize], err: &[f64]) -> Result<f64> {
    if n_el.len() != err.len() || n_el.len() < 2 {
        return Err(Error::InvalidInput("need at least two levels to fit an order".into()));
    }
    let x: Vec<f64> = n_el.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| -e.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_order_of_exact_power_law() {
        let n = [8, 16, 32];
        let e: Vec<f64> = n.iter().map(|&k| 3.0 * (k as f64).powi(-3)).collect();
        assert!((fit_order(&n, &e).unwrap() - 3.0).abs() < 1e-12);
        assert!(fit_order(&n[..1], &e[..1]).is_err());
    }
}
