//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line. Tolerances are pinned in the constants below.

mod common;

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use tuckeriga::assembly::{assemble_system, assembly_tolerance};
use tuckeriga::bspline::{assemble_pencil, BoundaryCondition, SplineSpace1D};
use tuckeriga::elasticity::{
    assemble_elasticity, block_preconditioner, column_spaces, solve_elasticity, top_displacement, Lame,
};
use tuckeriga::oracle::{dense_block_operator, dense_kron_operator, dense_solve, dense_vector};
use tuckeriga::precond::{build_exp_sum, sandwich_diagonal, ApproxEigen1D, LowRankFd, Preconditioner, TransformMode};
use tuckeriga::problems::preset_load;
use tuckeriga::solver::{memory_compression_blocks, tpcg, SolveStatus, Tolerance, TpcgConfig};
use tuckeriga::study::{convergence_study, fit_order, poisson_spaces, solve_poisson, PoissonOptions};
use tuckeriga::tucker::{truncate_rel, tucker_add, tucker_inner, tucker_matvec};
use tuckeriga::{GeometryPreset, TuckerOperator3, TuckerTensor3};

/// Criterion 1: relative slack on the truncation bound for rounding.
const TRUNC_SLACK: f64 = 1.0 + 1e-10;
const ALGEBRA_TOL: f64 = 1e-12;
/// Criterion 3: rank budgets, twice the tabulated best ranks.
const EXPSUM_CASES: [(f64, usize); 2] = [(1.6e4, 22), (2.6e5, 32)];
const SANDWICH_RANGE: (f64, f64) = (0.9, 1.1);
const ANNULUS_MAX_ITERS: usize = 30;
const ANNULUS_MAX_SPREAD: f64 = 1.5;
const ORDER_TOL: f64 = 0.3;
const SHELL_RANKS: [usize; 3] = [13, 13, 9];
const SHELL_RANK_SLACK: usize = 2;
/// Criterion 8: the exact residual may exceed the truncated one the
/// solver stops on; allowed factor on the energy-norm bound.
const ENERGY_SLACK: f64 = 2.0;
const EIGEN_INTERP_TOL: f64 = 1e-10;
const EIGEN_FAST_TOL: f64 = 1e-12;
const ELASTICITY_MAX_ITERS: usize = 60;
const ELASTICITY_DENSE_TOL: f64 = 1e-6;

fn report(id: u32, name: &str, ok: bool, detail: String) {
    // Written past the test harness capture so every line reaches the log.
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {id:>2} [{verdict}] {name}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn dense_tensor(x: &TuckerTensor3) -> DVector<f64> {
    dense_vector(x).unwrap()
}

#[test]
fn c01_truncation_contract() {
    let t0 = Instant::now();
    let mut rng = common::rng(101);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..500 {
        let (n, r) = common::random_shape(&mut rng, 16, 6);
        let y = common::random_tucker(&mut rng, n, r);
        let yd = dense_tensor(&y);
        for eps in [1e-1, 1e-3, 1e-6] {
            let t = truncate_rel(&y, eps).unwrap();
            let ratio = (dense_tensor(&t) - &yd).norm() / (eps * yd.norm());
            worst = worst.max(ratio);
            cases += 1;
        }
    }
    let ok = worst <= TRUNC_SLACK;
    report(
        1,
        "truncation contract",
        ok,
        format!("{cases} cases, max ‖y−ỹ‖/(ε‖y‖) = {worst:.3}, {:.1?}", t0.elapsed()),
    );
}

#[test]
fn c02_algebra_matches_dense_oracles() {
    let t0 = Instant::now();
    let mut rng = common::rng(202);
    let (mut e_mv, mut e_add, mut e_in) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let (n, r) = common::random_shape(&mut rng, 7, 3);
        let rows: [usize; 3] = std::array::from_fn(|_| rng_dim(&mut rng));
        let x = common::random_tucker(&mut rng, n, r);
        let (_, r2) = common::random_shape(&mut rng, 7, 3);
        let r2 = std::array::from_fn(|t| r2[t].min(n[t]));
        let y = common::random_tucker(&mut rng, n, r2);
        let op: TuckerOperator3 = common::random_operator(&mut rng, rows, n, [2, 1, 3], 1);
        let (xd, yd) = (dense_tensor(&x), dense_tensor(&y));

        let want = dense_kron_operator(&op).unwrap() * &xd;
        e_mv = e_mv.max(common::rel_err(&dense_tensor(&tucker_matvec(&op, &x).unwrap()), &want));
        e_add = e_add.max(common::rel_err(
            &dense_tensor(&tucker_add(&x, &y).unwrap()),
            &(&xd + &yd),
        ));
        let dot = xd.dot(&yd);
        e_in = e_in.max((tucker_inner(&x, &y).unwrap() - dot).abs() / (xd.norm() * yd.norm()));
    }
    let ok = e_mv <= ALGEBRA_TOL && e_add <= ALGEBRA_TOL && e_in <= ALGEBRA_TOL;
    report(
        2,
        "algebra vs dense oracles",
        ok,
        format!(
            "200 instances, matvec {e_mv:.1e}, add {e_add:.1e}, inner {e_in:.1e}, {:.1?}",
            t0.elapsed()
        ),
    );
}

fn rng_dim(rng: &mut rand_chacha::ChaCha8Rng) -> usize {
    use rand::Rng;
    rng.random_range(1..=7)
}

#[test]
fn c03_exponential_sum_quality() {
    let t0 = Instant::now();
    let eps = 0.1;
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, budget) in EXPSUM_CASES {
        let s = build_exp_sum(1.0, m, eps).unwrap();
        let err = s.sup_error(100_000);
        let good = err <= eps / m && s.rank() <= budget;
        ok &= good;
        parts.push(format!(
            "M={m:.1e}: R={} (≤{budget}), err={err:.2e} (≤{:.2e})",
            s.rank(),
            eps / m
        ));
    }
    report(
        3,
        "exp-sum quality",
        ok,
        format!("{}, {:.1?}", parts.join("; "), t0.elapsed()),
    );
}

/// `Σ_t (K_t in direction t, M elsewhere)`, dense.
fn dense_kron_sum(spaces: &[SplineSpace1D; 3]) -> DMatrix<f64> {
    let pencils: Vec<_> = spaces.iter().map(|s| assemble_pencil(s).unwrap()).collect();
    (0..3)
        .map(|t| {
            let f = [0, 1, 2].map(|u| {
                if u == t {
                    pencils[u].0.clone()
                } else {
                    pencils[u].1.clone()
                }
            });
            dense_kron_operator(&TuckerOperator3::kronecker(f)).unwrap()
        })
        .reduce(|a, b| a + b)
        .unwrap()
}

/// Dense matrix of `P` applied to every unit vector.
fn dense_precond(p: &dyn Preconditioner) -> DMatrix<f64> {
    let n = p.dims();
    let total: usize = n.iter().product();
    let mut out = DMatrix::zeros(total, total);
    for c in 0..total {
        let idx = [c % n[0], (c / n[0]) % n[1], c / (n[0] * n[1])];
        let e: Vec<Vec<f64>> = (0..3)
            .map(|t| (0..n[t]).map(|r| f64::from(u8::from(r == idx[t]))).collect())
            .collect();
        let x = TuckerTensor3::rank_one(1.0, [&e[0], &e[1], &e[2]]);
        out.set_column(c, &dense_tensor(&p.apply(&x).unwrap()));
    }
    out
}

#[test]
fn c04_spectral_sandwich() {
    let t0 = Instant::now();
    let (lo_b, hi_b) = SANDWICH_RANGE;
    let mut ok = true;
    let mut parts = Vec::new();
    // Diagonal ratios on n = (6,6,6) for degrees 2 and 3.
    for (p, n_el) in [(2, 6), (3, 5)] {
        let sp = poisson_spaces(p, n_el).unwrap();
        assert_eq!(sp[0].dim(), 6);
        let pre = LowRankFd::from_spaces(&sp, [1.0; 3], 0.1).unwrap();
        let d = sandwich_diagonal(&pre);
        let (lo, hi) = d
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        ok &= lo >= lo_b && hi <= hi_b;
        parts.push(format!("p={p}: [{lo:.4}, {hi:.4}]"));
    }
    // Same spectrum from the dense preconditioned operator where the
    // eigenvectors are exact.
    let sp = poisson_spaces(2, 6).unwrap();
    let pre = LowRankFd::from_spaces(&sp, [1.0; 3], 0.1).unwrap();
    let l = dense_kron_sum(&sp).cholesky().unwrap().l();
    let s = l.transpose() * dense_precond(&pre) * &l;
    let ev = SymmetricEigen::new((&s + s.transpose()) * 0.5).eigenvalues;
    ok &= ev.min() >= lo_b && ev.max() <= hi_b;
    parts.push(format!("dense P·A: [{:.4}, {:.4}]", ev.min(), ev.max()));
    report(
        4,
        "spectral sandwich",
        ok,
        format!("{}, {:.1?}", parts.join("; "), t0.elapsed()),
    );
}

#[test]
fn c05_preconditioner_robustness() {
    let t0 = Instant::now();
    let mut iters = Vec::new();
    let mut all_converged = true;
    for p in [2, 3, 4] {
        for n_el in [16, 32, 64] {
            let mut opts = PoissonOptions::new(p, n_el);
            opts.tpcg.tol = Tolerance::Relative(1e-6);
            let run = solve_poisson(GeometryPreset::QuarterAnnulus, &opts).unwrap();
            all_converged &= run.report.converged();
            iters.push((p, n_el, run.report.iterations));
        }
    }
    let max = iters.iter().map(|i| i.2).max().unwrap();
    let min = iters.iter().map(|i| i.2).min().unwrap();
    let spread = max as f64 / min.max(1) as f64;
    let ok = all_converged && max <= ANNULUS_MAX_ITERS && spread <= ANNULUS_MAX_SPREAD;
    let table: Vec<String> = iters.iter().map(|(p, n, k)| format!("p{p}/n{n}:{k}")).collect();
    report(
        5,
        "preconditioner robustness",
        ok,
        format!(
            "{} max={max} max/min={spread:.2}, {:.1?}",
            table.join(" "),
            t0.elapsed()
        ),
    );
}

#[test]
fn c06_convergence_orders() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [2, 3] {
        let rows = convergence_study(
            GeometryPreset::QuarterAnnulus,
            p,
            &[3, 4, 5],
            0.1,
            &TpcgConfig::default(),
        )
        .unwrap();
        let n: Vec<usize> = rows.iter().map(|r| r.n_el).collect();
        let l2 = fit_order(&n, &rows.iter().map(|r| r.l2).collect::<Vec<_>>()).unwrap();
        let h1 = fit_order(&n, &rows.iter().map(|r| r.h1).collect::<Vec<_>>()).unwrap();
        let (l2_ok, h1_ok) = (
            (l2 - (p + 1) as f64).abs() <= ORDER_TOL,
            (h1 - p as f64).abs() <= ORDER_TOL,
        );
        ok &= l2_ok && h1_ok;
        let mark = |b: bool| if b { "ok" } else { "out of range" };
        parts.push(format!(
            "p={p}: L² slope {l2:.2} (want {}±{ORDER_TOL}, {}), H¹ slope {h1:.2} (want {p}±{ORDER_TOL}, {})",
            p + 1,
            mark(l2_ok),
            mark(h1_ok)
        ));
    }
    report(
        6,
        "convergence orders",
        ok,
        format!("{}, {:.1?}", parts.join("; "), t0.elapsed()),
    );
}

#[test]
fn c07_assembly_ranks() {
    let t0 = Instant::now();
    let eps = assembly_tolerance(1e-6);
    let rank = |preset: GeometryPreset| {
        let sp = poisson_spaces(3, 16).unwrap();
        let geo = preset.build();
        assemble_system(&sp, geo.as_ref(), &preset_load(preset), eps)
            .unwrap()
            .ranks()
            .0
    };
    let annulus = rank(GeometryPreset::QuarterAnnulus);
    let shell = rank(GeometryPreset::SphericalShell);
    let shell_ok = (0..3).all(|t| shell[t].abs_diff(SHELL_RANKS[t]) <= SHELL_RANK_SLACK);
    let ok = annulus == [3, 3, 3] && shell_ok;
    report(
        7,
        "assembly ranks",
        ok,
        format!(
            "annulus {annulus:?} (want [3, 3, 3]), shell {shell:?} (want {SHELL_RANKS:?}±{SHELL_RANK_SLACK}), ε={eps:.0e}, {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn c08_end_to_end_against_dense_solve() {
    let t0 = Instant::now();
    let mut ok = true;
    let mut worst = 0.0f64;
    for preset in GeometryPreset::ALL {
        for n_el in [4, 6] {
            let sp = poisson_spaces(2, n_el).unwrap();
            let geo = preset.build();
            let sys = assemble_system(&sp, geo.as_ref(), &preset_load(preset), 1e-10).unwrap();
            let pre = LowRankFd::from_spaces(&sp, [1.0; 3], 0.1).unwrap();
            let cfg = TpcgConfig {
                tol: Tolerance::Relative(1e-8),
                ..TpcgConfig::default()
            };
            let (x, rep) = tpcg(&sys.operator, &sys.rhs, &pre, &cfg, None).unwrap();
            let a = dense_kron_operator(&sys.operator).unwrap();
            let want = dense_solve(&a, &dense_tensor(&sys.rhs)).unwrap();
            let e = dense_tensor(&x) - want;
            let energy = e.dot(&(&a * &e)).sqrt();
            let lmin = SymmetricEigen::new(a.clone()).eigenvalues.min();
            // ‖e‖_A² = rᵀA⁻¹r ≤ ‖r‖²/λ_min.
            let ratio = energy / (rep.tol_abs / lmin.sqrt());
            worst = worst.max(ratio);
            ok &= rep.converged() && ratio <= ENERGY_SLACK;
        }
    }
    report(
        8,
        "end-to-end vs dense",
        ok,
        format!(
            "4 presets × n∈{{4,6}}³, max ‖e‖_A/(tol/√λ_min) = {worst:.3} (≤{ENERGY_SLACK}), {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn c09_eigen_construction() {
    use std::f64::consts::PI;
    use BoundaryCondition::*;
    let t0 = Instant::now();
    let (mut interp, mut fast) = (0.0f64, 0.0f64);
    for p in [3, 4, 5] {
        for n_el in [8, 16] {
            for bc in [
                [Dirichlet, Dirichlet],
                [Neumann, Dirichlet],
                [Dirichlet, Neumann],
                [Neumann, Neumann],
            ] {
                let space = SplineSpace1D::new(p, n_el, bc).unwrap();
                let e = ApproxEigen1D::from_space(&space).unwrap();
                let (n1, _) = e.split_dims();
                let u = e.to_dense().unwrap();
                let k0 = f64::from(u8::from(bc[0] == Neumann));
                let k1 = f64::from(u8::from(bc[1] == Neumann));
                for j in 0..n1 {
                    let a = j as f64 + 1.0 - 0.5 * (k0 + k1);
                    let c = if a == 0.0 { 1.0 } else { 2f64.sqrt() };
                    for &x in e.interpolation_points() {
                        let vals = space.eval_all(x, 0).unwrap();
                        let f: f64 = vals.iter().enumerate().map(|(r, v)| v * u[(r, j)]).sum();
                        interp = interp.max((f - c * (a * PI * x + k0 * PI / 2.0).sin()).abs());
                    }
                }
                let b = DMatrix::from_fn(e.dim(), 3, |i, j| ((5 * i + 7 * j) as f64 * 0.31).sin());
                for tr in [false, true] {
                    let f = e.clone().with_mode(TransformMode::Fast).apply(&b, tr).unwrap();
                    let d = e.clone().with_mode(TransformMode::Dense).apply(&b, tr).unwrap();
                    fast = fast.max((&f - &d).amax() / d.amax().max(1.0));
                }
            }
        }
    }
    let ok = interp <= EIGEN_INTERP_TOL && fast <= EIGEN_FAST_TOL;
    report(
        9,
        "eigen construction",
        ok,
        format!(
            "interpolation defect {interp:.1e}, fast vs dense {fast:.1e}, {:.1?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn c10_elasticity() {
    let t0 = Instant::now();
    let lame = Lame::PRESET;
    let geo = GeometryPreset::DeformedColumn.build();
    let load = [0.0, 0.0, -1.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for n_el in [8, 16, 32] {
        let sp = column_spaces(3, n_el).unwrap();
        let sys = assemble_elasticity(
            &sp,
            geo.as_ref(),
            load,
            lame,
            &top_displacement(-0.5),
            assembly_tolerance(1e-6),
        )
        .unwrap();
        let pre = block_preconditioner(&sp, lame, 0.1).unwrap();
        let (_, rep) = solve_elasticity(&sys, &pre, &TpcgConfig::default()).unwrap();
        ok &= rep.converged() && rep.iterations <= ELASTICITY_MAX_ITERS;
        parts.push(format!("n_el={n_el}: {} iters", rep.iterations));
    }
    let sp = column_spaces(3, 4).unwrap();
    let sys = assemble_elasticity(&sp, geo.as_ref(), load, lame, &top_displacement(-0.5), 1e-10).unwrap();
    let pre = block_preconditioner(&sp, lame, 0.1).unwrap();
    let cfg = TpcgConfig {
        tol: Tolerance::Relative(1e-10),
        ..TpcgConfig::default()
    };
    let (x, rep) = solve_elasticity(&sys, &pre, &cfg).unwrap();
    let stack = |v: &[TuckerTensor3]| {
        let d: Vec<f64> = v
            .iter()
            .flat_map(|c| dense_tensor(c).iter().copied().collect::<Vec<_>>())
            .collect();
        DVector::from_vec(d)
    };
    let want = dense_solve(&dense_block_operator(&sys.operator).unwrap(), &stack(&sys.rhs)).unwrap();
    let err = (stack(&x) - &want).norm() / want.norm();
    ok &= rep.status == SolveStatus::Converged && err <= ELASTICITY_DENSE_TOL;
    parts.push(format!("tiny dense match {err:.1e}"));
    report(
        10,
        "elasticity",
        ok,
        format!("{}, {:.1?}", parts.join("; "), t0.elapsed()),
    );
}

#[test]
fn c11_memory_compression() {
    let t0 = Instant::now();
    let mut opts = PoissonOptions::new(2, 12);
    opts.tpcg.tol = Tolerance::Relative(1e-6);
    let run = solve_poisson(GeometryPreset::QuarterAnnulus, &opts).unwrap();
    let x = &run.solution;
    let (n, r) = (x.dims(), x.rank().0);
    let stored = (0..3).map(|t| n[t] * r[t]).sum::<usize>() + r.iter().product::<usize>();
    let want = 100.0 * stored as f64 / n.iter().product::<usize>() as f64;
    let single = run.report.memory_compression == want;

    let mut rng = common::rng(1111);
    let parts: Vec<TuckerTensor3> = (0..3)
        .map(|i| common::random_tucker(&mut rng, [9 + i, 7, 5], [2, 3 - i, 1 + i]))
        .collect();
    let stored: usize = parts
        .iter()
        .map(|p| (0..3).map(|t| p.dims()[t] * p.rank().0[t]).sum::<usize>() + p.rank().product())
        .sum();
    let full: usize = parts.iter().map(|p| p.dims().iter().product::<usize>()).sum();
    let want_b = 100.0 * stored as f64 / full as f64;
    let blocks = memory_compression_blocks(&parts) == want_b;
    report(
        11,
        "memory compression",
        single && blocks,
        format!(
            "scalar {} vs {want}, block {} vs {want_b}, {:.1?}",
            run.report.memory_compression,
            memory_compression_blocks(&parts),
            t0.elapsed()
        ),
    );
}
