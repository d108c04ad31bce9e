//! Subcommand implementations.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use tuckeriga::assembly::{assemble_system, assembly_tolerance};
use tuckeriga::elasticity::{assemble_elasticity, block_preconditioner, column_spaces, top_displacement, Lame};
use tuckeriga::precond::{ExactFd, LowRankFd, Preconditioner};
use tuckeriga::problems::preset_load;
use tuckeriga::solver::{tpcg, tpcg_blocks, IterationRecord, SolveReport, SolveStatus, Tolerance, TpcgConfig};
use tuckeriga::study::{
    convergence_study, fit_order, poisson_spaces, solve_poisson, ConvergenceRow, PoissonOptions, PrecondKind,
};
use tuckeriga::{GeometryPreset, MultilinearRank, TuckerTensor3};

use crate::config::Settings;
use crate::output::{history_table, int, num, Table};
use crate::{Failure, Outcome};

fn outcome(status: SolveStatus) -> Outcome {
    match status {
        SolveStatus::Converged => Outcome::Success,
        SolveStatus::MaxIterations => Outcome::NotConverged,
        SolveStatus::Breakdown => Outcome::Breakdown,
    }
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max_iterations",
        SolveStatus::Breakdown => "breakdown",
    }
}

/// Maps `f` over `items` on up to `threads` scoped threads, keeping order.
fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("no panics while holding the slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

/// Runs `solve`, restarting from the current iterate after a breakdown.
fn with_restarts<X>(
    restarts: usize,
    mut solve: impl FnMut(Option<&X>) -> tuckeriga::Result<(X, SolveReport)>,
) -> Result<(X, Vec<SolveReport>), Failure> {
    let (mut x, first) = solve(None)?;
    let mut reports = vec![first];
    while reports.last().is_some_and(|r| r.status == SolveStatus::Breakdown) && reports.len() <= restarts {
        eprintln!(
            "breakdown after {} iterations; restarting",
            reports.last().map_or(0, |r| r.iterations)
        );
        let (nx, rep) = solve(Some(&x))?;
        x = nx;
        reports.push(rep);
    }
    Ok((x, reports))
}

/// History of all attempts with continuous iteration numbers. The initial
/// record of a restart repeats the state it starts from and is dropped.
fn joined_history(reports: &[SolveReport]) -> Vec<(usize, &IterationRecord)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (k, r) in reports.iter().enumerate() {
        for rec in r.history.iter().filter(|h| k == 0 || h.iter > 0) {
            out.push((offset + rec.iter, rec));
        }
        offset += r.iterations;
    }
    out
}

fn summary(label: &str, reports: &[SolveReport], max_rank: &str, extra: &str) {
    let last = reports.last().expect("at least one attempt");
    let iterations: usize = reports.iter().map(|r| r.iterations).sum();
    let time: f64 = reports.iter().map(|r| r.wall_time.as_secs_f64()).sum();
    eprintln!(
        "{label}: status={} iterations={iterations} restarts={} max_rank={max_rank} memory_compression={:.4}% residual={:e} tol={:e} exact_residual={:e}{extra} time={time:.3}s",
        status_name(last.status),
        reports.len() - 1,
        last.memory_compression,
        last.final_residual(),
        last.tol_abs,
        last.exact_residual,
    );
}

pub fn solve(s: &Settings) -> Result<Outcome, Failure> {
    let spaces = poisson_spaces(s.p, s.n_el)?;
    let geo = s.geometry.build();
    let sys = assemble_system(
        &spaces,
        geo.as_ref(),
        &preset_load(s.geometry),
        assembly_tolerance(s.tol),
    )?;
    let (pre, extra): (Box<dyn Preconditioner>, String) = if s.exact_precond {
        (
            Box::new(ExactFd::from_spaces(&spaces, [1.0; 3])?),
            " precond=exact".into(),
        )
    } else {
        let p = LowRankFd::from_spaces(&spaces, [1.0; 3], s.eps_prec)?;
        let d = p.diagnostics();
        let extra = format!(
            " precond_rank={} interval={:e} expsum_error={:e}",
            d.rank, d.interval, d.expsum_error
        );
        (Box::new(p), extra)
    };
    let (x, reports) = with_restarts(s.restarts, |x0| {
        tpcg(&sys.operator, &sys.rhs, pre.as_ref(), &s.tpcg, x0)
    })?;
    history_table(&joined_history(&reports), 1).write(s.csv.as_deref())?;
    let ranks = x.rank().0;
    let label = format!(
        "solve {} p={} n_el={} operator_rank={:?}",
        s.geometry,
        s.p,
        s.n_el,
        sys.ranks().0
    );
    summary(&label, &reports, &format!("{ranks:?}"), &extra);
    Ok(outcome(reports.last().expect("one attempt").status))
}

fn convergence_table(rows: &[ConvergenceRow]) -> Table {
    let mut t = Table::new([
        "level",
        "n_el",
        "p",
        "tol_rel",
        "iterations",
        "status",
        "l2",
        "h1",
        "order_l2",
        "order_h1",
        "max_rank",
        "memory_compression",
    ]);
    for (i, r) in rows.iter().enumerate() {
        let rate = |e: fn(&ConvergenceRow) -> f64| {
            if i == 0 {
                String::new()
            } else {
                let prev = &rows[i - 1];
                num((e(prev) / e(r)).log2() / f64::from(r.level - prev.level))
            }
        };
        t.push(vec![
            r.level.to_string(),
            int(r.n_el),
            int(r.p),
            num(r.tol_rel),
            int(r.iterations),
            status_name(r.status).into(),
            num(r.l2),
            num(r.h1),
            rate(|c| c.l2),
            rate(|c| c.h1),
            int(r.max_rank),
            num(r.memory_compression),
        ]);
    }
    t
}

/// Least-squares orders, or `None` for a single level.
fn fitted(rows: &[ConvergenceRow]) -> Result<Option<(f64, f64)>, Failure> {
    if rows.len() < 2 {
        return Ok(None);
    }
    let n: Vec<usize> = rows.iter().map(|r| r.n_el).collect();
    let l2 = fit_order(&n, &rows.iter().map(|r| r.l2).collect::<Vec<_>>())?;
    let h1 = fit_order(&n, &rows.iter().map(|r| r.h1).collect::<Vec<_>>())?;
    Ok(Some((l2, h1)))
}

fn rows_outcome(rows: &[ConvergenceRow]) -> Outcome {
    rows.iter()
        .map(|r| outcome(r.status))
        .fold(Outcome::Success, Outcome::join)
}

pub fn convergence(s: &Settings, levels: &[u32]) -> Result<Outcome, Failure> {
    let rows = convergence_study(s.geometry, s.p, levels, s.eps_prec, &s.tpcg)?;
    convergence_table(&rows).write(s.csv.as_deref())?;
    match fitted(&rows)? {
        Some((l2, h1)) => eprintln!(
            "convergence {} p={}: fitted orders L2={l2:.3} H1={h1:.3}",
            s.geometry, s.p
        ),
        None => eprintln!("convergence {} p={}: single level, no fitted order", s.geometry, s.p),
    }
    Ok(rows_outcome(&rows))
}

struct SweepRow {
    n_el: usize,
    p: usize,
    interval: f64,
    rank: usize,
    expsum_error: f64,
    iterations: usize,
    status: SolveStatus,
}

fn sweep(
    geometry: GeometryPreset,
    tpcg: &TpcgConfig,
    eps_prec: f64,
    cells: &[(usize, usize)],
    threads: usize,
) -> Result<Vec<SweepRow>, Failure> {
    par_map(cells, threads, |&(p, n_el)| {
        let opts = PoissonOptions {
            precond: PrecondKind::LowRank(eps_prec),
            tpcg: *tpcg,
            ..PoissonOptions::new(p, n_el)
        };
        let run = solve_poisson(geometry, &opts)?;
        let d = run.precond.expect("low-rank preconditioner reports diagnostics");
        Ok(SweepRow {
            n_el,
            p,
            interval: d.interval,
            rank: d.rank,
            expsum_error: d.expsum_error,
            iterations: run.report.iterations,
            status: run.report.status,
        })
    })
    .into_iter()
    .map(|r: tuckeriga::Result<SweepRow>| r.map_err(Failure::from))
    .collect()
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(["n_el", "p", "m_p", "r_p", "expsum_error", "iterations", "status"]);
    for r in rows {
        t.push(vec![
            int(r.n_el),
            int(r.p),
            num(r.interval),
            int(r.rank),
            num(r.expsum_error),
            int(r.iterations),
            status_name(r.status).into(),
        ]);
    }
    t
}

pub fn precond_study(s: &Settings, degrees: &[usize], n_els: &[usize]) -> Result<Outcome, Failure> {
    let cells: Vec<(usize, usize)> = degrees
        .iter()
        .flat_map(|&p| n_els.iter().map(move |&n| (p, n)))
        .collect();
    let rows = sweep(s.geometry, &s.tpcg, s.eps_prec, &cells, s.threads)?;
    sweep_table(&rows).write(s.csv.as_deref())?;
    eprintln!("precond-study {}: {} cells", s.geometry, rows.len());
    Ok(rows
        .iter()
        .map(|r| outcome(r.status))
        .fold(Outcome::Success, Outcome::join))
}

fn max_component_ranks(x: &[TuckerTensor3]) -> Vec<MultilinearRank> {
    x.iter().map(|c| c.rank()).collect()
}

pub fn elasticity(s: &Settings, lame: Lame, load: [f64; 3], top: f64) -> Result<Outcome, Failure> {
    let (x, reports, _) = run_elasticity(
        &ElasticityCase {
            geometry: s.geometry,
            p: s.p,
            n_el: s.n_el,
            lame,
            load,
            top,
        },
        s.eps_prec,
        &s.tpcg,
        s.restarts,
    )?;
    history_table(&joined_history(&reports), 3).write(s.csv.as_deref())?;
    let ranks: Vec<String> = max_component_ranks(&x).iter().map(|r| format!("{:?}", r.0)).collect();
    let label = format!(
        "elasticity {} p={} n_el={} λ={} μ={}",
        s.geometry, s.p, s.n_el, lame.lambda, lame.mu
    );
    summary(&label, &reports, &ranks.join("/"), "");
    Ok(outcome(reports.last().expect("one attempt").status))
}

#[allow(clippy::too_many_arguments)]
/// Block solution, solver attempts and off-diagonal block ranks.
type ElasticityRun = (Vec<TuckerTensor3>, Vec<SolveReport>, [[MultilinearRank; 3]; 3]);

/// One elasticity problem.
struct ElasticityCase {
    geometry: GeometryPreset,
    p: usize,
    n_el: usize,
    lame: Lame,
    load: [f64; 3],
    top: f64,
}

fn run_elasticity(
    case: &ElasticityCase,
    eps_prec: f64,
    cfg: &TpcgConfig,
    restarts: usize,
) -> Result<ElasticityRun, Failure> {
    let ElasticityCase {
        geometry,
        p,
        n_el,
        lame,
        load,
        top,
    } = *case;
    let spaces = column_spaces(p, n_el)?;
    let geo = geometry.build();
    let tol = match cfg.tol {
        Tolerance::Relative(t) => t,
        Tolerance::Absolute(_) => 1e-6,
    };
    let sys = assemble_elasticity(
        &spaces,
        geo.as_ref(),
        load,
        lame,
        &top_displacement(top),
        assembly_tolerance(tol),
    )?;
    let pre = block_preconditioner(&spaces, lame, eps_prec)?;
    let (x, reports) = with_restarts(restarts, |x0: Option<&Vec<TuckerTensor3>>| {
        tpcg_blocks(&sys.operator, &sys.rhs, &pre, cfg, x0.map(Vec::as_slice))
    })?;
    Ok((x, reports, sys.block_ranks))
}

fn emit(title: &str, slug: &str, table: &Table, out_dir: Option<&Path>) -> Result<(), Failure> {
    println!("# scaled-down: {title}");
    table.write(None)?;
    println!();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
        table.write(Some(&dir.join(format!("scaled_down_{slug}.csv"))))?;
    }
    Ok(())
}

/// Every study at desk scale, printed as labelled tables.
pub fn paper_tables(out_dir: Option<&Path>, threads: usize) -> Result<Outcome, Failure> {
    let t0 = Instant::now();
    let mut result = Outcome::Success;
    let base = TpcgConfig {
        tol: Tolerance::Relative(1e-6),
        ..TpcgConfig::default()
    };
    println!("# Desk-scale runs: meshes are far coarser than production studies; compare trends, not values.");
    println!();

    let cells: Vec<(usize, usize)> = [2, 3, 4].iter().flat_map(|&p| [16, 32, 64].map(|n| (p, n))).collect();
    let rows = sweep(GeometryPreset::QuarterAnnulus, &base, 0.1, &cells, threads)?;
    result = rows.iter().map(|r| outcome(r.status)).fold(result, Outcome::join);
    emit(
        "preconditioner interval M_P, rank R_P, exp-sum error and TPCG iterations, quarter annulus, tol 1e-6, eps_prec 0.1",
        "preconditioner",
        &sweep_table(&rows),
        out_dir,
    )?;

    let studies = par_map(&[2usize, 3], threads, |&p| {
        convergence_study(GeometryPreset::QuarterAnnulus, p, &[3, 4, 5], 0.1, &base)
    });
    let mut conv = Table::new(Vec::<String>::new());
    let mut fits = Table::new(["p", "fitted_order_l2", "fitted_order_h1"]);
    for (p, rows) in [2usize, 3].into_iter().zip(studies) {
        let rows = rows?;
        result = result.join(rows_outcome(&rows));
        let t = convergence_table(&rows);
        conv.header = t.header;
        conv.rows.extend(t.rows);
        if let Some((l2, h1)) = fitted(&rows)? {
            fits.push(vec![int(p), num(l2), num(h1)]);
        }
    }
    emit(
        "L2 and H1 errors, manufactured solution on the quarter annulus, levels 3-5",
        "convergence",
        &conv,
        out_dir,
    )?;
    emit(
        "least-squares convergence orders over levels 3-5",
        "orders",
        &fits,
        out_dir,
    )?;

    let shell = par_map(&[8usize, 16, 32], threads, |&n_el| {
        let opts = PoissonOptions {
            tpcg: base,
            ..PoissonOptions::new(3, n_el)
        };
        solve_poisson(GeometryPreset::SphericalShell, &opts)
    });
    let mut t = Table::new([
        "n_el",
        "p",
        "r1",
        "r2",
        "r3",
        "iterations",
        "status",
        "max_solution_rank",
        "memory_compression",
    ]);
    for (n_el, run) in [8usize, 16, 32].into_iter().zip(shell) {
        let run = run?;
        result = result.join(outcome(run.report.status));
        let r = run.system.ranks().0;
        t.push(vec![
            int(n_el),
            "3".into(),
            int(r[0]),
            int(r[1]),
            int(r[2]),
            int(run.report.iterations),
            status_name(run.report.status).into(),
            int(run.solution.rank().max()),
            num(run.report.memory_compression),
        ]);
    }
    emit(
        "operator ranks and TPCG iterations, spherical shell, p=3, tol 1e-6",
        "shell",
        &t,
        out_dir,
    )?;

    let column = par_map(&[8usize, 16, 32], threads, |&n_el| {
        let case = ElasticityCase {
            geometry: GeometryPreset::DeformedColumn,
            p: 3,
            n_el,
            lame: Lame::PRESET,
            load: [0.0, 0.0, -1.0],
            top: -0.5,
        };
        run_elasticity(&case, 0.1, &base, 0)
    });
    let mut t = Table::new([
        "n_el",
        "p",
        "iterations",
        "status",
        "max_rank_c1",
        "max_rank_c2",
        "max_rank_c3",
        "memory_compression",
    ]);
    for (n_el, run) in [8usize, 16, 32].into_iter().zip(column) {
        let (x, reports, _) = run?;
        let rep = reports.last().expect("one attempt");
        result = result.join(outcome(rep.status));
        let mut row = vec![
            int(n_el),
            "3".into(),
            int(rep.iterations),
            status_name(rep.status).into(),
        ];
        row.extend(x.iter().map(|c| int(c.rank().max())));
        row.push(num(rep.memory_compression));
        t.push(row);
    }
    emit(
        "block TPCG iterations, deformed column elasticity, p=3, tol 1e-6",
        "elasticity",
        &t,
        out_dir,
    )?;
    eprintln!("scaled-down tables: done in {:.1}s", t0.elapsed().as_secs_f64());
    Ok(result)
}
