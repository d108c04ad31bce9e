//! Run configuration: a TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tuckeriga::elasticity::Lame;
use tuckeriga::{GeometryPreset, Tolerance, TpcgConfig};

use crate::Failure;

/// Raw file contents. Every key is optional; defaults are filled in by
/// [`Settings::resolve`].
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub geometry: Option<String>,
    pub p: Option<usize>,
    pub level: Option<u32>,
    pub n_el: Option<usize>,
    pub tol: Option<f64>,
    pub eps_prec: Option<f64>,
    pub exact_precond: Option<bool>,
    pub restarts: Option<usize>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub truncation: TruncationSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub elasticity: ElasticitySection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub eps0: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub eps_min: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    pub levels: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub degrees: Option<Vec<usize>>,
    pub n_el: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticitySection {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub load: Option<[f64; 3]>,
    pub top_displacement: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct Settings {
    pub geometry: GeometryPreset,
    pub p: usize,
    pub n_el: usize,
    pub tol: f64,
    pub eps_prec: f64,
    pub exact_precond: bool,
    pub restarts: usize,
    pub threads: usize,
    pub tpcg: TpcgConfig,
    pub csv: Option<PathBuf>,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Config(msg()))
    }
}

impl Settings {
    pub fn resolve(f: &FileConfig) -> Result<Self, Failure> {
        let geometry: GeometryPreset = f
            .geometry
            .as_deref()
            .unwrap_or("quarter_annulus")
            .parse()
            .map_err(|e: tuckeriga::Error| Failure::Config(e.to_string()))?;
        let p = f.p.unwrap_or(3);
        let n_el = match (f.n_el, f.level) {
            (Some(n), _) => n,
            (None, Some(l)) => {
                check(l < 16, || format!("level {l} is too large"))?;
                1usize << l
            }
            (None, None) => 16,
        };
        let tol = f.tol.unwrap_or(1e-6);
        let eps_prec = f.eps_prec.unwrap_or(0.1);
        check((1..=10).contains(&p), || format!("degree p={p} must lie in 1..=10"))?;
        check(n_el >= 1, || "n_el must be positive".into())?;
        check(tol > 0.0 && tol < 1.0, || format!("tol={tol} must lie in (0, 1)"))?;
        check(eps_prec > 0.0 && eps_prec <= 1.0, || {
            format!("eps_prec={eps_prec} must lie in (0, 1]")
        })?;

        let d = TpcgConfig::default();
        let t = &f.truncation;
        let tpcg = TpcgConfig {
            tol: Tolerance::Relative(tol),
            beta: t.beta.unwrap_or(d.beta),
            eps0: t.eps0.unwrap_or(d.eps0),
            alpha: t.alpha.unwrap_or(d.alpha),
            eps_min: t.eps_min.or(d.eps_min),
            delta: t.delta.unwrap_or(d.delta),
            max_iterations: t.max_iterations.unwrap_or(d.max_iterations),
        };
        check(tpcg.eps0 > 0.0 && tpcg.eps0 < 1.0, || {
            "truncation.eps0 must lie in (0, 1)".into()
        })?;
        check(tpcg.beta > 0.0 && tpcg.beta < 1.0, || {
            "truncation.beta must lie in (0, 1)".into()
        })?;
        check(tpcg.alpha > 0.0 && tpcg.alpha < 1.0, || {
            "truncation.alpha must lie in (0, 1)".into()
        })?;
        check(tpcg.delta > 0.0, || "truncation.delta must be positive".into())?;
        check(tpcg.eps_min.is_none_or(|e| e > 0.0), || {
            "truncation.eps_min must be positive".into()
        })?;
        let threads = f.threads.unwrap_or(1);
        check(threads >= 1, || "threads must be at least 1".into())?;
        Ok(Self {
            geometry,
            p,
            n_el,
            tol,
            eps_prec,
            exact_precond: f.exact_precond.unwrap_or(false),
            restarts: f.restarts.unwrap_or(0),
            threads,
            tpcg,
            csv: f.output.csv.clone(),
        })
    }
}

/// Convergence levels, at least one.
pub fn levels(f: &FileConfig) -> Result<Vec<u32>, Failure> {
    let levels = f.convergence.levels.clone().unwrap_or_else(|| vec![2, 3, 4]);
    check(!levels.is_empty(), || "convergence.levels is empty".into())?;
    check(levels.windows(2).all(|w| w[0] < w[1]), || {
        "convergence.levels must increase".into()
    })?;
    check(levels.iter().all(|&l| l < 16), || "convergence level too large".into())?;
    Ok(levels)
}

/// `(degrees, n_el)` of a preconditioner sweep.
pub fn sweep(f: &FileConfig, s: &Settings) -> Result<(Vec<usize>, Vec<usize>), Failure> {
    let degrees = f.sweep.degrees.clone().unwrap_or_else(|| vec![s.p]);
    let n_el = f.sweep.n_el.clone().unwrap_or_else(|| vec![s.n_el]);
    check(!degrees.is_empty() && !n_el.is_empty(), || {
        "sweep lists must not be empty".into()
    })?;
    Ok((degrees, n_el))
}

/// Elasticity parameters. The Lamé constants have no default.
pub fn elasticity(f: &FileConfig) -> Result<(Lame, [f64; 3], f64), Failure> {
    let e = &f.elasticity;
    let (Some(lambda), Some(mu)) = (e.lambda, e.mu) else {
        return Err(Failure::Config(
            "elasticity needs both Lamé parameters (elasticity.lambda, elasticity.mu)".into(),
        ));
    };
    check(lambda >= 0.0 && mu > 0.0, || {
        format!("Lamé parameters need λ >= 0 and μ > 0 (got {lambda}, {mu})")
    })?;
    Ok((
        Lame { lambda, mu },
        e.load.unwrap_or([0.0, 0.0, -1.0]),
        e.top_displacement.unwrap_or(-0.5),
    ))
}
