//! `tuckeriga`: runs low-rank isogeometric solves and studies from a TOML
//! configuration, writing CSV reports.
//!
//! Exit codes: 0 success, 1 non-convergence, 2 configuration error,
//! 3 numerical breakdown.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Settings};

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<tuckeriga::Error> for Failure {
    fn from(e: tuckeriga::Error) -> Self {
        use tuckeriga::Error::*;
        match e {
            DimensionMismatch { .. }
            | InvalidInput(_)
            | MemoryGuard { .. }
            | OutOfDomain(_)
            | Geometry(_)
            | Parse(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

/// How a completed run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
    Breakdown,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 1,
            Outcome::Breakdown => 3,
        }
    }

    /// The worse of two outcomes.
    pub fn join(self, other: Outcome) -> Outcome {
        if self.code() >= other.code() {
            self
        } else {
            other
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tuckeriga", version, about = "Low-rank Tucker-format isogeometric solvers")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Run every study at desk scale and print the tables.
    #[arg(long)]
    paper_tables: bool,

    /// Also write each table as a CSV file into this directory.
    #[arg(long, requires = "paper_tables")]
    out_dir: Option<PathBuf>,

    /// Worker threads for independent sweep cells.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble and solve one Poisson problem.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Manufactured-solution study over mesh levels.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated levels, `n_el = 2^level`.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
    },
    /// Preconditioner rank and iteration sweep over degrees and meshes.
    PrecondStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        n_els: Option<Vec<usize>>,
    },
    /// Compressible linear elasticity with block TPCG.
    Elasticity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Body force, three comma-separated components.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        load: Option<Vec<f64>>,
        #[arg(long, allow_negative_numbers = true)]
        top_displacement: Option<f64>,
    },
}

/// Options shared by every subcommand; flags override the config file.
#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    geometry: Option<String>,
    /// Spline degree.
    #[arg(short, long)]
    p: Option<usize>,
    /// Mesh level, `n_el = 2^level`.
    #[arg(long)]
    level: Option<u32>,
    /// Elements per direction; takes precedence over the level.
    #[arg(long)]
    n_el: Option<usize>,
    /// Relative solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Relative accuracy of the exponential sum.
    #[arg(long)]
    eps_prec: Option<f64>,
    /// Initial dynamic truncation tolerance.
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Restarts from the current iterate after a breakdown.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Use the exact fast-diagonalization preconditioner.
    #[arg(long)]
    exact_precond: bool,
    /// CSV output path; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Common {
    fn file_config(&self) -> Result<FileConfig, Failure> {
        let mut f = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        if self.geometry.is_some() {
            f.geometry.clone_from(&self.geometry);
        }
        if let Some(l) = self.level {
            f.level = Some(l);
            f.n_el = None;
        }
        let set = |dst: &mut Option<usize>, src: Option<usize>| {
            if src.is_some() {
                *dst = src;
            }
        };
        set(&mut f.p, self.p);
        set(&mut f.n_el, self.n_el);
        set(&mut f.restarts, self.restarts);
        set(&mut f.threads, self.threads);
        set(&mut f.truncation.max_iterations, self.max_iterations);
        let setf = |dst: &mut Option<f64>, src: Option<f64>| {
            if src.is_some() {
                *dst = src;
            }
        };
        setf(&mut f.tol, self.tol);
        setf(&mut f.eps_prec, self.eps_prec);
        setf(&mut f.truncation.eps0, self.eps0);
        setf(&mut f.truncation.eps_min, self.eps_min);
        if self.exact_precond {
            f.exact_precond = Some(true);
        }
        if self.output.is_some() {
            f.output.csv.clone_from(&self.output);
        }
        Ok(f)
    }
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    if cli.paper_tables {
        if cli.command.is_some() {
            return Err(Failure::Config(
                "--paper-tables runs on its own, without a subcommand".into(),
            ));
        }
        if cli.threads == 0 {
            return Err(Failure::Config("threads must be at least 1".into()));
        }
        return commands::paper_tables(cli.out_dir.as_deref(), cli.threads);
    }
    let Some(command) = cli.command else {
        return Err(Failure::Config("no subcommand given (try --help)".into()));
    };
    match command {
        Command::Solve { common } => {
            let s = Settings::resolve(&common.file_config()?)?;
            commands::solve(&s)
        }
        Command::Convergence { common, levels } => {
            let mut f = common.file_config()?;
            if levels.is_some() {
                f.convergence.levels = levels;
            }
            let s = Settings::resolve(&f)?;
            commands::convergence(&s, &config::levels(&f)?)
        }
        Command::PrecondStudy { common, degrees, n_els } => {
            let mut f = common.file_config()?;
            if degrees.is_some() {
                f.sweep.degrees = degrees;
            }
            if n_els.is_some() {
                f.sweep.n_el = n_els;
            }
            let s = Settings::resolve(&f)?;
            let (degrees, n_els) = config::sweep(&f, &s)?;
            commands::precond_study(&s, &degrees, &n_els)
        }
        Command::Elasticity {
            common,
            lambda,
            mu,
            load,
            top_displacement,
        } => {
            let mut f = common.file_config()?;
            if f.geometry.is_none() {
                f.geometry = Some("deformed_column".into());
            }
            let e = &mut f.elasticity;
            e.lambda = lambda.or(e.lambda);
            e.mu = mu.or(e.mu);
            if let Some(l) = load {
                let l: [f64; 3] = l
                    .try_into()
                    .map_err(|_| Failure::Config("--load takes three comma-separated components".into()))?;
                e.load = Some(l);
            }
            e.top_displacement = top_displacement.or(e.top_displacement);
            let s = Settings::resolve(&f)?;
            let (lame, load, top) = config::elasticity(&f)?;
            commands::elasticity(&s, lame, load, top)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
