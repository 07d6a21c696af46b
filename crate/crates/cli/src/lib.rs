//! Command-line harness around `kropina-core`: classification, residual
//! reports, geodesic traces and the acceptance suite.

pub mod classify;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod suite;

use std::ffi::OsString;

use clap::Parser;
use kropina_core::analysis::{AnalysisError, Grid};
use thiserror::Error;

use crate::classify::Thresholds;
use crate::commands::{cmd_classify, cmd_geodesic, cmd_residuals, emit, to_json};
use crate::config::{load, Cli, Command, Format};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Analysis(_) => EXIT_FAIL,
        }
    }
}

fn status(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Usage(format!("worker pool: {e}"))),
    }
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Classify { common } => {
            let l = load(&common)?;
            with_pool(l.run.workers, || cmd_classify(&l.run))??;
            Ok(EXIT_PASS)
        }
        Command::Residuals {
            system,
            equations,
            d_case,
            common,
        } => {
            let l = load(&common)?;
            let opts = l.residuals(system.as_deref(), equations, d_case.as_deref())?;
            Ok(status(with_pool(l.run.workers, || cmd_residuals(&l.run, &opts))??))
        }
        Command::Geodesic {
            x0,
            v0,
            t_end,
            steps,
            bbox,
            common,
        } => {
            let l = load(&common)?;
            let opts = l.geodesic(x0.as_deref(), v0.as_deref(), t_end, steps, bbox.as_deref())?;
            Ok(status(cmd_geodesic(&l.run, &opts)?))
        }
        Command::Suite { corpus, common } => {
            let l = load(&common)?;
            let entries = match &corpus {
                Some(p) => corpus::load_corpus(p)?,
                None => Vec::new(),
            };
            let seed = l.run.seed.unwrap_or(suite::DEFAULT_SEED);
            let grid = if common.grid.is_some() || common.metric.is_some() {
                l.run.grid.clone()
            } else {
                Grid::new([0.2, 0.8], [0.2, 0.8]).with_counts(6, 6).with_dirs(12).with_seed(Some(seed))
            };
            let t = Thresholds {
                pass: l.run.threshold_pass,
                fail: l.run.threshold_fail,
            };
            let report = with_pool(l.run.workers, || suite::run_suite(seed, &entries, &grid, t))?;
            print!("{}", report.table());
            if let Some(out) = &l.run.out {
                let bytes = match l.run.format.unwrap_or_default() {
                    Format::Json => to_json(&report),
                    Format::Csv => suite_csv(&report)?,
                };
                emit(Some(out), &bytes)?;
            }
            Ok(status(report.all_pass()))
        }
    }
}

fn suite_csv(report: &suite::SuiteReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["seed", "id", "title", "pass", "detail"]).map_err(io)?;
    for r in &report.rows {
        w.write_record([report.seed.to_string(), r.id.clone(), r.title.clone(), r.pass.to_string(), r.detail.clone()])
            .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
