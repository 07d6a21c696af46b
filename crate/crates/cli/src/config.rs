use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kropina_core::analysis::{DCase, EquationSet, Grid};
use kropina_core::geodesics::BoundingBox;
use kropina_core::metrics::MetricSpec;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_THRESHOLD_PASS: f64 = 1e-8;
pub const DEFAULT_THRESHOLD_FAIL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "kropina", version, about = "Verify projective Kropina and cubic Finsler metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the degeneracy, projectivity, Minkowski, parabolic and skewness checks.
    Classify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate one residual system over the grid.
    Residuals {
        /// One of: projectivity, I, beta, II-prime, constant-curvature, alpha,
        /// III, skewness, parabolic, kill-D, cubic-exceptional.
        #[arg(long)]
        system: Option<String>,
        #[arg(long, value_enum)]
        equations: Option<EquationsArg>,
        /// `rational:k1,k2` or `constant:k1`, for the kill-D system.
        #[arg(long)]
        d_case: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Integrate a geodesic and write its trace and summary.
    Geodesic {
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// `x1min,x1max,x2min,x2max`.
        #[arg(long = "box", allow_hyphen_values = true)]
        bbox: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the acceptance matrix and print a pass/fail table.
    Suite {
        /// Extra metrics with expected classifications, one table row each.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Metric spec or config file, as a path or inline JSON.
    #[arg(long)]
    pub metric: Option<String>,
    /// `x1min,x1max,x2min,x2max,n1,n2`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub dirs: Option<usize>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold_pass: Option<f64>,
    #[arg(long)]
    pub threshold_fail: Option<f64>,
    /// Worker threads for grid sweeps; defaults to the machine parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationsArg {
    Corrected,
    AsPrinted,
}

impl From<EquationsArg> for EquationSet {
    fn from(e: EquationsArg) -> Self {
        match e {
            EquationsArg::Corrected => EquationSet::Corrected,
            EquationsArg::AsPrinted => EquationSet::AsPrinted,
        }
    }
}

/// Config file layout. A file holding a bare metric spec is also accepted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    metric: Option<MetricSpec>,
    grid: Option<GridSection>,
    order: Option<usize>,
    format: Option<Format>,
    seed: Option<u64>,
    threshold_pass: Option<f64>,
    threshold_fail: Option<f64>,
    workers: Option<usize>,
    residuals: Option<ResidualsSection>,
    geodesic: Option<GeodesicSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    x1: [f64; 2],
    x2: [f64; 2],
    n1: Option<usize>,
    n2: Option<usize>,
    dirs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidualsSection {
    system: Option<String>,
    equations: Option<EquationsArg>,
    d_case: Option<DCase>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeodesicSection {
    x0: Option<[f64; 2]>,
    v0: Option<[f64; 2]>,
    t_end: Option<f64>,
    steps: Option<usize>,
    #[serde(rename = "box")]
    bbox: Option<BoundingBox>,
}

/// Settings shared by every command after merging file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub metric: Option<MetricSpec>,
    pub grid: Grid,
    pub order: usize,
    pub out: Option<PathBuf>,
    /// `None` selects the command's default: CSV for traces, JSON otherwise.
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threshold_pass: f64,
    pub threshold_fail: f64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ResidualsOptions {
    pub system: String,
    pub equations: EquationSet,
    pub d_case: Option<DCase>,
}

#[derive(Debug, Clone)]
pub struct GeodesicOptions {
    pub x0: [f64; 2],
    pub v0: [f64; 2],
    pub t_end: f64,
    pub steps: usize,
    pub bbox: Option<BoundingBox>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Comma-separated floats, exactly `n` of them.
pub fn parse_floats(text: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| usage(format!("{what}: {e}")))?;
    if values.len() != n {
        return Err(usage(format!("{what}: expected {n} comma-separated numbers, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{what}: values must be finite")));
    }
    Ok(values)
}

fn pair(text: &str, what: &str) -> Result<[f64; 2], CliError> {
    let v = parse_floats(text, 2, what)?;
    Ok([v[0], v[1]])
}

/// `x1min,x1max,x2min,x2max,n1,n2`.
pub fn parse_grid(text: &str) -> Result<Grid, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 6 {
        return Err(usage(format!("--grid: expected x1min,x1max,x2min,x2max,n1,n2, got `{text}`")));
    }
    let r = parse_floats(&parts[..4].join(","), 4, "--grid")?;
    let count = |s: &str| s.trim().parse::<usize>().map_err(|e| usage(format!("--grid count `{s}`: {e}")));
    Ok(Grid::new([r[0], r[1]], [r[2], r[3]]).with_counts(count(parts[4])?, count(parts[5])?))
}

/// `rational:k1,k2` or `constant:k1`.
pub fn parse_d_case(text: &str) -> Result<DCase, CliError> {
    match text.split_once(':') {
        Some(("rational", rest)) => {
            let [k1, k2] = pair(rest, "--d-case")?;
            Ok(DCase::Rational { k1, k2 })
        }
        Some(("constant", rest)) => Ok(DCase::Constant {
            k1: parse_floats(rest, 1, "--d-case")?[0],
        }),
        _ => Err(usage(format!("--d-case: expected rational:k1,k2 or constant:k1, got `{text}`"))),
    }
}

/// Reads `--metric`: an existing path is read as a file, anything else is
/// parsed as inline JSON.
fn load_source(source: &str) -> Result<FileConfig, CliError> {
    let path = Path::new(source);
    let text = if !source.trim_start().starts_with('{') && path.exists() {
        fs::read_to_string(path).map_err(|e| usage(format!("reading {source}: {e}")))?
    } else {
        source.to_string()
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("--metric is neither a file nor valid JSON: {e}")))?;
    if value.get("kind").is_some() {
        let spec: MetricSpec = serde_json::from_value(value).map_err(|e| usage(format!("metric spec: {e}")))?;
        return Ok(FileConfig {
            metric: Some(spec),
            ..FileConfig::default()
        });
    }
    serde_json::from_value(value).map_err(|e| usage(format!("config file: {e}")))
}

/// Merged configuration plus the command-specific sections of the file.
pub struct Loaded {
    pub run: RunConfig,
    residuals: ResidualsSection,
    geodesic: GeodesicSection,
}

pub fn load(common: &CommonArgs) -> Result<Loaded, CliError> {
    let file = match &common.metric {
        Some(src) => load_source(src)?,
        None => FileConfig::default(),
    };
    let mut grid = match file.grid {
        Some(g) => Grid::new(g.x1, g.x2)
            .with_counts(g.n1.unwrap_or(11), g.n2.unwrap_or(11))
            .with_dirs(g.dirs.unwrap_or(16)),
        None => Grid::default(),
    };
    if let Some(text) = &common.grid {
        let dirs = grid.dirs;
        grid = parse_grid(text)?.with_dirs(dirs);
    }
    if let Some(d) = common.dirs {
        grid = grid.with_dirs(d);
    }
    let seed = common.seed.or(file.seed);
    grid = grid.with_seed(seed);
    grid.validate().map_err(|e| usage(e.to_string()))?;

    let order = common.order.or(file.order).unwrap_or(DEFAULT_ORDER);
    if !(2..=6).contains(&order) {
        return Err(usage(format!("--order must be in 2..=6, got {order}")));
    }
    let threshold_pass = common.threshold_pass.or(file.threshold_pass).unwrap_or(DEFAULT_THRESHOLD_PASS);
    let threshold_fail = common.threshold_fail.or(file.threshold_fail).unwrap_or(DEFAULT_THRESHOLD_FAIL);
    if !(threshold_pass > 0.0 && threshold_pass <= threshold_fail && threshold_fail.is_finite()) {
        return Err(usage("thresholds must satisfy 0 < pass <= fail"));
    }
    let workers = common.workers.or(file.workers);
    if workers == Some(0) {
        return Err(usage("--workers must be positive"));
    }
    Ok(Loaded {
        run: RunConfig {
            metric: file.metric,
            grid,
            order,
            out: common.out.clone(),
            format: common.format.or(file.format),
            seed,
            threshold_pass,
            threshold_fail,
            workers,
        },
        residuals: file.residuals.unwrap_or_default(),
        geodesic: file.geodesic.unwrap_or_default(),
    })
}

impl Loaded {
    pub fn residuals(&self, system: Option<&str>, equations: Option<EquationsArg>, d_case: Option<&str>) -> Result<ResidualsOptions, CliError> {
        let system = system
            .map(str::to_string)
            .or_else(|| self.residuals.system.clone())
            .ok_or_else(|| usage("residuals needs --system"))?;
        let d_case = match d_case {
            Some(t) => Some(parse_d_case(t)?),
            None => self.residuals.d_case,
        };
        Ok(ResidualsOptions {
            system,
            equations: equations.or(self.residuals.equations).map_or(EquationSet::Corrected, Into::into),
            d_case,
        })
    }

    pub fn geodesic(
        &self,
        x0: Option<&str>,
        v0: Option<&str>,
        t_end: Option<f64>,
        steps: Option<usize>,
        bbox: Option<&str>,
    ) -> Result<GeodesicOptions, CliError> {
        let g = &self.geodesic;
        let x0 = match x0 {
            Some(t) => pair(t, "--x0")?,
            None => g.x0.ok_or_else(|| usage("geodesic needs --x0"))?,
        };
        let v0 = match v0 {
            Some(t) => pair(t, "--v0")?,
            None => g.v0.ok_or_else(|| usage("geodesic needs --v0"))?,
        };
        let bbox = match bbox {
            Some(t) => {
                let v = parse_floats(t, 4, "--box")?;
                Some([v[0], v[1], v[2], v[3]])
            }
            None => g.bbox,
        };
        Ok(GeodesicOptions {
            x0,
            v0,
            t_end: t_end.or(g.t_end).unwrap_or(1.0),
            steps: steps.or(g.steps).unwrap_or(1000),
            bbox,
        })
    }
}
