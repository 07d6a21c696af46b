use std::fs;
use std::io::Write;
use std::path::Path;

use kropina_core::analysis::{
    constant_curvature_residuals, cubic_exceptional_check, cubic_system_alpha_residuals, kill_d_residuals,
    minkowski_residuals, parabolic_residuals, projectivity_residuals, skewness_residuals, system_beta_residuals_of,
    system_i_residuals, system_iiprime_residuals, AnalysisError, Grid, ResidualReport,
};
use kropina_core::expr::{ConstEnv, Expr};
use kropina_core::geodesics::{integrate_geodesic, GeodesicError, GeodesicSummary, TraceSample};
use kropina_core::metrics::{make_metric, Metric, MetricKind, MetricSpec};
use serde::Serialize;

use crate::classify::{classify, Classification, Thresholds};
use crate::config::{Format, GeodesicOptions, ResidualsOptions, RunConfig};
use crate::CliError;

/// Names accepted by `residuals --system`, with aliases.
pub const SYSTEMS: [(&str, &[&str]); 11] = [
    ("projectivity", &[]),
    ("I", &["system-i"]),
    ("beta", &[]),
    ("II-prime", &["iiprime"]),
    ("constant-curvature", &["cc"]),
    ("alpha", &["cubic-alpha"]),
    ("III", &["minkowski"]),
    ("skewness", &[]),
    ("parabolic", &[]),
    ("kill-D", &["kill-d"]),
    ("cubic-exceptional", &[]),
];

fn canonical_system(name: &str) -> Option<&'static str> {
    SYSTEMS
        .iter()
        .find(|(n, aliases)| n.eq_ignore_ascii_case(name) || aliases.iter().any(|a| a.eq_ignore_ascii_case(name)))
        .map(|(n, _)| *n)
}

/// Every report carries the settings that produced it.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: Option<u64>,
    pub order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<&'a MetricSpec>,
    pub result: T,
}

pub fn metric_of(run: &RunConfig) -> Result<Metric, CliError> {
    let spec = run.metric.as_ref().ok_or_else(|| CliError::Usage("this command needs --metric".into()))?;
    make_metric(spec).map_err(|e| CliError::Usage(format!("metric: {e}")))
}

/// Writes to `--out`, or stdout when absent.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// The potential the φ-systems are written for: the canonical metric is
/// built from `φ(x², x¹)` of these equations.
fn potential(metric: &Metric) -> Result<(Expr, &ConstEnv), CliError> {
    let phi = metric.phi().ok_or_else(|| {
        CliError::Usage(format!("system needs a metric in canonical form, got {}", metric.kind()))
    })?;
    let k = metric.spec().and_then(|s| s.constants.get("k")).copied().unwrap_or(1.0);
    if metric.kind() == MetricKind::KropinaCanonical && k != 1.0 {
        return Err(CliError::Usage(format!(
            "potential systems assume k = 1; rescale the metric first (k = {k})"
        )));
    }
    Ok((phi.swap_coords(), metric.env()))
}

fn exceptional_constants(metric: &Metric) -> Result<[f64; 4], CliError> {
    let spec = metric.spec().filter(|_| metric.kind() == MetricKind::CubicExceptional).ok_or_else(|| {
        CliError::Usage(format!("cubic-exceptional needs a CubicExceptional metric, got {}", metric.kind()))
    })?;
    let get = |i: usize| spec.constants.get(&format!("k{i}")).copied().unwrap_or(0.0);
    Ok([get(1), get(2), get(3), get(4)])
}

fn wrong_family(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::WrongFamily { .. } => CliError::Usage(e.to_string()),
        other => CliError::Analysis(other),
    }
}

/// Evaluates the named system.
pub fn run_system(metric: &Metric, grid: &Grid, opts: &ResidualsOptions) -> Result<ResidualReport, CliError> {
    let name = canonical_system(&opts.system).ok_or_else(|| {
        let known: Vec<&str> = SYSTEMS.iter().map(|(n, _)| *n).collect();
        CliError::Usage(format!("unknown system `{}` (known: {})", opts.system, known.join(", ")))
    })?;
    let r = match name {
        "projectivity" => projectivity_residuals(metric, grid),
        "I" => system_i_residuals(metric, grid, opts.equations),
        "beta" => system_beta_residuals_of(metric, grid),
        "II-prime" => {
            let (phi, env) = potential(metric)?;
            system_iiprime_residuals(&phi, env, grid)
        }
        "constant-curvature" => {
            let (phi, env) = potential(metric)?;
            constant_curvature_residuals(&phi, env, grid, opts.equations)
        }
        "alpha" => cubic_system_alpha_residuals(metric, grid),
        "III" => minkowski_residuals(metric, grid),
        "skewness" => skewness_residuals(metric, grid),
        "parabolic" => parabolic_residuals(metric, grid),
        "kill-D" => {
            let case = opts
                .d_case
                .ok_or_else(|| CliError::Usage("kill-D needs --d-case rational:k1,k2 or constant:k1".into()))?;
            kill_d_residuals(metric, case, grid)
        }
        "cubic-exceptional" => cubic_exceptional_check(exceptional_constants(metric)?, grid),
        _ => unreachable!("listed in SYSTEMS"),
    };
    r.map_err(wrong_family)
}

#[derive(Debug, Serialize)]
pub struct ResidualsOutcome {
    pub report: ResidualReport,
    pub threshold_pass: f64,
    pub pass: bool,
}

/// Exit status 0 iff the largest residual is below the pass threshold.
pub fn cmd_residuals(run: &RunConfig, opts: &ResidualsOptions) -> Result<bool, CliError> {
    let metric = metric_of(run)?;
    let report = run_system(&metric, &run.grid, opts)?;
    let pass = report.max_residual() < run.threshold_pass;
    let bytes = match run.format.unwrap_or_default() {
        Format::Json => to_json(&Envelope {
            command: "residuals",
            seed: run.seed,
            order: run.order,
            metric: run.metric.as_ref(),
            result: ResidualsOutcome {
                report,
                threshold_pass: run.threshold_pass,
                pass,
            },
        }),
        Format::Csv => {
            let rows = report
                .equations
                .iter()
                .map(|e| {
                    vec![
                        report.system.clone(),
                        e.label.clone(),
                        e.max_residual.to_string(),
                        join(&e.at_point),
                        (e.max_residual < run.threshold_pass).to_string(),
                    ]
                })
                .collect();
            csv_bytes(&["system", "equation", "max_residual", "at_point", "pass"], rows)?
        }
    };
    emit(run.out.as_deref(), &bytes)?;
    Ok(pass)
}

pub fn cmd_classify(run: &RunConfig) -> Result<Classification, CliError> {
    let metric = metric_of(run)?;
    let t = Thresholds {
        pass: run.threshold_pass,
        fail: run.threshold_fail,
    };
    let c = classify(&metric, &run.grid, t).map_err(wrong_family)?;
    let bytes = match run.format.unwrap_or_default() {
        Format::Json => to_json(&Envelope {
            command: "classify",
            seed: run.seed,
            order: run.order,
            metric: run.metric.as_ref(),
            result: &c,
        }),
        Format::Csv => {
            let names = ["degenerate", "projective", "minkowski", "parabolic_type", "constant_curvature_necessary"];
            let rows = names
                .iter()
                .map(|n| {
                    let f = c.flag(n).expect("known flag");
                    vec![
                        n.to_string(),
                        serde_json::to_value(f.status).expect("status").as_str().unwrap_or_default().to_string(),
                        f.residual.map(|r| r.to_string()).unwrap_or_default(),
                        f.at.as_deref().map(join).unwrap_or_default(),
                        f.detail.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_bytes(&["flag", "status", "residual", "at_point", "detail"], rows)?
        }
    };
    emit(run.out.as_deref(), &bytes)?;
    Ok(c)
}

#[derive(Debug, Serialize)]
pub struct GeodesicReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<GeodesicSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub completed: bool,
}

fn trace_bytes(samples: &[TraceSample], format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => Ok(to_json(&samples)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for s in samples {
                w.serialize(s).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Writes the trace to `--out` (or stdout) and the summary next to it as
/// `<out>.summary.json` (or to stderr). Returns true iff integration completed.
pub fn cmd_geodesic(run: &RunConfig, opts: &GeodesicOptions) -> Result<bool, CliError> {
    let metric = metric_of(run)?;
    let (report, samples) = match integrate_geodesic(&metric, opts.x0, opts.v0, opts.t_end, opts.steps, opts.bbox) {
        Ok(trace) => {
            let drift = trace.energy_drift(&metric).ok();
            let report = GeodesicReport {
                summary: Some(trace.summary()),
                energy_drift: drift,
                error: None,
                completed: trace.completed(),
            };
            (report, trace.samples)
        }
        Err(GeodesicError::InvalidSetup(msg)) => return Err(CliError::Usage(msg)),
        Err(e) => (
            GeodesicReport {
                summary: None,
                energy_drift: None,
                error: Some(format!("{e:?}")),
                completed: false,
            },
            Vec::new(),
        ),
    };
    let summary = to_json(&Envelope {
        command: "geodesic",
        seed: run.seed,
        order: run.order,
        metric: run.metric.as_ref(),
        result: &report,
    });
    let trace = trace_bytes(&samples, run.format.unwrap_or(Format::Csv))?;
    match &run.out {
        Some(p) => {
            emit(Some(p), &trace)?;
            let mut name = p.as_os_str().to_owned();
            name.push(".summary.json");
            emit(Some(Path::new(&name)), &summary)?;
        }
        None => {
            emit(None, &trace)?;
            std::io::stderr().write_all(&summary).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(report.completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kropina_core::analysis::EquationSet;

    fn opts(system: &str) -> ResidualsOptions {
        ResidualsOptions {
            system: system.into(),
            equations: EquationSet::Corrected,
            d_case: None,
        }
    }

    fn grid() -> Grid {
        Grid::new([0.2, 0.8], [0.2, 0.8]).with_counts(4, 4).with_dirs(8)
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(canonical_system("minkowski"), Some("III"));
        assert_eq!(canonical_system("ii-prime"), Some("II-prime"));
        assert_eq!(canonical_system("nope"), None);
    }

    #[test]
    fn unknown_system_and_family_mismatch_are_usage_errors() {
        let m = make_metric(&MetricSpec::canonical("x1*x2")).unwrap();
        assert!(matches!(run_system(&m, &grid(), &opts("nope")), Err(CliError::Usage(_))));
        assert!(matches!(run_system(&m, &grid(), &opts("alpha")), Err(CliError::Usage(_))));
        assert!(matches!(run_system(&m, &grid(), &opts("kill-D")), Err(CliError::Usage(_))));
    }

    #[test]
    fn potential_systems_use_the_transposed_potential() {
        let m = make_metric(&MetricSpec::minkowski_linear([1.0, 2.0, 3.0])).unwrap();
        let r = run_system(&m, &grid(), &opts("II-prime")).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let m = make_metric(&MetricSpec::minkowski_rational([2.0, 0.5, 0.1, 0.0])).unwrap();
        let r = run_system(&m, &grid(), &opts("constant-curvature")).unwrap();
        assert!(r.max_residual() < 1e-9, "{}", r.max_residual());
    }
}
