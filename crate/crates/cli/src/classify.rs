//! Aggregate classification of a metric from the residual systems.

use kropina_core::analysis::{
    minkowski_residuals, parabolic_residuals, projectivity_residuals, skewness_residuals, AnalysisError, Grid,
    ResidualReport,
};
use kropina_core::metrics::{Metric, MetricError, DEGENERATE_CONIC_TOL, DEGENERATE_CUBIC_TOL};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

/// One classification flag with the residual and sample that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Flag {
    fn na(detail: &str) -> Self {
        Self {
            status: Status::NotApplicable,
            residual: None,
            at: None,
            detail: Some(detail.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub degenerate: Flag,
    pub projective: Flag,
    pub minkowski: Flag,
    pub parabolic_type: Flag,
    pub constant_curvature_necessary: Flag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Classification {
    /// Flag by its serialized name.
    pub fn flag(&self, name: &str) -> Option<&Flag> {
        Some(match name {
            "degenerate" => &self.degenerate,
            "projective" => &self.projective,
            "minkowski" => &self.minkowski,
            "parabolic_type" | "parabolic" => &self.parabolic_type,
            "constant_curvature_necessary" => &self.constant_curvature_necessary,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub pass: f64,
    pub fail: f64,
}

/// Pass below `pass`; fail otherwise, with a note when the residual lands
/// between the two thresholds.
fn verdict(report: &ResidualReport, t: Thresholds, notes: &mut Vec<String>) -> Flag {
    let Some(worst) = report.worst() else {
        return Flag::na("no samples evaluated");
    };
    let r = worst.max_residual;
    let status = if r < t.pass { Status::Pass } else { Status::Fail };
    if r >= t.pass && r <= t.fail {
        notes.push(format!(
            "{}: residual {r:e} lies between the pass and fail thresholds",
            report.system
        ));
    }
    Flag {
        status,
        residual: Some(r),
        at: Some(worst.at_point.clone()),
        detail: Some(worst.label.clone()),
    }
}

/// Smallest `|Δ|` (or `|R|` for cubic metrics) over the base points.
fn degeneracy(metric: &Metric, grid: &Grid) -> Result<Flag, AnalysisError> {
    let cubic = metric.kind().is_cubic();
    let tol = if cubic { DEGENERATE_CUBIC_TOL } else { DEGENERATE_CONIC_TOL };
    let mut best: Option<(f64, [f64; 2])> = None;
    for b in grid.base_points() {
        let v = if cubic {
            metric.cubic_discriminant(b)?
        } else {
            metric.delta_invariant(b)?
        };
        if best.is_none_or(|(m, _)| v.abs() < m) {
            best = Some((v.abs(), b));
        }
    }
    let (m, at) = best.expect("grid has base points");
    Ok(Flag {
        status: if m < tol { Status::Pass } else { Status::Fail },
        residual: Some(m),
        at: Some(at.to_vec()),
        detail: Some(if cubic { "min |R|" } else { "min |Δ|" }.to_string()),
    })
}

/// Runs, in order: degeneracy, projectivity, Minkowski, parabolic and
/// skewness checks.
pub fn classify(metric: &Metric, grid: &Grid, t: Thresholds) -> Result<Classification, AnalysisError> {
    let mut notes = Vec::new();
    let degenerate = match degeneracy(metric, grid) {
        Ok(f) => f,
        Err(AnalysisError::Metric(MetricError::DegenerateCubic { .. })) => Flag {
            status: Status::Pass,
            residual: None,
            at: None,
            detail: Some("cubic discriminant vanishes".into()),
        },
        Err(e) => return Err(e),
    };
    if degenerate.status == Status::Pass {
        let na = || Flag::na("metric is degenerate");
        return Ok(Classification {
            degenerate,
            projective: na(),
            minkowski: na(),
            parabolic_type: na(),
            constant_curvature_necessary: na(),
            notes,
        });
    }

    let projective = verdict(&projectivity_residuals(metric, grid)?, t, &mut notes);
    let is_projective = projective.status == Status::Pass;

    let minkowski = if is_projective {
        verdict(&minkowski_residuals(metric, grid)?, t, &mut notes)
    } else {
        Flag {
            detail: Some("not projective".into()),
            ..projective.clone()
        }
    };

    let parabolic_type = if metric.kind().is_kropina() {
        verdict(&parabolic_residuals(metric, grid)?, t, &mut notes)
    } else {
        Flag::na("cubic metric")
    };

    let constant_curvature_necessary = if !is_projective {
        Flag::na("curvature formulas need projective coordinates")
    } else {
        match skewness_residuals(metric, grid) {
            Ok(r) => verdict(&r, t, &mut notes),
            Err(AnalysisError::NotProjectiveAtPoint { residual }) => {
                notes.push(format!("skewness: projectivity residual {residual:e} at a sample"));
                Flag::na("not projective at some sample")
            }
            Err(e) => return Err(e),
        }
    };

    Ok(Classification {
        degenerate,
        projective,
        minkowski,
        parabolic_type,
        constant_curvature_necessary,
        notes,
    })
}
