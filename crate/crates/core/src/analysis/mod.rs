//! Residuals of the projectivity, Minkowski and curvature conditions.
//!
//! Point-level functions evaluate one identity at one `(x, X)`; the
//! `*_residuals` functions sweep a [`Grid`] and return a [`ResidualReport`]
//! with the largest absolute residual of each equation and where it occurs.

mod curvature;
mod flow;
mod grid;
mod pfun;
mod systems;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::JetError;
use crate::expr::ExprError;
use crate::metrics::{MetricError, MetricKind};

pub use curvature::{
    berwald_curvature, connection_g, curvature_bundle, skewness_condition_residual, CurvatureBundle,
    CurvatureForm, Tensor3, Tensor4,
};
pub(crate) use flow::chord_deviation;
pub use flow::{flow_line_straightness, kill_d_transform, singular_direction, DCase};
pub use grid::{Grid, GridInfo};
pub use pfun::{
    minkowski_residual, p_functions, p_jet, projectivity_residual, projectivity_residual_scaled, MinkowskiResidual, PFunctions,
    PROJECTIVE_TOL,
};
pub use systems::{
    constant_curvature_residuals, cubic_exceptional_check, cubic_system_alpha_residuals,
    kill_d_residuals, minkowski_residuals, parabolic_residuals, projectivity_residuals,
    skewness_residuals, system_beta_residuals, system_beta_residuals_of, system_i_residuals,
    system_iiprime_residuals, EquationSet,
};

/// Samples with `|X + DY|` or `|L³|` below this are skipped on grids.
pub const GRID_EXCLUSION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("metric value {value:e} too close to zero")]
    ZeroMetricValue { value: f64 },
    #[error("projectivity residual {residual:e} at the point; connection formula needs projective coordinates")]
    NotProjectiveAtPoint { residual: f64 },
    #[error("Δ = {delta:e} vanishes at ({x1}, {x2})")]
    DegenerateConic { x1: f64, x2: f64, delta: f64 },
    #[error("cubic discriminant {discriminant:e} vanishes at ({x1}, {x2})")]
    DegenerateCubic { x1: f64, x2: f64, discriminant: f64 },
    #[error("B vanishes at ({x1}, {x2})")]
    BZeroOnGrid { x1: f64, x2: f64 },
    #[error("integration left the domain at ({x1}, {x2}): {reason}")]
    IntegrationLeftDomain { x1: f64, x2: f64, reason: String },
    #[error("chord shorter than 1e-9")]
    DegenerateChord,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{op} does not apply to {kind} metrics")]
    WrongFamily { op: &'static str, kind: MetricKind },
}

/// Largest residual of one equation over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationResidual {
    pub label: String,
    pub max_residual: f64,
    /// `[x1, x2]` or `[x1, x2, X, Y]` of the worst sample.
    pub at_point: Vec<f64>,
}

/// Residuals of one named system over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub system: String,
    pub equations: Vec<EquationResidual>,
    pub grid: GridInfo,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.equations
            .iter()
            .map(|e| e.max_residual)
            .fold(0.0, |a, b| if b.is_nan() || b > a { b } else { a })
    }

    pub fn equation(&self, label: &str) -> Option<&EquationResidual> {
        self.equations.iter().find(|e| e.label == label)
    }

    /// True when every equation stays below `threshold`.
    pub fn passes(&self, threshold: f64) -> bool {
        self.equations.iter().all(|e| e.max_residual < threshold)
    }

    /// The equation with the largest residual.
    pub fn worst(&self) -> Option<&EquationResidual> {
        self.equations
            .iter()
            .fold(None, |best: Option<&EquationResidual>, e| match best {
                Some(b) if !(e.max_residual > b.max_residual || e.max_residual.is_nan()) => Some(b),
                _ => Some(e),
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
