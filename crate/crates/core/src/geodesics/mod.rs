//! Geodesic spray, fixed-step RK4 integration and straightness of traces.
//!
//! Geodesics solve `ẍⁱ + 2Gⁱ(x, ẋ) = 0` with the spray built from the
//! fundamental tensor `g_ij = ½ ∂²L²/∂Xⁱ∂Xʲ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{chord_deviation, AnalysisError};
use crate::autodiff::{Jet, JetError, Var};
use crate::metrics::{EvalPoint, Metric, MetricError};

/// Fundamental tensors with `|det|` below this are degenerate.
pub const DEGENERATE_TENSOR_TOL: f64 = 1e-10;

/// Integration halts when `|X + DY| < SINGULAR_HALT_TOL·|(X, Y)|`.
pub const SINGULAR_HALT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("fundamental tensor is degenerate (det = {det:e})")]
    DegenerateTensor { det: f64 },
    #[error("integration cannot start: {0}")]
    ImmediateSingularity(Termination),
    #[error("chord shorter than 1e-9")]
    DegenerateChord,
    #[error("invalid integration setup: {0}")]
    InvalidSetup(String),
}

impl From<AnalysisError> for GeodesicError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Metric(m) => GeodesicError::Metric(m),
            AnalysisError::Jet(j) => GeodesicError::Jet(j),
            _ => GeodesicError::DegenerateChord,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalTensor {
    pub g: [[f64; 2]; 2],
    pub det: f64,
}

impl FundamentalTensor {
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let [[a, b], [c, d]] = self.g;
        let s = 1.0 / self.det;
        [[d * s, -b * s], [-c * s, a * s]]
    }
}

fn tensor_from(f: &Jet) -> Result<FundamentalTensor, GeodesicError> {
    let d = Var::DIR;
    let g = [0, 1].map(|i| [0, 1].map(|j| 0.5 * f.d2(d[i], d[j])));
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if !(det.abs() >= DEGENERATE_TENSOR_TOL) {
        return Err(GeodesicError::DegenerateTensor { det });
    }
    Ok(FundamentalTensor { g, det })
}

fn l_squared(metric: &Metric, pt: &EvalPoint) -> Result<Jet, GeodesicError> {
    let l = metric.eval_l(pt, 2)?;
    Ok(&l * &l)
}

/// `g_ij = ½ ∂²L²/∂Xⁱ∂Xʲ` and its determinant.
pub fn fundamental_tensor(metric: &Metric, pt: &EvalPoint) -> Result<FundamentalTensor, GeodesicError> {
    tensor_from(&l_squared(metric, pt)?)
}

/// `Gⁱ = ¼ gⁱᵏ(∂²L²/∂Xᵏ∂xʲ Xʲ − ∂L²/∂xᵏ)`.
pub fn spray(metric: &Metric, pt: &EvalPoint) -> Result<[f64; 2], GeodesicError> {
    let f = l_squared(metric, pt)?;
    let inv = tensor_from(&f)?.inverse();
    let dir = pt.dir();
    let (b, d) = (Var::BASE, Var::DIR);
    let rhs = [0, 1].map(|k| (0..2).map(|j| f.d2(d[k], b[j]) * dir[j]).sum::<f64>() - f.d(b[k]));
    Ok([0, 1].map(|i| 0.25 * (inv[i][0] * rhs[0] + inv[i][1] * rhs[1])))
}

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    #[error("completed")]
    Completed,
    #[error("fundamental tensor degenerate (det = {det:e})")]
    DegenerateTensor { det: f64 },
    #[error("velocity reached the singular direction")]
    SingularDirection,
    #[error("left the bounding box")]
    LeftBox,
    #[error("metric evaluation failed: {message}")]
    EvaluationFailed { message: String },
}

impl Termination {
    fn from_error(e: GeodesicError) -> Self {
        match e {
            GeodesicError::DegenerateTensor { det } => Termination::DegenerateTensor { det },
            GeodesicError::Metric(MetricError::SingularDirection { .. }) => Termination::SingularDirection,
            other => Termination::EvaluationFailed { message: other.to_string() },
        }
    }
}

/// `[x1min, x1max, x2min, x2max]`.
pub type BoundingBox = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl TraceSample {
    pub fn position(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.v1, self.v2]
    }

    fn point(&self) -> EvalPoint {
        EvalPoint::new(self.x1, self.x2, self.v1, self.v2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicTrace {
    pub samples: Vec<TraceSample>,
    /// Chord deviation; `None` when fewer than three samples were produced
    /// or the chord is degenerate.
    pub deviation: Option<f64>,
    pub termination: Termination,
}

/// Start, end and outcome of an integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSummary {
    pub start: TraceSample,
    pub end: TraceSample,
    pub samples: usize,
    pub deviation: Option<f64>,
    pub termination: Termination,
}

impl GeodesicTrace {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    pub fn summary(&self) -> GeodesicSummary {
        GeodesicSummary {
            start: self.samples[0],
            end: *self.samples.last().expect("trace has a start sample"),
            samples: self.samples.len(),
            deviation: self.deviation,
            termination: self.termination.clone(),
        }
    }

    /// Largest relative change of `L(x, ẋ)` from its initial value.
    pub fn energy_drift(&self, metric: &Metric) -> Result<f64, GeodesicError> {
        let l0 = metric.value(&self.samples[0].point())?;
        let mut worst = 0.0f64;
        for s in &self.samples {
            let l = metric.value(&s.point())?;
            worst = worst.max((l - l0).abs() / l0.abs());
        }
        Ok(worst)
    }
}

/// Chord deviation of the positions of `samples`.
pub fn straightness(samples: &[TraceSample]) -> Result<f64, GeodesicError> {
    let pts: Vec<[f64; 2]> = samples.iter().map(TraceSample::position).collect();
    chord_deviation(&pts).map_err(|_| GeodesicError::DegenerateChord)
}

fn near_singular(metric: &Metric, x: [f64; 2], v: [f64; 2]) -> Result<bool, GeodesicError> {
    if !metric.kind().is_kropina() {
        return Ok(false);
    }
    let d = metric.coefficients(x)?[3];
    Ok((v[0] + d * v[1]).abs() < SINGULAR_HALT_TOL * v[0].hypot(v[1]))
}

fn accel(metric: &Metric, x: [f64; 2], v: [f64; 2]) -> Result<[f64; 2], GeodesicError> {
    if !(x.iter().chain(&v).all(|c| c.is_finite())) {
        return Err(GeodesicError::InvalidSetup("state is not finite".into()));
    }
    let g = spray(metric, &EvalPoint::from_parts(x, v))?;
    Ok([-2.0 * g[0], -2.0 * g[1]])
}

fn inside(bbox: Option<BoundingBox>, x: [f64; 2]) -> bool {
    bbox.is_none_or(|b| x[0] >= b[0] && x[0] <= b[1] && x[1] >= b[2] && x[1] <= b[3])
}

/// Classical RK4 for `ẍ = −2G(x, ẋ)` over `[0, t_end]` in `steps` steps.
///
/// Stops early, recording the reason, when the tensor degenerates, the
/// velocity approaches the singular direction, evaluation fails or the
/// position leaves `bbox`. Fails with `ImmediateSingularity` if the first
/// step cannot be taken.
pub fn integrate_geodesic(
    metric: &Metric,
    x0: [f64; 2],
    v0: [f64; 2],
    t_end: f64,
    steps: usize,
    bbox: Option<BoundingBox>,
) -> Result<GeodesicTrace, GeodesicError> {
    if steps < 16 {
        return Err(GeodesicError::InvalidSetup(format!("steps must be at least 16, got {steps}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(GeodesicError::InvalidSetup(format!("t_end must be positive, got {t_end}")));
    }
    let h = t_end / steps as f64;
    let sample = |t: f64, x: [f64; 2], v: [f64; 2]| TraceSample {
        t,
        x1: x[0],
        x2: x[1],
        v1: v[0],
        v2: v[1],
    };
    let mut samples = vec![sample(0.0, x0, v0)];
    let (mut x, mut v) = (x0, v0);
    let step = |x: [f64; 2], v: [f64; 2]| -> Result<([f64; 2], [f64; 2]), GeodesicError> {
        let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
        let a1 = accel(metric, x, v)?;
        let (x2, v2) = (add(x, v, h / 2.0), add(v, a1, h / 2.0));
        let a2 = accel(metric, x2, v2)?;
        let (x3, v3) = (add(x, v2, h / 2.0), add(v, a2, h / 2.0));
        let a3 = accel(metric, x3, v3)?;
        let (x4, v4) = (add(x, v3, h), add(v, a3, h));
        let a4 = accel(metric, x4, v4)?;
        let xn = [0, 1].map(|i| x[i] + h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]));
        let vn = [0, 1].map(|i| v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]));
        Ok((xn, vn))
    };
    let mut termination = Termination::Completed;
    for n in 0..steps {
        let outcome = if !inside(bbox, x) {
            Err(Termination::LeftBox)
        } else {
            match near_singular(metric, x, v) {
                Ok(true) => Err(Termination::SingularDirection),
                Ok(false) => step(x, v).map_err(Termination::from_error),
                Err(e) => Err(Termination::from_error(e)),
            }
        };
        match outcome {
            Ok((xn, vn)) => {
                x = xn;
                v = vn;
                samples.push(sample((n + 1) as f64 * h, x, v));
            }
            Err(reason) if n == 0 => return Err(GeodesicError::ImmediateSingularity(reason)),
            Err(reason) => {
                termination = reason;
                break;
            }
        }
    }
    if termination == Termination::Completed && !inside(bbox, x) {
        termination = Termination::LeftBox;
    }
    let deviation = straightness(&samples).ok();
    Ok(GeodesicTrace {
        samples,
        deviation,
        termination,
    })
}
