use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::metrics::{ChartMap, Metric, MetricError};

/// Shape of a `D` field that a projective change of coordinates can remove.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DCase {
    /// `D = (x¹ + k1)/(k2 − x²)`.
    Rational { k1: f64, k2: f64 },
    /// `D = k1`.
    Constant { k1: f64 },
}

/// Coordinate change after which `D` vanishes.
pub fn kill_d_transform(case: DCase) -> ChartMap {
    match case {
        DCase::Rational { k1, k2 } => ChartMap::KillDRational { k1, k2 },
        DCase::Constant { k1 } => ChartMap::KillDConstant { k1 },
    }
}

fn require_kropina(metric: &Metric, op: &'static str) -> Result<(), AnalysisError> {
    if metric.kind().is_kropina() {
        Ok(())
    } else {
        Err(AnalysisError::WrongFamily { op, kind: metric.kind() })
    }
}

/// Unit vector along `(D, −1)`, the solution of `X + DY = 0`.
pub fn singular_direction(metric: &Metric, x: [f64; 2]) -> Result<[f64; 2], AnalysisError> {
    require_kropina(metric, "singular_direction")?;
    let d = metric.coefficients(x)?[3];
    let n = d.hypot(1.0);
    Ok([d / n, -1.0 / n])
}

/// Largest distance of `points` from the chord joining the first and last,
/// divided by the chord length.
pub(crate) fn chord_deviation(points: &[[f64; 2]]) -> Result<f64, AnalysisError> {
    let (Some(a), Some(b)) = (points.first(), points.last()) else {
        return Err(AnalysisError::DegenerateChord);
    };
    let (cx, cy) = (b[0] - a[0], b[1] - a[1]);
    let len = cx.hypot(cy);
    if points.len() < 3 || !(len > 1e-9) {
        return Err(AnalysisError::DegenerateChord);
    }
    let mut worst = 0.0f64;
    for p in points {
        let cross = (p[0] - a[0]) * cy - (p[1] - a[1]) * cx;
        let dist = cross.abs() / len;
        if dist.is_nan() || dist > worst {
            worst = dist;
        }
    }
    Ok(worst / len)
}

/// Integrates the singular direction field from `x0` over `arc_length` with
/// `steps` RK4 steps and returns the chord deviation of the path.
pub fn flow_line_straightness(metric: &Metric, x0: [f64; 2], arc_length: f64, steps: usize) -> Result<f64, AnalysisError> {
    require_kropina(metric, "flow_line_straightness")?;
    let steps = steps.max(2);
    let h = arc_length / steps as f64;
    let field = |x: [f64; 2]| -> Result<[f64; 2], AnalysisError> {
        let left = |reason: String| AnalysisError::IntegrationLeftDomain { x1: x[0], x2: x[1], reason };
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(left("non-finite position".into()));
        }
        match singular_direction(metric, x) {
            Ok(v) if v[0].is_finite() => Ok(v),
            Ok(_) => Err(left("direction field is not finite".into())),
            Err(AnalysisError::Metric(e @ (MetricError::Expr(_) | MetricError::Jet(_) | MetricError::DomainSingularity { .. }))) => {
                Err(left(e.to_string()))
            }
            Err(e) => Err(e),
        }
    };
    let mut x = x0;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(x);
    let add = |a: [f64; 2], k: [f64; 2], s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    for _ in 0..steps {
        let k1 = field(x)?;
        let k2 = field(add(x, k1, h / 2.0))?;
        let k3 = field(add(x, k2, h / 2.0))?;
        let k4 = field(add(x, k3, h))?;
        x = [0, 1].map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        path.push(x);
    }
    chord_deviation(&path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{make_metric, MetricSpec};

    fn with_d(d: &str) -> Metric {
        make_metric(&MetricSpec::kropina_general("1", "0", "1", d)).unwrap()
    }

    #[test]
    fn singular_direction_examples() {
        assert_eq!(singular_direction(&with_d("0"), [0.3, 0.1]).unwrap(), [0.0, -1.0]);
        let s = singular_direction(&with_d("1"), [0.0, 0.0]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - r).abs() < 1e-15 && (s[1] + r).abs() < 1e-15);
        // D = (x1 + 1)/(2 − x2) is 1/2 at the origin.
        let s = singular_direction(&with_d("(x1 + 1)/(2 - x2)"), [0.0, 0.0]).unwrap();
        let n = 1.25f64.sqrt();
        assert!((s[0] - 0.5 / n).abs() < 1e-15 && (s[1] + 1.0 / n).abs() < 1e-15);
    }

    #[test]
    fn flow_lines_straight_for_rational_and_constant_d() {
        let rational = flow_line_straightness(&with_d("(x1 + 1)/(2 - x2)"), [0.2, 0.3], 1.0, 200).unwrap();
        assert!(rational < 1e-8, "{rational}");
        let constant = flow_line_straightness(&with_d("0.7"), [0.2, 0.3], 1.0, 50).unwrap();
        assert!(constant < 1e-12, "{constant}");
    }

    #[test]
    fn flow_line_bends_for_generic_d() {
        let dev = flow_line_straightness(&with_d("sin(x1*x2)"), [0.5, 0.8], 1.5, 200).unwrap();
        assert!(dev > 1e-3, "{dev}");
    }

    #[test]
    fn flow_line_stops_at_pole() {
        let r = flow_line_straightness(&with_d("ln(x2 - 0.2)"), [0.0, 0.5], 2.0, 100);
        assert!(matches!(r, Err(AnalysisError::IntegrationLeftDomain { .. })), "{r:?}");
    }

    #[test]
    fn kill_d_maps() {
        let id = kill_d_transform(DCase::Constant { k1: 0.0 });
        assert_eq!(id.forward([0.3, -0.4]).unwrap(), [0.3, -0.4]);
        let r = kill_d_transform(DCase::Rational { k1: 0.0, k2: 0.0 });
        assert_eq!(r.forward([2.0, 1.0]).unwrap(), [2.0, 1.0]);
        assert_eq!(r.inverse([2.0, 1.0]).unwrap(), [2.0, 1.0]);
        let r = kill_d_transform(DCase::Rational { k1: 1.0, k2: 2.0 });
        assert!(r.forward([0.0, 2.0]).is_err());
        for x in [[0.1, 0.2], [-0.7, 0.9], [3.0, -1.0]] {
            let back = r.inverse(r.forward(x).unwrap()).unwrap();
            assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn chord_deviation_of_semicircle() {
        let pts: Vec<[f64; 2]> = (0..=2000)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 2000.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!((chord_deviation(&pts).unwrap() - 0.5).abs() < 1e-3);
        assert!(matches!(chord_deviation(&[[0.0, 0.0]; 3]), Err(AnalysisError::DegenerateChord)));
    }
}
