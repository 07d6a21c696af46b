use serde::Serialize;

use super::AnalysisError;
use crate::autodiff::{Jet, Var};
use crate::metrics::{EvalPoint, Metric};

/// Projectivity residuals below this count as projective at a point.
pub const PROJECTIVE_TOL: f64 = 1e-8;

const ZERO_METRIC_TOL: f64 = 1e-12;

/// `∂L/∂xⁱ − ∂²L/∂x^α∂Xⁱ·X^α` for `i = 1, 2`.
pub fn projectivity_residual(metric: &Metric, pt: &EvalPoint) -> Result<[f64; 2], AnalysisError> {
    Ok(projectivity_terms(metric, pt)?.map(|(a, b)| a - b))
}

/// The two sides of each projectivity equation.
fn projectivity_terms(metric: &Metric, pt: &EvalPoint) -> Result<[(f64, f64); 2], AnalysisError> {
    let l = metric.eval_l(pt, 2)?;
    let dir = pt.dir();
    Ok([0, 1].map(|i| {
        let xdi = Var::DIR[i];
        let rhs = (0..2).map(|a| l.d2(Var::BASE[a], xdi) * dir[a]).sum::<f64>();
        (l.d(Var::BASE[i]), rhs)
    }))
}

/// Projectivity residual divided by `max(1, |∂L/∂xⁱ|, |∂²L/∂x^α∂Xⁱ·X^α|)`.
///
/// Near the singular direction both sides grow like inverse powers of
/// `X + DY`; the scaled residual keeps round-off at the level of `ε`.
pub fn projectivity_residual_scaled(metric: &Metric, pt: &EvalPoint) -> Result<[f64; 2], AnalysisError> {
    Ok(projectivity_terms(metric, pt)?.map(|(a, b)| (a - b) / a.abs().max(b.abs()).max(1.0)))
}

/// Jet of `p = (∂L/∂x^ν X^ν)/(2L)` through `order`.
pub fn p_jet(metric: &Metric, pt: &EvalPoint, order: usize) -> Result<Jet, AnalysisError> {
    let l = metric.eval_l(pt, order + 1)?;
    if l.value().abs() < ZERO_METRIC_TOL {
        return Err(AnalysisError::ZeroMetricValue { value: l.value() });
    }
    let x = Jet::variable(pt.x, Var::DirX, order)?;
    let y = Jet::variable(pt.y, Var::DirY, order)?;
    let num = &l.derivative(Var::X1)? * &x + &l.derivative(Var::X2)? * &y;
    Ok(num.try_div(&l.truncate(order).scale(2.0))?)
}

/// `p` and its first and second derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PFunctions {
    pub p: f64,
    /// `p_i = ∂p/∂Xⁱ`.
    pub p_i: [f64; 2],
    /// `p_ij = ∂²p/∂Xⁱ∂Xʲ`.
    pub p_ij: [[f64; 2]; 2],
    /// `∂p/∂xⁱ`.
    pub dp_dx: [f64; 2],
    /// `[i][j] = ∂p_i/∂xʲ`.
    pub dpi_dxj: [[f64; 2]; 2],
}

impl PFunctions {
    pub fn from_jet(p: &Jet) -> Self {
        let (b, d) = (Var::BASE, Var::DIR);
        Self {
            p: p.value(),
            p_i: [p.d(d[0]), p.d(d[1])],
            p_ij: [0, 1].map(|i| [0, 1].map(|j| p.d2(d[i], d[j]))),
            dp_dx: [p.d(b[0]), p.d(b[1])],
            dpi_dxj: [0, 1].map(|i| [0, 1].map(|j| p.d2(d[i], b[j]))),
        }
    }

    /// `|p_α X^α − p|` and `max_i |p_{iα} X^α|`.
    pub fn euler_defects(&self, dir: [f64; 2]) -> (f64, f64) {
        let first = (self.p_i[0] * dir[0] + self.p_i[1] * dir[1] - self.p).abs();
        let second = (0..2)
            .map(|i| (self.p_ij[i][0] * dir[0] + self.p_ij[i][1] * dir[1]).abs())
            .fold(0.0, f64::max);
        (first, second)
    }
}

pub fn p_functions(metric: &Metric, pt: &EvalPoint) -> Result<PFunctions, AnalysisError> {
    Ok(PFunctions::from_jet(&p_jet(metric, pt, 2)?))
}

/// Defects of the Minkowski conditions at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinkowskiResidual {
    /// `max |p_ij|`.
    pub pij: f64,
    /// `max_i |∂p/∂xⁱ − p·p_i|`.
    pub grad: f64,
    /// `max_ij |∂p_j/∂xⁱ − p_j p_i|`.
    pub grad_pairs: f64,
}

impl MinkowskiResidual {
    pub fn from_p(f: &PFunctions) -> Self {
        let mut pij = 0.0f64;
        let mut grad = 0.0f64;
        let mut grad_pairs = 0.0f64;
        for i in 0..2 {
            grad = grad.max((f.dp_dx[i] - f.p * f.p_i[i]).abs());
            for j in 0..2 {
                pij = pij.max(f.p_ij[i][j].abs());
                grad_pairs = grad_pairs.max((f.dpi_dxj[j][i] - f.p_i[j] * f.p_i[i]).abs());
            }
        }
        Self { pij, grad, grad_pairs }
    }
}

pub fn minkowski_residual(metric: &Metric, pt: &EvalPoint) -> Result<MinkowskiResidual, AnalysisError> {
    Ok(MinkowskiResidual::from_p(&p_functions(metric, pt)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{fd_partial, FdConfig, MultiIndex};
    use crate::metrics::{make_metric, MetricSpec};

    fn metric(spec: MetricSpec) -> Metric {
        make_metric(&spec).unwrap()
    }

    #[test]
    fn constant_coefficients_are_projective_and_flat() {
        let m = metric(MetricSpec::kropina_general("1.5", "0.3", "2", "0.4"));
        let pt = EvalPoint::new(0.2, -0.3, 0.8, 0.6);
        assert_eq!(projectivity_residual(&m, &pt).unwrap(), [0.0, 0.0]);
        let f = p_functions(&m, &pt).unwrap();
        assert_eq!(f.p, 0.0);
        assert_eq!(f.p_ij, [[0.0; 2]; 2]);
        assert_eq!(f.dpi_dxj, [[0.0; 2]; 2]);
    }

    #[test]
    fn canonical_trig_potential_is_projective() {
        let m = metric(MetricSpec::canonical("sin(x1)*cos(x2)"));
        for pt in [EvalPoint::new(0.3, 0.2, 1.0, 0.5), EvalPoint::new(-0.7, 0.9, -0.6, 0.8)] {
            let r = projectivity_residual(&m, &pt).unwrap();
            assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn non_gradient_coefficients_violate_projectivity() {
        // A_x² = 1 while B_x¹ = 0.
        let m = metric(MetricSpec::kropina_general("x2", "0", "1", "0"));
        let r = projectivity_residual(&m, &EvalPoint::new(0.0, 1.0, 1.0, 1.0)).unwrap();
        assert!(r[0].abs().max(r[1].abs()) > 0.1, "{r:?}");
    }

    #[test]
    fn p_matches_finite_differences() {
        let m = metric(MetricSpec::canonical("x1*x2"));
        let pt = EvalPoint::new(0.0, 0.0, 1.0, 1.0);
        let pj = p_jet(&m, &pt, 2).unwrap();
        let scalar = |q: [f64; 4]| -> Result<f64, AnalysisError> {
            Ok(p_jet(&m, &EvalPoint::new(q[0], q[1], q[2], q[3]), 0)?.value())
        };
        for idx in [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 1, 1], [0, 1, 0, 1], [0, 0, 0, 2]] {
            let idx = MultiIndex::new(idx);
            let fd = fd_partial(scalar, pt.to_array(), &idx, FdConfig::default()).unwrap();
            let jet = pj.partial(&idx).unwrap();
            assert!((jet - fd).abs() / jet.abs().max(1.0) < 1e-7, "{idx:?}: {jet} vs {fd}");
        }
        let (e1, e2) = PFunctions::from_jet(&pj).euler_defects(pt.dir());
        assert!(e1 < 1e-10 && e2 < 1e-10);
    }

    #[test]
    fn p_is_one_homogeneous() {
        let m = metric(MetricSpec::canonical("sin(x1) + x2^2"));
        let pt = EvalPoint::new(0.4, 0.1, 0.9, -0.3);
        let p1 = p_functions(&m, &pt).unwrap().p;
        let p3 = p_functions(&m, &pt.scaled(3.0)).unwrap().p;
        assert!((p3 - 3.0 * p1).abs() < 1e-10 * p1.abs().max(1.0));
    }

    #[test]
    fn zero_metric_value_rejected() {
        // L = (X + Y)²/X vanishes on X = −Y.
        let m = metric(MetricSpec::kropina_general("1 + 0*x1", "2", "1", "0"));
        let r = p_functions(&m, &EvalPoint::new(0.0, 0.0, 1.0, -1.0));
        assert!(matches!(r, Err(AnalysisError::ZeroMetricValue { .. })), "{r:?}");
    }
}
