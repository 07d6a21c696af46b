use serde::{Deserialize, Serialize};

use super::curvature::skewness_condition_residual;
use super::flow::{kill_d_transform, DCase};
use super::grid::{scan, Grid, Scan};
use super::pfun::{minkowski_residual, projectivity_residual_scaled};
use super::{AnalysisError, ResidualReport, GRID_EXCLUSION_TOL};
use crate::autodiff::{Jet, Var};
use crate::expr::{eval_expr, ConstEnv, Expr};
use crate::metrics::{make_metric, Coefficients, EvalPoint, Metric, MetricError, MetricSpec};

const DEGENERATE_CONIC_TOL: f64 = 1e-9;
const DEGENERATE_CUBIC_TOL: f64 = 1e-12;
const B_ZERO_TOL: f64 = 1e-12;

/// Which version of an equation set to evaluate where printed and derived
/// forms differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationSet {
    #[default]
    Corrected,
    AsPrinted,
}

fn report(system: &str, grid: &Grid, s: Scan, notes: Vec<String>) -> ResidualReport {
    let mut info = grid.info();
    info.evaluated = s.evaluated;
    info.excluded = s.excluded;
    ResidualReport {
        system: system.to_string(),
        equations: s.equations,
        grid: info,
        notes,
    }
}

fn base_jets(b: [f64; 2], order: usize) -> Result<(Jet, Jet), AnalysisError> {
    Ok((Jet::variable(b[0], Var::X1, order)?, Jet::variable(b[1], Var::X2, order)?))
}

fn scan_base<F>(grid: &Grid, labels: &[&str], f: F) -> Result<Scan, AnalysisError>
where
    F: Fn([f64; 2]) -> Result<Option<Vec<f64>>, AnalysisError> + Sync,
{
    grid.validate()?;
    scan(&grid.base_points(), labels, |b| b.to_vec(), |b| f(*b))
}

fn scan_points<F>(grid: &Grid, labels: &[&str], f: F) -> Result<Scan, AnalysisError>
where
    F: Fn(&EvalPoint) -> Result<Option<Vec<f64>>, AnalysisError> + Sync,
{
    grid.validate()?;
    scan(&grid.samples(), labels, |p| p.to_array().to_vec(), f)
}

/// True on the singular sets skipped by grid sweeps: the Kropina singular
/// direction, `L³ ≈ 0` for cubic metrics and `L ≈ 0`, where `p` has a pole.
fn near_singular(metric: &Metric, pt: &EvalPoint) -> Result<bool, AnalysisError> {
    if metric.kind().is_cubic() {
        let l = metric.value(pt)?;
        return Ok(l.powi(3).abs() < GRID_EXCLUSION_TOL);
    }
    let d = metric.coefficients(pt.base())?[3];
    if (pt.x + d * pt.y).abs() < GRID_EXCLUSION_TOL {
        return Ok(true);
    }
    Ok(metric.value(pt)?.abs() < GRID_EXCLUSION_TOL)
}

fn require(metric: &Metric, ok: bool, op: &'static str) -> Result<(), AnalysisError> {
    if ok {
        Ok(())
    } else {
        Err(AnalysisError::WrongFamily { op, kind: metric.kind() })
    }
}

/// Projectivity residuals over all grid samples, each scaled by the size of
/// its terms (see [`projectivity_residual_scaled`]).
pub fn projectivity_residuals(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    let s = scan_points(grid, &["projectivity-x1", "projectivity-x2"], |pt| {
        if near_singular(metric, pt)? {
            return Ok(None);
        }
        Ok(Some(projectivity_residual_scaled(metric, pt)?.to_vec()))
    })?;
    Ok(report("projectivity", grid, s, Vec::new()))
}

/// Both forms of the Minkowski conditions over all grid samples.
pub fn minkowski_residuals(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    let s = scan_points(grid, &["III-pij", "III-grad", "II-grad"], |pt| {
        if near_singular(metric, pt)? {
            return Ok(None);
        }
        let m = minkowski_residual(metric, pt)?;
        Ok(Some(vec![m.pij, m.grad, m.grad_pairs]))
    })?;
    Ok(report("minkowski", grid, s, Vec::new()))
}

/// `P_12 − P_21` over all grid samples.
pub fn skewness_residuals(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    let s = scan_points(grid, &["skewness"], |pt| {
        if near_singular(metric, pt)? {
            return Ok(None);
        }
        Ok(Some(vec![skewness_condition_residual(metric, pt)?]))
    })?;
    Ok(report("skewness", grid, s, Vec::new()))
}

fn kropina_fields(metric: &Metric, b: [f64; 2], order: usize) -> Result<Coefficients, AnalysisError> {
    let (x1, x2) = base_jets(b, order)?;
    Ok(metric.coefficient_jets(&x1, &x2)?)
}

/// The four equations on `A, B, C, D` equivalent to projectivity of a
/// Kropina metric, plus `D D₁ − D₂`.
pub fn system_i_residuals(metric: &Metric, grid: &Grid, set: EquationSet) -> Result<ResidualReport, AnalysisError> {
    require(metric, metric.kind().is_kropina(), "system I")?;
    let labels = ["I-1", "I-2", "I-3", "I-4", "I-D"];
    let s = scan_base(grid, &labels, |b| {
        let k = kropina_fields(metric, b, 1)?;
        let delta = k.delta().value();
        if !(delta.abs() >= DEGENERATE_CONIC_TOL) {
            return Err(AnalysisError::DegenerateConic { x1: b[0], x2: b[1], delta });
        }
        let [a, bb, c, d] = k.values();
        let (x1, x2) = (Var::X1, Var::X2);
        let (a1, a2) = (k.a.d(x1), k.a.d(x2));
        let (b1, b2) = (k.b.d(x1), k.b.d(x2));
        let (c1, c2) = (k.c.d(x1), k.c.d(x2));
        let (d1, d2) = (k.d.d(x1), k.d.d(x2));
        let e1 = d * a1 + a2 - b1 + a * d1;
        let e2 = d * d * a1 - a * d * d1 + 3.0 * d * a2 - 2.0 * c1 - d * b1 + 2.0 * bb * d1;
        let e3 = 2.0 * d * d * a2 - 3.0 * d * c1 - c2 + d * b2 + 3.0 * c * d1 + bb * d2 - 2.0 * a * d * d2;
        let mut e4 = d * d * c1 - d * d * b2 + d * c2 - c * d * d1 + bb * d * d2 - 2.0 * c * d2;
        if set == EquationSet::AsPrinted {
            e4 += bb * d * d1;
        }
        Ok(Some(vec![e1, e2, e3, e4, d * d1 - d2]))
    })?;
    Ok(report("I", grid, s, Vec::new()))
}

fn beta_scan<F>(grid: &Grid, d: F) -> Result<ResidualReport, AnalysisError>
where
    F: Fn(&Jet, &Jet) -> Result<Jet, AnalysisError> + Sync,
{
    let s = scan_base(grid, &["beta-1", "beta-2"], |b| {
        let (x1, x2) = base_jets(b, 2)?;
        let dj = d(&x1, &x2)?;
        let e1 = dj.d2(Var::X1, Var::X1);
        let e2 = dj.d(Var::X2) - dj.value() * dj.d(Var::X1);
        Ok(Some(vec![e1, e2]))
    })?;
    Ok(report("beta", grid, s, Vec::new()))
}

/// `∂²D/∂(x¹)²` and `∂D/∂x² − D ∂D/∂x¹` for a field given as an expression.
pub fn system_beta_residuals(d: &Expr, env: &ConstEnv, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    beta_scan(grid, |x1, x2| Ok(eval_expr(d, env, x1, x2)?))
}

/// [`system_beta_residuals`] for the `D` coefficient of a Kropina metric.
pub fn system_beta_residuals_of(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    require(metric, metric.kind().is_kropina(), "system beta")?;
    beta_scan(grid, |x1, x2| Ok(metric.coefficient_jets(x1, x2)?.d))
}

/// Partial derivatives of a potential through third order at a base point.
struct Phi {
    d1: f64,
    d2: f64,
    d11: f64,
    d12: f64,
    d22: f64,
    d111: f64,
    d112: f64,
    d122: f64,
    d222: f64,
}

impl Phi {
    fn at(phi: &Expr, env: &ConstEnv, b: [f64; 2]) -> Result<Self, AnalysisError> {
        let (x1, x2) = base_jets(b, 3)?;
        let f = eval_expr(phi, env, &x1, &x2)?;
        let (u, v) = (Var::X1, Var::X2);
        Ok(Self {
            d1: f.d(u),
            d2: f.d(v),
            d11: f.d2(u, u),
            d12: f.d2(u, v),
            d22: f.d2(v, v),
            d111: f.d3(u, u, u),
            d112: f.d3(u, u, v),
            d122: f.d3(u, v, v),
            d222: f.d3(v, v, v),
        })
    }
}

/// The three equations on `φ` characterizing Minkowski members of the
/// canonical family.
pub fn system_iiprime_residuals(phi: &Expr, env: &ConstEnv, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    let s = scan_base(grid, &["II-prime-1", "II-prime-2", "II-prime-3"], |b| {
        let p = Phi::at(phi, env, b)?;
        Ok(Some(vec![
            2.0 * p.d12 - p.d1 * p.d11,
            p.d22 - p.d2 * p.d11,
            p.d111,
        ]))
    })?;
    Ok(report("II-prime", grid, s, Vec::new()))
}

/// The seven equations on `φ` equivalent to `P_12 = P_21`.
pub fn constant_curvature_residuals(phi: &Expr, env: &ConstEnv, grid: &Grid, set: EquationSet) -> Result<ResidualReport, AnalysisError> {
    let labels = ["cc-1", "cc-2", "cc-3", "cc-4", "cc-5", "cc-6", "cc-7"];
    let printed = set == EquationSet::AsPrinted;
    let s = scan_base(grid, &labels, |b| {
        let Phi {
            d1: f1,
            d2: f2,
            d11: f11,
            d12: f12,
            d22: f22,
            d111: f111,
            d112: f112,
            d122: f122,
            d222: f222,
        } = Phi::at(phi, env, b)?;
        let e3 = if printed { f2 } else { f1 } * f112 - 2.0 * f11 * f12 + f122;
        let e4 = 3.0 * f2 * f11 * f11 - 6.0 * f1 * f1 * f112 + 12.0 * f11 * f12 * f1 - 12.0 * f12 * f12 - 6.0 * f11 * f22
            + 2.0 * if printed { f111 } else { f222 };
        let e5 = 5.0 * f1 * f2 * f112 - 14.0 * f2 * f11 * f12 + 14.0 * f22 * f12 - 2.0 * f1 * f1 * f122
            + 4.0 * f1 * f12.powi(if printed { 3 } else { 2 })
            + 2.0 * f1 * f11 * f22
            - 3.0 * f1 * f222;
        let e6 = 2.0 * f2 * f2 * f112 - 2.0 * f2 * f222 - f1 * f1 * f222 - 2.0 * f2 * f11 * f22 - 4.0 * f2 * f12 * f12
            + 6.0 * f1 * f22 * f12
            + 4.0 * if printed { f11 * f11 } else { f22 * f22 }
            - f1 * f2 * f122;
        let e7 = 2.0 * f2 * f22 * f12 - f2 * f2 * f122 + f1 * f2 * f222 - 2.0 * f1 * f22 * f22;
        Ok(Some(vec![f111, 2.0 * f112 - f11 * f11, e3, e4, e5, e6, e7]))
    })?;
    Ok(report("constant-curvature", grid, s, Vec::new()))
}

/// Eight of the nine equations on the coefficients of a cubic metric with
/// `B ≠ 0`. The third printed equation is not well-formed and is skipped.
pub fn cubic_system_alpha_residuals(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    require(metric, metric.kind().is_cubic(), "cubic system alpha")?;
    let labels = ["alpha-1", "alpha-2", "alpha-4", "alpha-5", "alpha-6", "alpha-7", "alpha-8", "alpha-9"];
    let s = scan_base(grid, &labels, |b| {
        let k = kropina_fields(metric, b, 2)?;
        let [a, bb, c, d] = k.values();
        if !(bb.abs() >= B_ZERO_TOL) {
            return Err(AnalysisError::BZeroOnGrid { x1: b[0], x2: b[1] });
        }
        let (u, v) = (Var::X1, Var::X2);
        let (b1, b2) = (k.b.d(u), k.b.d(v));
        let b11 = k.b.d2(u, u);
        let b12 = k.b.d2(u, v);
        let b22 = k.b.d2(v, v);
        let bsq = bb * bb;
        Ok(Some(vec![
            k.a.d(u) - (2.0 * a / bb * b1 - a * d / bsq * b2),
            k.a.d(v) - ((a * bb - c * d) / (2.0 * bsq) * b2 + c / bb * b1),
            k.c.d(v) - (2.0 * d / (3.0 * bb) * b1 + (2.0 * bb * c - d * d) / (3.0 * bsq) * b2),
            k.d.d(u) - (4.0 * d / (3.0 * bb) * b1 + (bb * c - 2.0 * d * d) / (3.0 * bsq) * b2),
            k.d.d(v) - (b1 / 3.0 + 2.0 / 3.0 * (d / bb) * b2),
            6.0 * bb * b22 - 7.0 * b2 * b2,
            b12 - (4.0 / (3.0 * bb) * b1 * b2 - d / (6.0 * bsq) * b2 * b2),
            b11 - (4.0 / (3.0 * bb) * b1 * b1 + (bb * c - 2.0 * d * d) / (6.0 * bsq) * b2 * b2),
        ]))
    })?;
    let notes = vec!["alpha-3 omitted: its printed coefficient divides by ∂B/∂x² and is not well-formed".to_string()];
    Ok(report("alpha", grid, s, notes))
}

/// Projectivity and Minkowski residuals of the exceptional cubic family.
pub fn cubic_exceptional_check(k: [f64; 4], grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    grid.validate()?;
    let metric = make_metric(&MetricSpec::cubic_exceptional(k))?;
    for b in grid.base_points() {
        let r = metric.cubic_discriminant(b)?;
        if !(r.abs() >= DEGENERATE_CUBIC_TOL) {
            return Err(AnalysisError::DegenerateCubic {
                x1: b[0],
                x2: b[1],
                discriminant: r,
            });
        }
    }
    let labels = ["projectivity-x1", "projectivity-x2", "III-pij", "III-grad", "II-grad"];
    let s = scan_points(grid, &labels, |pt| {
        if near_singular(&metric, pt)? {
            return Ok(None);
        }
        let [r1, r2] = projectivity_residual_scaled(&metric, pt)?;
        let m = minkowski_residual(&metric, pt)?;
        Ok(Some(vec![r1, r2, m.pij, m.grad, m.grad_pairs]))
    })?;
    Ok(report("cubic-exceptional", grid, s, Vec::new()))
}

/// `4AC − B²`, which vanishes when the indicatrix is a parabola.
pub fn parabolic_residuals(metric: &Metric, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    require(metric, metric.kind().is_kropina(), "parabolic test")?;
    let s = scan_base(grid, &["parabolic"], |b| {
        let [a, bb, c, _] = metric.coefficients(b)?;
        Ok(Some(vec![4.0 * a * c - bb * bb]))
    })?;
    Ok(report("parabolic", grid, s, Vec::new()))
}

/// `|D̄|` after the kill-D change of coordinates, at the images of the grid's
/// base points. Points on the pole of the map are skipped.
pub fn kill_d_residuals(metric: &Metric, case: DCase, grid: &Grid) -> Result<ResidualReport, AnalysisError> {
    require(metric, metric.kind().is_kropina(), "kill-D transform")?;
    let chart = kill_d_transform(case);
    let moved = metric.transformed(chart);
    grid.validate()?;
    let mut images = Vec::new();
    let mut poles = 0;
    for b in grid.base_points() {
        match chart.forward(b) {
            Ok(xb) => images.push(xb),
            Err(MetricError::DomainSingularity { .. }) => poles += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let mut s = scan(&images, &["kill-D"], |b| b.to_vec(), |xb| Ok(Some(vec![moved.coefficients(*xb)?[3]])))?;
    s.excluded += poles;
    Ok(report("kill-D", grid, s, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::metrics::ChartMap;

    fn metric(spec: MetricSpec) -> Metric {
        make_metric(&spec).unwrap()
    }

    fn small() -> Grid {
        Grid::new([0.05, 0.45], [0.05, 0.45]).with_counts(5, 5).with_dirs(8)
    }

    #[test]
    fn canonical_family_satisfies_system_i() {
        let m = metric(MetricSpec::canonical("sin(x1)*cos(x2) + x1^3"));
        let r = system_i_residuals(&m, &small(), EquationSet::Corrected).unwrap();
        assert_eq!(r.equations.len(), 5);
        assert!(r.max_residual() < 1e-10, "{}", r.to_json());
    }

    #[test]
    fn constant_fields_give_exact_zeros() {
        let m = metric(MetricSpec::kropina_general("1", "0.5", "2", "0.3"));
        let r = system_i_residuals(&m, &small(), EquationSet::Corrected).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let r = cubic_system_alpha_residuals(&metric(MetricSpec::cubic_general("1", "2", "0.1", "0.2")), &small()).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        assert_eq!(r.equations.len(), 8);
        assert!(r.equation("alpha-3").is_none());
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn rational_d_satisfies_derived_equation_only() {
        let m = metric(MetricSpec::kropina_general("x2^2 + x1", "x1", "1", "(x1 + 1)/(2 - x2)"));
        let r = system_i_residuals(&m, &small(), EquationSet::Corrected).unwrap();
        assert!(r.equation("I-D").unwrap().max_residual < 1e-10);
        assert!(r.equation("I-1").unwrap().max_residual > 1e-3);
    }

    #[test]
    fn transformed_projective_metric_separates_equation_sets() {
        let base = metric(MetricSpec::canonical("sin(x1) + x2^2"));
        let m = base.transformed(ChartMap::KillDRational { k1: 1.0, k2: 2.0 });
        let g = Grid::new([0.2, 0.6], [-0.9, -0.5]).with_counts(5, 5);
        let fixed = system_i_residuals(&m, &g, EquationSet::Corrected).unwrap();
        assert!(fixed.max_residual() < 1e-8, "{}", fixed.to_json());
        let printed = system_i_residuals(&m, &g, EquationSet::AsPrinted).unwrap();
        assert!(printed.equation("I-4").unwrap().max_residual > 1e-3);
        let p = projectivity_residuals(&m, &g.clone().with_dirs(8)).unwrap();
        assert!(p.max_residual() < 1e-8, "{}", p.to_json());
    }

    #[test]
    fn degenerate_conic_rejected() {
        let m = metric(MetricSpec::kropina_general("1", "2", "1 - x1", "1"));
        let r = system_i_residuals(&m, &Grid::new([-1.0, 1.0], [-1.0, 1.0]), EquationSet::Corrected);
        assert!(matches!(r, Err(AnalysisError::DegenerateConic { .. })), "{r:?}");
    }

    #[test]
    fn beta_examples() {
        let env = ConstEnv::from_values(&[1.0, 2.0]);
        let g = Grid::default();
        let r = system_beta_residuals(&parse("(x1 + k1)/(k2 - x2)").unwrap(), &env, &g).unwrap();
        assert!(r.max_residual() < 1e-10);
        let r = system_beta_residuals(&parse("3").unwrap(), &env, &g).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let g = Grid::new([0.0, 1.0], [0.0, 2.0]).with_counts(2, 3);
        let r = system_beta_residuals(&parse("x1*x2").unwrap(), &env, &g).unwrap();
        let e = r.equation("beta-2").unwrap();
        assert_eq!(e.max_residual, 3.0);
        assert_eq!(e.at_point, vec![1.0, 2.0]);
    }

    #[test]
    fn iiprime_examples() {
        let g = small();
        let linear = parse("k1*x1 + k2*x2 + k3").unwrap();
        let env = ConstEnv::from_values(&[0.3, -1.2, 2.0]);
        assert_eq!(system_iiprime_residuals(&linear, &env, &g).unwrap().max_residual(), 0.0);
        let rational = parse("(x1^2 + k2*x1 + k3)/(k1 - x2) + k4").unwrap();
        let env = ConstEnv::from_values(&[1.0, 0.0, 0.0, 0.0]);
        assert!(system_iiprime_residuals(&rational, &env, &g).unwrap().max_residual() < 1e-10);
        let cube = system_iiprime_residuals(&parse("x1^3").unwrap(), &env, &g).unwrap();
        assert!((cube.equation("II-prime-3").unwrap().max_residual - 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_curvature_examples() {
        let g = small();
        let rational = parse("(x1^2 - k2*x1 + k5)/(k1 - x2) + k6").unwrap();
        for ks in [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [2.0, 0.5, 0.0, 0.0, -0.3, 1.0]] {
            let env = ConstEnv::from_values(&ks);
            let r = constant_curvature_residuals(&rational, &env, &g, EquationSet::Corrected).unwrap();
            assert!(r.max_residual() < 1e-9, "{}", r.to_json());
            let printed = constant_curvature_residuals(&rational, &env, &g, EquationSet::AsPrinted).unwrap();
            assert!(printed.max_residual() > 1e-3);
        }
        let affine = parse("2*x1 - x2 + 4").unwrap();
        let r = constant_curvature_residuals(&affine, &ConstEnv::new(), &g, EquationSet::Corrected).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let g0 = Grid::new([0.0, 1.0], [0.0, 1.0]).with_counts(2, 2);
        let r = constant_curvature_residuals(&parse("x1^2*x2").unwrap(), &ConstEnv::new(), &g0, EquationSet::Corrected).unwrap();
        let e = r.equation("cc-2").unwrap();
        assert_eq!(e.max_residual, 4.0);
        assert_eq!(e.at_point[1], 0.0);
    }

    #[test]
    fn alpha_linear_in_perturbation() {
        let g = small();
        let res = |eps: f64| {
            let m = metric(MetricSpec::cubic_general("1", &format!("1 + {eps}*x1"), "0", "0"));
            cubic_system_alpha_residuals(&m, &g).unwrap().equation("alpha-1").unwrap().max_residual
        };
        let (r1, r2) = (res(1e-3), res(1e-2));
        assert!(r1 > 0.0);
        assert!((r2 / r1 - 10.0).abs() < 0.1, "{r1} {r2}");
    }

    #[test]
    fn alpha_rejects_vanishing_b() {
        let m = metric(MetricSpec::cubic_general("1", "x1", "0.5", "1"));
        let r = cubic_system_alpha_residuals(&m, &Grid::default());
        assert!(matches!(r, Err(AnalysisError::BZeroOnGrid { .. })), "{r:?}");
    }

    #[test]
    fn exceptional_cubic_is_minkowski() {
        let g = Grid::new([0.05, 0.95], [0.05, 0.95]);
        let r = cubic_exceptional_check([1.0, 1.0, 0.0, 1.0], &g).unwrap();
        assert!(r.max_residual() < 1e-8, "{}", r.to_json());
        let r = cubic_exceptional_check([0.0, 1.0, 0.3, 0.7], &g).unwrap();
        assert_eq!(r.max_residual(), 0.0);
        let r = cubic_exceptional_check([1.0, 1.0, 0.0, 0.0], &g);
        assert!(matches!(r, Err(AnalysisError::DegenerateCubic { .. })), "{r:?}");
    }

    #[test]
    fn perturbed_cubic_breaks_projectivity() {
        let g = Grid::new([0.05, 0.95], [0.05, 0.95]).with_counts(6, 6).with_dirs(8);
        let m = metric(MetricSpec::cubic_general(
            "(3*x2^2 + 1)/(x1 + 1)^6",
            "0",
            "-2*x2/(x1 + 1)^5 + 0.01*x1",
            "1/(x1 + 1)^4",
        ));
        assert!(projectivity_residuals(&m, &g).unwrap().max_residual() > 1e-4);
    }

    #[test]
    fn minkowski_families() {
        let g = Grid::new([0.05, 0.45], [0.05, 0.45]);
        let r = minkowski_residuals(&metric(MetricSpec::minkowski_rational([1.0, 0.0, 0.0, 0.0])), &g).unwrap();
        assert!(r.max_residual() < 1e-9, "{}", r.to_json());
        let r = minkowski_residuals(&metric(MetricSpec::minkowski_linear([0.4, -1.0, 2.0])), &g).unwrap();
        assert!(r.max_residual() < 1e-12, "{}", r.to_json());
        let r = minkowski_residuals(&metric(MetricSpec::canonical("x1*x2")), &g).unwrap();
        assert!(r.equation("III-grad").unwrap().max_residual > 1e-3);
    }

    #[test]
    fn skewness_vanishes_only_for_minkowski() {
        let g = small();
        let m = metric(MetricSpec::minkowski_rational([1.0, 0.0, 0.0, 0.0]));
        assert!(skewness_residuals(&m, &g).unwrap().max_residual() < 1e-9);
        let m = metric(MetricSpec::canonical("sin(x1) + x2^2"));
        assert!(skewness_residuals(&m, &g).unwrap().max_residual() > 1e-4);
    }

    #[test]
    fn parabolic_metric_is_parabolic() {
        let m = metric(MetricSpec::parabolic("x1^3"));
        let r = parabolic_residuals(&m, &Grid::new([0.5, 1.0], [0.5, 1.0])).unwrap();
        assert!(r.max_residual() < 1e-10);
        let r = parabolic_residuals(&metric(MetricSpec::canonical("x1*x2")), &small()).unwrap();
        assert!(r.max_residual() > 1e-3);
    }

    #[test]
    fn kill_d_removes_rational_and_constant_d() {
        let m = metric(MetricSpec::kropina_general("1 + x1^2", "x2", "2", "(x1 + 1)/(2 - x2)"));
        let r = kill_d_residuals(&m, DCase::Rational { k1: 1.0, k2: 2.0 }, &Grid::default()).unwrap();
        assert!(r.max_residual() < 1e-9, "{}", r.to_json());
        assert_eq!(r.grid.evaluated, 121);
        let m = metric(MetricSpec::kropina_general("1 + x1^2", "x2", "2", "0.6"));
        let r = kill_d_residuals(&m, DCase::Constant { k1: 0.6 }, &Grid::default()).unwrap();
        assert!(r.max_residual() < 1e-12, "{}", r.to_json());
    }

    #[test]
    fn reports_are_deterministic() {
        let m = metric(MetricSpec::canonical("sin(x1)*x2"));
        let g = small().with_seed(Some(7));
        let a = projectivity_residuals(&m, &g).unwrap().to_json();
        let b = projectivity_residuals(&m, &g).unwrap().to_json();
        assert_eq!(a, b);
    }
}
