//! Implicit solve of `x² + x¹a + σ(a) = 0` for the parabolic family.

use serde::Serialize;

use super::MetricError;
use crate::autodiff::{Jet, Var};
use crate::expr::{eval_expr, ConstEnv, Expr};

const SCAN_LO: f64 = -10.0;
const SCAN_HI: f64 = 10.0;
const SCAN_STEPS: usize = 2000;
const RESIDUAL_TOL: f64 = 1e-12;
const MULTIPLICITY_TOL: f64 = 1e-8;

/// A root `a` of the parabolic equation at one base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParabolicRoot {
    pub a: f64,
    pub residual: f64,
    /// `x¹ + σ′(a)` at the root.
    pub slope: f64,
    /// Set when the slope is below `1e-8`, i.e. the root is (nearly) multiple.
    pub multiplicity_warning: bool,
}

fn sigma_value(sigma: &Expr, env: &ConstEnv, a: f64) -> Result<f64, MetricError> {
    Ok(sigma.eval_scalar(env, a, a)?)
}

fn sigma_slope(sigma: &Expr, env: &ConstEnv, a: f64) -> Result<f64, MetricError> {
    let aj = Jet::variable(a, Var::X1, 1)?;
    Ok(eval_expr(sigma, env, &aj, &aj)?.d(Var::X1))
}

/// Finds `a` with `x2 + x1·a + σ(a) = 0`.
///
/// The interval `[-10, 10]` is scanned for sign changes and the bracket
/// nearest `a = 0` is refined by safeguarded Newton. Without a sign change,
/// Newton starts from the scan point of smallest residual.
pub fn solve_parabolic_a(sigma: &Expr, env: &ConstEnv, x1: f64, x2: f64) -> Result<ParabolicRoot, MetricError> {
    let failed = || MetricError::ImplicitSolveFailed { x1, x2 };
    let f = |a: f64| sigma_value(sigma, env, a).map(|s| x2 + x1 * a + s);
    let fp = |a: f64| sigma_slope(sigma, env, a).map(|s| x1 + s);

    let h = (SCAN_HI - SCAN_LO) / SCAN_STEPS as f64;
    let samples: Vec<(f64, f64)> = (0..=SCAN_STEPS)
        .filter_map(|i| {
            let a = SCAN_LO + h * i as f64;
            f(a).ok().filter(|v| v.is_finite()).map(|v| (a, v))
        })
        .collect();

    let mut best: Option<(f64, f64)> = None;
    for w in samples.windows(2) {
        let ((a0, f0), (a1, f1)) = (w[0], w[1]);
        let hit = if f0 == 0.0 {
            Some((a0, a0))
        } else if f0 * f1 < 0.0 && a1 - a0 <= 1.5 * h {
            Some((a0, a1))
        } else {
            None
        };
        if let Some(b) = hit {
            let key = |b: (f64, f64)| (0.5 * (b.0 + b.1)).abs();
            if best.is_none_or(|cur| key(b) < key(cur)) {
                best = Some(b);
            }
        }
    }

    let a = match best {
        Some((lo, hi)) if lo == hi => lo,
        Some((lo, hi)) => refine_bracket(&f, &fp, lo, hi)?,
        None => {
            let seed = samples
                .iter()
                .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()).then(p.0.abs().total_cmp(&q.0.abs())))
                .ok_or_else(failed)?
                .0;
            newton(&f, &fp, seed).ok_or_else(failed)?
        }
    };
    let residual = f(a)?.abs();
    if !(residual < RESIDUAL_TOL) {
        return Err(failed());
    }
    let slope = fp(a)?;
    Ok(ParabolicRoot {
        a,
        residual,
        slope,
        multiplicity_warning: slope.abs() < MULTIPLICITY_TOL,
    })
}

fn refine_bracket(
    f: &impl Fn(f64) -> Result<f64, MetricError>,
    fp: &impl Fn(f64) -> Result<f64, MetricError>,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64, MetricError> {
    let mut f_lo = f(lo)?;
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fa = f(a)?;
        if fa.abs() < 0.1 * RESIDUAL_TOL {
            return Ok(a);
        }
        if (fa < 0.0) == (f_lo < 0.0) {
            lo = a;
            f_lo = fa;
        } else {
            hi = a;
        }
        let d = fp(a)?;
        let step = a - fa / d;
        a = if d != 0.0 && step > lo.min(hi) && step < lo.max(hi) {
            step
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0) {
            break;
        }
    }
    Ok(a)
}

fn newton(
    f: &impl Fn(f64) -> Result<f64, MetricError>,
    fp: &impl Fn(f64) -> Result<f64, MetricError>,
    mut a: f64,
) -> Option<f64> {
    for _ in 0..100 {
        let fa = f(a).ok()?;
        if fa.abs() < 0.1 * RESIDUAL_TOL {
            return Some(a);
        }
        let d = fp(a).ok()?;
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        a -= fa / d;
        if !a.is_finite() {
            return None;
        }
    }
    f(a).ok().filter(|v| v.abs() < RESIDUAL_TOL).map(|_| a)
}

/// Jet of `a(x¹, x²)` through the order of the inputs, by simplified Newton
/// on jets (each sweep fixes one more degree).
pub(super) fn a_jet(sigma: &Expr, env: &ConstEnv, x1: &Jet, x2: &Jet) -> Result<Jet, MetricError> {
    let root = solve_parabolic_a(sigma, env, x1.value(), x2.value())?;
    if root.slope == 0.0 {
        return Err(MetricError::ImplicitSolveFailed {
            x1: x1.value(),
            x2: x2.value(),
        });
    }
    let order = x1.order();
    let mut a = Jet::constant(root.a, order);
    for _ in 0..order {
        let s = eval_expr(sigma, env, &a, &a)?;
        let residual = x2 + &(x1 * &a) + s;
        a = a - residual.scale(1.0 / root.slope);
    }
    Ok(a)
}
