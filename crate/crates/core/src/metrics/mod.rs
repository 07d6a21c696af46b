//! Metric families `L(x, X, Y)` evaluated as jets.
//!
//! Quadratic-over-linear (Kropina) metrics have the form
//! `L = (AX² + BXY + CY²)/(X + DY)`; cubic metrics have
//! `L³ = AX³ + BY³ + 3CX²Y + 3DXY²`. Coefficients are expressions in
//! `x1`, `x2`, so every derivative of `L` comes from jet arithmetic.

mod chart;
mod parabolic;
mod spec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Jet, JetError, Var, MAX_ORDER, NVARS};
use crate::expr::{eval_expr, ConstEnv, Expr, ExprError};

pub use chart::ChartMap;
pub use parabolic::{solve_parabolic_a, ParabolicRoot};
pub use spec::{
    make_metric, MetricKind, MetricSpec, MINKOWSKI_LINEAR_POTENTIAL, MINKOWSKI_RATIONAL_POTENTIAL,
};

/// `|X + DY|` below this is the singular direction.
pub const SINGULAR_DIRECTION_TOL: f64 = 1e-9;
/// `|Δ|` below this is a reducible conic.
pub const DEGENERATE_CONIC_TOL: f64 = 1e-9;
/// `|R|` below this is a degenerate cubic form.
pub const DEGENERATE_CUBIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("malformed metric spec: {0}")]
    MalformedSpec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("direction is singular: |X + DY| = {value:e}")]
    SingularDirection { value: f64 },
    #[error("degenerate conic: Δ = {delta:e}")]
    DegenerateConic { delta: f64 },
    #[error("degenerate cubic: R = {discriminant:e}")]
    DegenerateCubic { discriminant: f64 },
    #[error("no root of the parabolic equation at ({x1}, {x2})")]
    ImplicitSolveFailed { x1: f64, x2: f64 },
    #[error("direction (0, 0)")]
    ZeroDirection,
    #[error("coordinate map is singular at ({x1}, {x2})")]
    DomainSingularity { x1: f64, x2: f64 },
    #[error("{op} does not apply to {kind} metrics")]
    WrongFamily { op: &'static str, kind: MetricKind },
}

/// A base point with a direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x1: f64,
    pub x2: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

impl EvalPoint {
    pub const fn new(x1: f64, x2: f64, x: f64, y: f64) -> Self {
        Self { x1, x2, x, y }
    }

    pub fn from_parts(base: [f64; 2], dir: [f64; 2]) -> Self {
        Self::new(base[0], base[1], dir[0], dir[1])
    }

    pub fn base(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn dir(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn to_array(&self) -> [f64; NVARS] {
        [self.x1, self.x2, self.x, self.y]
    }

    /// Same base point, direction scaled by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.x1, self.x2, t * self.x, t * self.y)
    }

    /// Coordinate jets at this point.
    pub fn jets(&self, order: usize) -> Result<[Jet; NVARS], JetError> {
        let p = self.to_array();
        let mut out = Vec::with_capacity(NVARS);
        for v in Var::ALL {
            out.push(Jet::variable(p[v.index()], v, order)?);
        }
        Ok(out.try_into().expect("four jets"))
    }
}

/// The four coefficient functions as jets.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub a: Jet,
    pub b: Jet,
    pub c: Jet,
    pub d: Jet,
}

impl Coefficients {
    pub fn values(&self) -> [f64; 4] {
        [self.a.value(), self.b.value(), self.c.value(), self.d.value()]
    }

    /// `Δ = AD² − BD + C`.
    pub fn delta(&self) -> Jet {
        &(&self.a * &(&self.d * &self.d)) - &(&self.b * &self.d) + &self.c
    }

    /// `R = (AB − DC)² − 4(AD − C²)(CB − D²)`.
    pub fn cubic_discriminant(&self) -> Jet {
        let (a, b, c, d) = (&self.a, &self.b, &self.c, &self.d);
        let m = a * b - d * c;
        let p = a * d - c * c;
        let q = c * b - d * d;
        &m * &m - (&p * &q).scale(4.0)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Form {
    Kropina(Box<[Expr; 4]>),
    Canonical { phi: Expr, k: f64 },
    Parabolic { sigma: Expr },
    Cubic(Box<[Expr; 4]>),
    Transformed { inner: Box<Metric>, chart: ChartMap },
}

/// An evaluable metric.
#[derive(Debug, Clone)]
pub struct Metric {
    kind: MetricKind,
    form: Form,
    env: ConstEnv,
    spec: Option<MetricSpec>,
}

impl Metric {
    pub(crate) fn from_parts(kind: MetricKind, form: Form, env: ConstEnv, spec: Option<MetricSpec>) -> Self {
        Self { kind, form, env, spec }
    }

    pub fn from_spec(spec: &MetricSpec) -> Result<Self, MetricError> {
        make_metric(spec)
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// The spec this metric was built from; `None` for transformed metrics.
    pub fn spec(&self) -> Option<&MetricSpec> {
        self.spec.as_ref()
    }

    pub fn env(&self) -> &ConstEnv {
        &self.env
    }

    /// Potential `φ` of metrics in canonical form.
    pub fn phi(&self) -> Option<&Expr> {
        match &self.form {
            Form::Canonical { phi, .. } => Some(phi),
            _ => None,
        }
    }

    /// The same geometry written in the coordinates `x̄ = chart(x)`.
    pub fn transformed(&self, chart: ChartMap) -> Metric {
        Metric {
            kind: self.kind,
            form: Form::Transformed {
                inner: Box::new(self.clone()),
                chart,
            },
            env: self.env.clone(),
            spec: None,
        }
    }

    /// Jet of `L` at `pt` through `order`.
    pub fn eval_l(&self, pt: &EvalPoint, order: usize) -> Result<Jet, MetricError> {
        self.eval_jets(&pt.jets(order)?)
    }

    pub fn value(&self, pt: &EvalPoint) -> Result<f64, MetricError> {
        Ok(self.eval_l(pt, 0)?.value())
    }

    /// `L` with `(x¹, x², X, Y)` replaced by arbitrary jets of a common order.
    pub fn eval_jets(&self, v: &[Jet; NVARS]) -> Result<Jet, MetricError> {
        let (x, y) = (&v[2], &v[3]);
        if x.value() == 0.0 && y.value() == 0.0 {
            return Err(MetricError::ZeroDirection);
        }
        match &self.form {
            Form::Cubic(_) => {
                let k = self.coefficient_jets(&v[0], &v[1])?;
                let r = k.cubic_discriminant().value();
                if r.abs() < DEGENERATE_CUBIC_TOL {
                    return Err(MetricError::DegenerateCubic { discriminant: r });
                }
                let x2 = x * x;
                let y2 = y * y;
                let form = &k.a * &(&x2 * x) + &k.b * &(&y2 * y) + (&k.c * &(&x2 * y)).scale(3.0)
                    + (&k.d * &(x * &y2)).scale(3.0);
                Ok(form.cbrt()?)
            }
            Form::Transformed { inner, chart } if inner.kind.is_cubic() => {
                let (base, j) = chart.pullback(&v[0], &v[1])?;
                let [b1, b2] = base;
                let xo = &j[0][0] * x + &j[0][1] * y;
                let yo = &j[1][0] * x + &j[1][1] * y;
                inner.eval_jets(&[b1, b2, xo, yo])
            }
            _ => {
                let k = self.coefficient_jets(&v[0], &v[1])?;
                let delta = k.delta().value();
                if delta.abs() < DEGENERATE_CONIC_TOL {
                    return Err(MetricError::DegenerateConic { delta });
                }
                let denom = x + &(&k.d * y);
                if denom.value().abs() < SINGULAR_DIRECTION_TOL {
                    return Err(MetricError::SingularDirection { value: denom.value() });
                }
                let num = &k.a * &(x * x) + &k.b * &(x * y) + &k.c * &(y * y);
                Ok(num.try_div(&denom)?)
            }
        }
    }

    /// Jets of `A, B, C, D` as functions of the base coordinates.
    pub fn coefficient_jets(&self, x1: &Jet, x2: &Jet) -> Result<Coefficients, MetricError> {
        let env = &self.env;
        match &self.form {
            Form::Kropina(e) | Form::Cubic(e) => Ok(Coefficients {
                a: eval_expr(&e[0], env, x1, x2)?,
                b: eval_expr(&e[1], env, x1, x2)?,
                c: eval_expr(&e[2], env, x1, x2)?,
                d: eval_expr(&e[3], env, x1, x2)?,
            }),
            Form::Canonical { phi, k } => {
                let [a, b] = gradient(phi, env, x1, x2)?;
                let order = x1.order();
                Ok(Coefficients {
                    a,
                    b,
                    c: Jet::constant(*k, order),
                    d: Jet::constant(0.0, order),
                })
            }
            Form::Parabolic { sigma } => {
                let a = parabolic::a_jet(sigma, env, x1, x2)?;
                let order = x1.order();
                Ok(Coefficients {
                    b: a.scale(2.0),
                    a: &a * &a,
                    c: Jet::constant(1.0, order),
                    d: Jet::constant(0.0, order),
                })
            }
            Form::Transformed { inner, chart } => {
                if inner.kind.is_cubic() {
                    return Err(MetricError::WrongFamily {
                        op: "coefficients of a transformed metric",
                        kind: inner.kind,
                    });
                }
                let (base, j) = chart.pullback(x1, x2)?;
                let k = inner.coefficient_jets(&base[0], &base[1])?;
                // Numerator Q̄ = JᵀQJ, denominator b̄ = Jᵀ(1, D); rescale so b̄₁ = 1.
                let q = [
                    [k.a.clone(), k.b.scale(0.5)],
                    [k.b.scale(0.5), k.c.clone()],
                ];
                let lin = [&j[0][0] + &(&k.d * &j[1][0]), &j[0][1] + &(&k.d * &j[1][1])];
                if lin[0].value().abs() < SINGULAR_DIRECTION_TOL {
                    return Err(MetricError::SingularDirection { value: lin[0].value() });
                }
                let inv = lin[0].recip()?;
                let qbar = |r: usize, s: usize| -> Jet {
                    let mut acc = Jet::constant(0.0, x1.order());
                    for m in 0..2 {
                        for n in 0..2 {
                            acc += &(&(&j[m][r] * &q[m][n]) * &j[n][s]);
                        }
                    }
                    acc
                };
                Ok(Coefficients {
                    a: &qbar(0, 0) * &inv,
                    b: (&qbar(0, 1) * &inv).scale(2.0),
                    c: &qbar(1, 1) * &inv,
                    d: &lin[1] * &inv,
                })
            }
        }
    }

    /// Coefficient values at a base point.
    pub fn coefficients(&self, x: [f64; 2]) -> Result<[f64; 4], MetricError> {
        let x1 = Jet::constant(x[0], 0);
        let x2 = Jet::constant(x[1], 0);
        Ok(self.coefficient_jets(&x1, &x2)?.values())
    }

    /// `Δ = AD² − BD + C` at a base point.
    pub fn delta_invariant(&self, x: [f64; 2]) -> Result<f64, MetricError> {
        if !self.kind.is_kropina() {
            return Err(MetricError::WrongFamily {
                op: "delta_invariant",
                kind: self.kind,
            });
        }
        let [a, b, c, d] = self.coefficients(x)?;
        Ok(a * d * d - b * d + c)
    }

    /// `R = (AB − DC)² − 4(AD − C²)(CB − D²)` at a base point.
    pub fn cubic_discriminant(&self, x: [f64; 2]) -> Result<f64, MetricError> {
        if !self.kind.is_cubic() {
            return Err(MetricError::WrongFamily {
                op: "cubic_discriminant",
                kind: self.kind,
            });
        }
        let [a, b, c, d] = self.coefficients(x)?;
        Ok((a * b - d * c).powi(2) - 4.0 * (a * d - c * c) * (c * b - d * d))
    }
}

/// `(∂φ/∂x¹, ∂φ/∂x²)` as jets of the same order as the inputs.
fn gradient(phi: &Expr, env: &ConstEnv, x1: &Jet, x2: &Jet) -> Result<[Jet; 2], MetricError> {
    let order = x1.order();
    if order >= MAX_ORDER {
        return Err(JetError::OrderTooLarge(order + 1).into());
    }
    let u1 = Jet::variable(x1.value(), Var::X1, order + 1)?;
    let u2 = Jet::variable(x2.value(), Var::X2, order + 1)?;
    let f = eval_expr(phi, env, &u1, &u2)?;
    let g = [f.derivative(Var::X1)?, f.derivative(Var::X2)?];
    let plain = is_coordinate(x1, Var::X1) && is_coordinate(x2, Var::X2);
    if plain {
        return Ok(g);
    }
    let zero = Jet::constant(0.0, order);
    let args = [x1.clone(), x2.clone(), zero.clone(), zero];
    Ok([g[0].compose(&args)?, g[1].compose(&args)?])
}

fn is_coordinate(j: &Jet, var: Var) -> bool {
    Jet::variable(j.value(), var, j.order()).is_ok_and(|v| v.coeffs() == j.coeffs())
}

/// Recovers `A, B, C, D` of a Kropina metric from values of `L` alone.
///
/// Uses `A X² + B XY + C Y² − D·(L Y) = L X` over eight directions, solved in
/// the least-squares sense.
pub fn recover_kropina_coefficients(metric: &Metric, x: [f64; 2]) -> Result<[f64; 4], MetricError> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for k in 0..8 {
        let t = -1.2 + 2.4 * (k as f64 + 0.5) / 8.0;
        let (dx, dy) = (t.cos(), t.sin());
        let l = match metric.value(&EvalPoint::from_parts(x, [dx, dy])) {
            Ok(l) => l,
            Err(MetricError::SingularDirection { .. }) => continue,
            Err(e) => return Err(e),
        };
        rows.extend_from_slice(&[dx * dx, dx * dy, dy * dy, -l * dy]);
        rhs.push(l * dx);
    }
    let n = rhs.len();
    if n < 4 {
        return Err(MetricError::SingularDirection { value: 0.0 });
    }
    let m = DMatrix::from_row_slice(n, 4, &rows);
    let b = DVector::from_vec(rhs);
    let sol = m
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| MetricError::MalformedSpec(e.to_string()))?;
    Ok([sol[0], sol[1], sol[2], sol[3]])
}
