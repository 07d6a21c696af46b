use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Form, Metric, MetricError};
use crate::expr::{parse, parse_constant_name, ConstEnv, Expr};

/// Metric families understood by [`make_metric`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(alias = "kropina_general")]
    KropinaGeneral,
    #[serde(alias = "kropina_canonical")]
    KropinaCanonical,
    #[serde(alias = "parabolic")]
    Parabolic,
    #[serde(alias = "minkowski_linear")]
    MinkowskiLinear,
    #[serde(alias = "minkowski_rational")]
    MinkowskiRational,
    #[serde(alias = "cubic_general")]
    CubicGeneral,
    #[serde(alias = "cubic_exceptional")]
    CubicExceptional,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::KropinaGeneral,
        MetricKind::KropinaCanonical,
        MetricKind::Parabolic,
        MetricKind::MinkowskiLinear,
        MetricKind::MinkowskiRational,
        MetricKind::CubicGeneral,
        MetricKind::CubicExceptional,
    ];

    /// Quadratic-over-linear metrics.
    pub fn is_kropina(self) -> bool {
        !self.is_cubic()
    }

    pub fn is_cubic(self) -> bool {
        matches!(self, MetricKind::CubicGeneral | MetricKind::CubicExceptional)
    }

    /// Kinds whose metric has the canonical `D = 0` shape with a potential `φ`.
    pub fn is_canonical(self) -> bool {
        matches!(
            self,
            MetricKind::KropinaCanonical | MetricKind::MinkowskiLinear | MetricKind::MinkowskiRational
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::KropinaGeneral => "KropinaGeneral",
            MetricKind::KropinaCanonical => "KropinaCanonical",
            MetricKind::Parabolic => "Parabolic",
            MetricKind::MinkowskiLinear => "MinkowskiLinear",
            MetricKind::MinkowskiRational => "MinkowskiRational",
            MetricKind::CubicGeneral => "CubicGeneral",
            MetricKind::CubicExceptional => "CubicExceptional",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Serializable description of a metric.
///
/// ```json
/// {"kind": "KropinaCanonical", "exprs": {"phi": "sin(x1)*cos(x2)"}, "constants": {"k": 1}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    #[serde(default)]
    pub exprs: BTreeMap<String, String>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            exprs: BTreeMap::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn with_expr(mut self, name: &str, source: &str) -> Self {
        self.exprs.insert(name.to_string(), source.to_string());
        self
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    fn with_numbered(mut self, values: &[f64]) -> Self {
        for (i, v) in values.iter().enumerate() {
            self.constants.insert(format!("k{}", i + 1), *v);
        }
        self
    }

    /// `L = (AX² + BXY + CY²)/(X + DY)`.
    pub fn kropina_general(a: &str, b: &str, c: &str, d: &str) -> Self {
        Self::new(MetricKind::KropinaGeneral)
            .with_expr("A", a)
            .with_expr("B", b)
            .with_expr("C", c)
            .with_expr("D", d)
    }

    /// `L = (φ₁X² + φ₂XY + Y²)/X`.
    pub fn canonical(phi: &str) -> Self {
        Self::new(MetricKind::KropinaCanonical).with_expr("phi", phi)
    }

    /// `L = (φ₁X² + φ₂XY + kY²)/X`.
    pub fn canonical_with_k(phi: &str, k: f64) -> Self {
        Self::canonical(phi).with_constant("k", k)
    }

    /// `L = (aX + Y)²/X` with `x² + x¹a + σ(a) = 0`; `σ` is written in `x1`.
    pub fn parabolic(sigma: &str) -> Self {
        Self::new(MetricKind::Parabolic).with_expr("sigma", sigma)
    }

    pub fn minkowski_linear(k: [f64; 3]) -> Self {
        Self::new(MetricKind::MinkowskiLinear).with_numbered(&k)
    }

    pub fn minkowski_rational(k: [f64; 4]) -> Self {
        Self::new(MetricKind::MinkowskiRational).with_numbered(&k)
    }

    /// `L³ = AX³ + BY³ + 3CX²Y + 3DXY²`.
    pub fn cubic_general(a: &str, b: &str, c: &str, d: &str) -> Self {
        Self::new(MetricKind::CubicGeneral)
            .with_expr("A", a)
            .with_expr("B", b)
            .with_expr("C", c)
            .with_expr("D", d)
    }

    pub fn cubic_exceptional(k: [f64; 4]) -> Self {
        Self::new(MetricKind::CubicExceptional).with_numbered(&k)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricError> {
        serde_json::from_str(text).map_err(|e| MetricError::MalformedSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

/// Potential of the rational Minkowski family, written in the chart of the potential systems.
pub const MINKOWSKI_RATIONAL_POTENTIAL: &str = "(x1^2 + k2*x1 + k3)/(k1 - x2) + k4";

/// Potential of the linear Minkowski family.
pub const MINKOWSKI_LINEAR_POTENTIAL: &str = "k1*x1 + k2*x2 + k3";

const CUBIC_EXCEPTIONAL: [&str; 4] = [
    "k1*(3*k1*x2^2 - 3*k3*x2 + k4)/(k1*x1 + k2)^6",
    "0",
    "(-2*k1*x2 + k3)/(k1*x1 + k2)^5",
    "1/(k1*x1 + k2)^4",
];

fn malformed(msg: impl Into<String>) -> MetricError {
    MetricError::MalformedSpec(msg.into())
}

struct Reader<'a> {
    spec: &'a MetricSpec,
    env: ConstEnv,
}

impl<'a> Reader<'a> {
    fn new(spec: &'a MetricSpec, allowed_exprs: &[&str], extra_constants: &[&str]) -> Result<Self, MetricError> {
        for name in spec.exprs.keys() {
            if !allowed_exprs.contains(&name.as_str()) {
                return Err(malformed(format!(
                    "{} does not take expression `{name}` (expected {})",
                    spec.kind,
                    allowed_exprs.join(", ")
                )));
            }
        }
        let mut env = ConstEnv::new();
        for (name, &value) in &spec.constants {
            if extra_constants.contains(&name.as_str()) {
                continue;
            }
            if parse_constant_name(name).is_none() {
                return Err(malformed(format!("unknown constant `{name}`")));
            }
            if !value.is_finite() {
                return Err(malformed(format!("constant `{name}` is not finite")));
            }
            env.set_named(name, value)?;
        }
        Ok(Self { spec, env })
    }

    fn expr(&self, name: &str) -> Result<Expr, MetricError> {
        let src = self
            .spec
            .exprs
            .get(name)
            .ok_or_else(|| malformed(format!("{} requires expression `{name}`", self.spec.kind)))?;
        let e = parse(src).map_err(|err| malformed(format!("expression `{name}`: {err}")))?;
        self.check_bound(&e, name)?;
        Ok(e)
    }

    fn check_bound(&self, e: &Expr, name: &str) -> Result<(), MetricError> {
        for k in e.constants() {
            if self.env.get(k).is_none() {
                return Err(malformed(format!("expression `{name}` uses unbound constant k{}", k + 1)));
            }
        }
        Ok(())
    }

    fn require_constants(&self, n: usize) -> Result<(), MetricError> {
        for i in 0..n {
            if self.env.get(i as u8).is_none() {
                return Err(malformed(format!("{} requires constant k{}", self.spec.kind, i + 1)));
            }
        }
        Ok(())
    }

    fn builtin(&self, src: &str) -> Expr {
        parse(src).expect("built-in expression parses")
    }
}

/// Validates a spec and builds the evaluable metric.
pub fn make_metric(spec: &MetricSpec) -> Result<Metric, MetricError> {
    let form = match spec.kind {
        MetricKind::KropinaGeneral | MetricKind::CubicGeneral => {
            let r = Reader::new(spec, &["A", "B", "C", "D"], &[])?;
            let coeffs = [r.expr("A")?, r.expr("B")?, r.expr("C")?, r.expr("D")?];
            let form = if spec.kind.is_cubic() {
                Form::Cubic(Box::new(coeffs))
            } else {
                Form::Kropina(Box::new(coeffs))
            };
            return Ok(Metric::from_parts(spec.kind, form, r.env, Some(spec.clone())));
        }
        MetricKind::KropinaCanonical => {
            let r = Reader::new(spec, &["phi"], &["k"])?;
            let k = spec.constants.get("k").copied().unwrap_or(1.0);
            if k == 0.0 || !k.is_finite() {
                return Err(malformed("canonical constant k must be finite and nonzero"));
            }
            (Form::Canonical { phi: r.expr("phi")?, k }, r.env)
        }
        MetricKind::Parabolic => {
            let r = Reader::new(spec, &["sigma"], &[])?;
            let sigma = r.expr("sigma")?;
            if mentions_x2(&sigma) {
                return Err(malformed("sigma is a function of one argument, written as x1"));
            }
            (Form::Parabolic { sigma }, r.env)
        }
        MetricKind::MinkowskiLinear | MetricKind::MinkowskiRational => {
            let r = Reader::new(spec, &[], &[])?;
            let (n, src) = if spec.kind == MetricKind::MinkowskiLinear {
                (3, MINKOWSKI_LINEAR_POTENTIAL)
            } else {
                (4, MINKOWSKI_RATIONAL_POTENTIAL)
            };
            r.require_constants(n)?;
            // The potential systems live in the chart with x¹ and x² exchanged.
            let phi = r.builtin(src).swap_coords();
            (Form::Canonical { phi, k: 1.0 }, r.env)
        }
        MetricKind::CubicExceptional => {
            let r = Reader::new(spec, &[], &[])?;
            r.require_constants(4)?;
            let coeffs = CUBIC_EXCEPTIONAL.map(|s| r.builtin(s));
            (Form::Cubic(Box::new(coeffs)), r.env)
        }
    };
    let (form, env) = form;
    Ok(Metric::from_parts(spec.kind, form, env, Some(spec.clone())))
}

fn mentions_x2(e: &Expr) -> bool {
    use crate::expr::Coord;
    match e {
        Expr::Var(Coord::X2) => true,
        Expr::Unary(_, a) => mentions_x2(a),
        Expr::Binary(_, a, b) => mentions_x2(a) || mentions_x2(b),
        _ => false,
    }
}
