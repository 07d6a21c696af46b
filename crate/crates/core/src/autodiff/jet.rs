use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use super::layout::{layout, Layout};
use super::{JetError, MultiIndex, Var, MAX_ORDER, NVARS};

/// Truncated multivariate Taylor expansion about a point.
///
/// `coeffs[k]` is the Taylor coefficient of the k-th monomial of the
/// graded-lexicographic layout, i.e. the partial derivative divided by the
/// product of factorials of its exponents.
///
/// The `std::ops` operators panic when the operand orders differ; use
/// [`jet_apply`] for a checked entry point.
#[derive(Clone, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.layout();
        let mut map = f.debug_map();
        for (idx, c) in l.indices().iter().zip(&self.coeffs) {
            if *c != 0.0 {
                map.entry(&idx.exponents(), c);
            }
        }
        map.finish()
    }
}

impl Jet {
    fn layout(&self) -> &'static Layout {
        layout(self.order)
    }

    fn check_order(order: usize) -> Result<(), JetError> {
        if order > MAX_ORDER {
            Err(JetError::OrderTooLarge(order))
        } else {
            Ok(())
        }
    }

    fn zeros(order: usize) -> Self {
        Self {
            order,
            coeffs: vec![0.0; layout(order).len()],
        }
    }

    /// Constant function. Panics if `order > MAX_ORDER`.
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} > {MAX_ORDER}");
        let mut j = Self::zeros(order);
        j.coeffs[0] = value;
        j
    }

    /// Coordinate function of `var` expanded at `value`.
    pub fn variable(value: f64, var: Var, order: usize) -> Result<Self, JetError> {
        Self::check_order(order)?;
        let mut j = Self::zeros(order);
        j.coeffs[0] = value;
        if order >= 1 {
            let pos = j.layout().position(&MultiIndex::unit(var)).unwrap();
            j.coeffs[pos] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from raw Taylor coefficients in layout order.
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        Self::check_order(order)?;
        assert_eq!(coeffs.len(), layout(order).len(), "coefficient count");
        Ok(Self { order, coeffs })
    }

    /// Builds a jet by evaluating `f` on every multi-index of the layout.
    pub fn from_fn(order: usize, mut f: impl FnMut(&MultiIndex) -> f64) -> Result<Self, JetError> {
        Self::check_order(order)?;
        let coeffs = layout(order).indices().iter().map(&mut f).collect();
        Ok(Self { order, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices in the same order as [`Jet::coeffs`].
    pub fn indices(&self) -> &'static [MultiIndex] {
        self.layout().indices()
    }

    /// Taylor coefficient at `idx`; zero beyond the order.
    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.layout()
            .position(idx)
            .map_or(0.0, |pos| self.coeffs[pos])
    }

    /// Partial derivative value at the expansion point.
    pub fn partial(&self, idx: &MultiIndex) -> Result<f64, JetError> {
        let pos = self
            .layout()
            .position(idx)
            .ok_or(JetError::DegreeExceedsOrder {
                degree: idx.degree(),
                order: self.order,
            })?;
        Ok(self.coeffs[pos] * idx.factorial())
    }

    /// `∂f/∂var` at the expansion point.
    pub fn d(&self, var: Var) -> f64 {
        self.partial(&MultiIndex::unit(var)).unwrap_or(0.0)
    }

    /// `∂²f/∂a∂b` at the expansion point.
    pub fn d2(&self, a: Var, b: Var) -> f64 {
        self.partial(&MultiIndex::of(&[a, b])).unwrap_or(0.0)
    }

    /// `∂³f/∂a∂b∂c` at the expansion point.
    pub fn d3(&self, a: Var, b: Var, c: Var) -> f64 {
        self.partial(&MultiIndex::of(&[a, b, c])).unwrap_or(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Jet of `∂f/∂var`, one order lower.
    pub fn derivative(&self, var: Var) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::NoDerivative);
        }
        let unit = MultiIndex::unit(var);
        let src = self.layout();
        Jet::from_fn(self.order - 1, |idx| {
            let up = idx.add(&unit);
            let pos = src.position(&up).unwrap();
            self.coeffs[pos] * f64::from(up.exponents()[var.index()])
        })
    }

    /// Drops every term above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order, "cannot raise jet order by truncation");
        let n = layout(order).len();
        Jet {
            order,
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    /// The jet with its value part removed.
    fn nilpotent(&self) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        h
    }

    fn same_order(&self, other: &Jet) -> Result<(), JetError> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(JetError::OrderMismatch(self.order, other.order))
        }
    }

    fn mul_into(&self, other: &Jet, out: &mut [f64]) {
        out.fill(0.0);
        for &(i, j, k) in self.layout().products() {
            out[k as usize] += self.coeffs[i as usize] * other.coeffs[j as usize];
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `Σ_k taylor[k]·h^k` with `h = self − value`: composition with a
    /// univariate function whose Taylor coefficients at the value part are
    /// `taylor`.
    fn compose_series(&self, taylor: &[f64]) -> Jet {
        debug_assert_eq!(taylor.len(), self.order + 1);
        let h = self.nilpotent();
        let mut acc = Jet::constant(taylor[self.order], self.order);
        let mut buf = vec![0.0; acc.coeffs.len()];
        for &c in taylor[..self.order].iter().rev() {
            acc.mul_into(&h, &mut buf);
            std::mem::swap(&mut acc.coeffs, &mut buf);
            acc.coeffs[0] += c;
        }
        acc
    }

    /// Taylor coefficients of `u ↦ u^r` about `u0`, scaled from `c0 = u0^r`.
    fn power_series(u0: f64, c0: f64, r: f64, order: usize) -> Vec<f64> {
        let mut t = Vec::with_capacity(order + 1);
        t.push(c0);
        for k in 1..=order {
            let prev = t[k - 1];
            t.push(prev * (r - (k as f64) + 1.0) / (k as f64 * u0));
        }
        t
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let u0 = self.value();
        if u0 == 0.0 {
            return Err(JetError::DivisionByZeroValue);
        }
        Ok(self.compose_series(&Self::power_series(u0, 1.0 / u0, -1.0, self.order)))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_order(other)?;
        Ok(self * &other.recip()?)
    }

    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(1.0, self.order);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// `u^r` for real `r`; the value part must be positive.
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        let u0 = self.value();
        if !(u0 > 0.0) {
            return Err(JetError::DomainError { op: "pow", value: u0 });
        }
        Ok(self.compose_series(&Self::power_series(u0, u0.powf(r), r, self.order)))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let u0 = self.value();
        if !(u0 > 0.0) {
            return Err(JetError::DomainError { op: "sqrt", value: u0 });
        }
        Ok(self.compose_series(&Self::power_series(u0, u0.sqrt(), 0.5, self.order)))
    }

    /// Real (sign-preserving) cube root; defined for every nonzero value part.
    pub fn cbrt(&self) -> Result<Jet, JetError> {
        let u0 = self.value();
        if u0 == 0.0 || !u0.is_finite() {
            return Err(JetError::DomainError { op: "cbrt", value: u0 });
        }
        Ok(self.compose_series(&Self::power_series(u0, u0.cbrt(), 1.0 / 3.0, self.order)))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let u0 = self.value();
        if !(u0 > 0.0) {
            return Err(JetError::DomainError { op: "ln", value: u0 });
        }
        let mut t = vec![u0.ln()];
        let mut pow = 1.0;
        for k in 1..=self.order {
            pow *= u0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (k as f64 * pow));
        }
        Ok(self.compose_series(&t))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for k in 0..=self.order {
            if k > 0 {
                fact *= k as f64;
            }
            t.push(e / fact);
        }
        self.compose_series(&t)
    }

    /// Taylor coefficients of sin/cos: derivatives cycle with period four.
    fn trig_series(&self, shift: usize) -> Vec<f64> {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut fact = 1.0;
        (0..=self.order)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                cycle[(k + shift) % 4] / fact
            })
            .collect()
    }

    pub fn sin(&self) -> Jet {
        self.compose_series(&self.trig_series(0))
    }

    pub fn cos(&self) -> Jet {
        self.compose_series(&self.trig_series(1))
    }

    /// `|u|`; not differentiable where the value part vanishes.
    pub fn abs(&self) -> Result<Jet, JetError> {
        let u0 = self.value();
        if u0 > 0.0 {
            Ok(self.clone())
        } else if u0 < 0.0 {
            Ok(-self)
        } else if self.order == 0 {
            Ok(self.clone())
        } else {
            Err(JetError::DomainError { op: "abs", value: u0 })
        }
    }

    /// Substitutes jets for the four variables of `self`.
    ///
    /// `args[v]` is the jet of the v-th variable as a function of new
    /// variables; its value part must equal the expansion point coordinate
    /// of `self` (only the increments `args[v] − value` enter). All
    /// arguments share the order of `self`.
    pub fn compose(&self, args: &[Jet; NVARS]) -> Result<Jet, JetError> {
        for a in args {
            self.same_order(a)?;
        }
        let order = self.order;
        // powers[v][e] = (args[v] − value)^e
        let powers: Vec<Vec<Jet>> = args
            .iter()
            .map(|a| {
                let h = a.nilpotent();
                let mut p = vec![Jet::constant(1.0, order)];
                for e in 1..=order {
                    let next = &p[e - 1] * &h;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Jet::zeros(order);
        for (idx, &c) in self.indices().iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            let e = idx.exponents();
            let mut term = powers[0][e[0] as usize].scale(c);
            for v in 1..NVARS {
                if e[v] > 0 {
                    term = &term * &powers[v][e[v] as usize];
                }
            }
            out += &term;
        }
        Ok(out)
    }

    /// Largest absolute coefficient difference over degrees `<= degree`.
    pub fn max_abs_diff(&self, other: &Jet, degree: usize) -> f64 {
        let n = self
            .layout()
            .prefix_len(degree)
            .min(other.layout().prefix_len(degree));
        self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

macro_rules! binary_ops {
    ($($trait:ident $method:ident $op:tt),*) => {$(
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                assert_eq!(self.order, rhs.order, "jet order mismatch");
                Jet {
                    order: self.order,
                    coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                &self $op &rhs
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                &self $op rhs
            }
        }
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let mut out = self.clone();
                out.coeffs[0] = out.coeffs[0] $op rhs;
                out
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                &self $op rhs
            }
        }
    )*};
}

binary_ops!(Add add +, Sub sub -);

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        assert_eq!(self.order, rhs.order, "jet order mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        assert_eq!(self.order, rhs.order, "jet order mismatch");
        let mut out = Jet::zeros(self.order);
        self.mul_into(rhs, &mut out.coeffs);
        out
    }
}

impl Mul<Jet> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Mul<&Jet> for Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        &self * rhs
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Elementary operations accepted by [`jet_apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowInt(i32),
    PowReal(f64),
    Sqrt,
    Cbrt,
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
}

impl JetOp {
    fn arity(self) -> usize {
        match self {
            JetOp::Add | JetOp::Sub | JetOp::Mul | JetOp::Div => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            JetOp::Add => "add",
            JetOp::Sub => "sub",
            JetOp::Mul => "mul",
            JetOp::Div => "div",
            JetOp::Neg => "neg",
            JetOp::PowInt(_) => "pow_int",
            JetOp::PowReal(_) => "pow_real",
            JetOp::Sqrt => "sqrt",
            JetOp::Cbrt => "cbrt",
            JetOp::Sin => "sin",
            JetOp::Cos => "cos",
            JetOp::Exp => "exp",
            JetOp::Ln => "ln",
            JetOp::Abs => "abs",
        }
    }
}

/// Checked application of an elementary operation.
pub fn jet_apply(op: JetOp, args: &[Jet]) -> Result<Jet, JetError> {
    if args.len() != op.arity() {
        return Err(JetError::Arity {
            op: op.name(),
            expected: op.arity(),
            got: args.len(),
        });
    }
    if let [a, b] = args {
        a.same_order(b)?;
    }
    let a = &args[0];
    match op {
        JetOp::Add => Ok(a + &args[1]),
        JetOp::Sub => Ok(a - &args[1]),
        JetOp::Mul => Ok(a * &args[1]),
        JetOp::Div => a.try_div(&args[1]),
        JetOp::Neg => Ok(-a),
        JetOp::PowInt(n) => a.powi(n),
        JetOp::PowReal(r) => a.powf(r),
        JetOp::Sqrt => a.sqrt(),
        JetOp::Cbrt => a.cbrt(),
        JetOp::Sin => Ok(a.sin()),
        JetOp::Cos => Ok(a.cos()),
        JetOp::Exp => Ok(a.exp()),
        JetOp::Ln => a.ln(),
        JetOp::Abs => a.abs(),
    }
}
