use super::{BinOp, Coord, ConstEnv, Expr, ExprError, UnaryFn};
use crate::autodiff::Jet;

impl Expr {
    /// True when the subtree mentions `x1` or `x2`.
    pub fn depends_on_coords(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Unary(_, a) => a.depends_on_coords(),
            Expr::Binary(_, a, b) => a.depends_on_coords() || b.depends_on_coords(),
        }
    }

    /// Plain floating-point evaluation, independent of the jet path.
    pub fn eval_scalar(&self, env: &ConstEnv, x1: f64, x2: f64) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Coord::X1) => x1,
            Expr::Var(Coord::X2) => x2,
            Expr::Const(k) => env.get(*k).ok_or(ExprError::UnboundConstant(*k))?,
            Expr::Unary(f, a) => {
                let u = a.eval_scalar(env, x1, x2)?;
                match f {
                    UnaryFn::Neg => -u,
                    UnaryFn::Sin => u.sin(),
                    UnaryFn::Cos => u.cos(),
                    UnaryFn::Exp => u.exp(),
                    UnaryFn::Ln if u > 0.0 => u.ln(),
                    UnaryFn::Sqrt if u > 0.0 => u.sqrt(),
                    UnaryFn::Cbrt if u != 0.0 => u.cbrt(),
                    UnaryFn::Abs => u.abs(),
                    _ => return Err(ExprError::Domain { op: f.name(), value: u }),
                }
            }
            Expr::Binary(op, a, b) => {
                let u = a.eval_scalar(env, x1, x2)?;
                let v = b.eval_scalar(env, x1, x2)?;
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div if v != 0.0 => u / v,
                    BinOp::Div => return Err(ExprError::Domain { op: "/", value: v }),
                    BinOp::Pow => match integer_exponent(b, env)? {
                        Some(n) => u.powi(n),
                        None if u > 0.0 => u.powf(v),
                        None => return Err(ExprError::Domain { op: "^", value: u }),
                    },
                }
            }
        })
    }
}

/// `Some(n)` when the exponent is a coordinate-free integer.
fn integer_exponent(e: &Expr, env: &ConstEnv) -> Result<Option<i32>, ExprError> {
    if e.depends_on_coords() {
        return Ok(None);
    }
    let v = e.eval_scalar(env, 0.0, 0.0)?;
    if v.fract() == 0.0 && v.abs() <= 1024.0 {
        Ok(Some(v as i32))
    } else {
        Ok(None)
    }
}

/// Jet of `expr` with `x1`, `x2` replaced by the given jets.
pub fn eval_expr(expr: &Expr, env: &ConstEnv, x1: &Jet, x2: &Jet) -> Result<Jet, ExprError> {
    if x1.order() != x2.order() {
        return Err(ExprError::OrderMismatch);
    }
    eval_jet(expr, env, x1, x2)
}

fn eval_jet(expr: &Expr, env: &ConstEnv, x1: &Jet, x2: &Jet) -> Result<Jet, ExprError> {
    let order = x1.order();
    Ok(match expr {
        Expr::Num(v) => Jet::constant(*v, order),
        Expr::Var(Coord::X1) => x1.clone(),
        Expr::Var(Coord::X2) => x2.clone(),
        Expr::Const(k) => Jet::constant(env.get(*k).ok_or(ExprError::UnboundConstant(*k))?, order),
        Expr::Unary(f, a) => {
            let u = eval_jet(a, env, x1, x2)?;
            match f {
                UnaryFn::Neg => -u,
                UnaryFn::Sin => u.sin(),
                UnaryFn::Cos => u.cos(),
                UnaryFn::Exp => u.exp(),
                UnaryFn::Ln => u.ln()?,
                UnaryFn::Sqrt => u.sqrt()?,
                UnaryFn::Cbrt => u.cbrt()?,
                UnaryFn::Abs => u.abs()?,
            }
        }
        Expr::Binary(op, a, b) => {
            let u = eval_jet(a, env, x1, x2)?;
            match op {
                BinOp::Add => u + eval_jet(b, env, x1, x2)?,
                BinOp::Sub => u - eval_jet(b, env, x1, x2)?,
                BinOp::Mul => u * eval_jet(b, env, x1, x2)?,
                BinOp::Div => u.try_div(&eval_jet(b, env, x1, x2)?)?,
                BinOp::Pow => {
                    if let Some(n) = integer_exponent(b, env)? {
                        u.powi(n)?
                    } else if !b.depends_on_coords() {
                        u.powf(b.eval_scalar(env, 0.0, 0.0)?)?
                    } else {
                        (eval_jet(b, env, x1, x2)? * u.ln()?).exp()
                    }
                }
            }
        }
    })
}
