use std::fmt;

use super::{BinOp, Coord, Expr, UnaryFn};

// Binding strength, loosest first.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => UNARY,
        Expr::Num(_) | Expr::Var(_) | Expr::Const(_) => ATOM,
        Expr::Unary(UnaryFn::Neg, _) => UNARY,
        Expr::Unary(..) => ATOM,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        Expr::Binary(BinOp::Pow, ..) => POWER,
    }
}

fn child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

/// Prints with the minimal parentheses that re-parse to the same tree.
pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Num(v) => write!(f, "{v}"),
        Expr::Var(Coord::X1) => write!(f, "x1"),
        Expr::Var(Coord::X2) => write!(f, "x2"),
        Expr::Const(k) => write!(f, "k{}", k + 1),
        Expr::Unary(UnaryFn::Neg, a) => {
            write!(f, "-")?;
            child(a, UNARY, f)
        }
        Expr::Unary(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Binary(BinOp::Pow, a, b) => {
            child(a, ATOM, f)?;
            write!(f, "^")?;
            child(b, UNARY, f)
        }
        Expr::Binary(op, a, b) => {
            let level = precedence(e);
            child(a, level, f)?;
            match op {
                BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                _ => write!(f, "{}", op.symbol())?,
            }
            // Left-associative: an equal-precedence right operand needs parentheses.
            child(b, level + 1, f)
        }
    }
}
