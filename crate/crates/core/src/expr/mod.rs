//! Scalar field expressions over the base coordinates `x1`, `x2`.
//!
//! Grammar (loosest binding first):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right-associative
//! atom  := number | x1 | x2 | k1..k9 | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | exp | ln | sqrt | cbrt | abs
//! ```

mod display;
mod eval;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::autodiff::JetError;

pub use eval::eval_expr;
pub use parser::parse;

/// Number of named constants `k1..k9`.
pub const NUM_CONSTANTS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X1,
    X2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Cbrt,
    Abs,
}

impl UnaryFn {
    pub(crate) const FUNCTIONS: [UnaryFn; 7] = [
        UnaryFn::Sin,
        UnaryFn::Cos,
        UnaryFn::Exp,
        UnaryFn::Ln,
        UnaryFn::Sqrt,
        UnaryFn::Cbrt,
        UnaryFn::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Neg => "-",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Cbrt => "cbrt",
            UnaryFn::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Coord),
    /// `k1..k9`, stored zero-based.
    Const(u8),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn unary(f: UnaryFn, e: Expr) -> Self {
        Expr::Unary(f, Box::new(e))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Replaces `x1`/`x2` by the given expressions.
    pub fn substitute(&self, x1: &Expr, x2: &Expr) -> Expr {
        match self {
            Expr::Var(Coord::X1) => x1.clone(),
            Expr::Var(Coord::X2) => x2.clone(),
            Expr::Num(_) | Expr::Const(_) => self.clone(),
            Expr::Unary(f, a) => Expr::unary(*f, a.substitute(x1, x2)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(x1, x2), b.substitute(x1, x2)),
        }
    }

    /// The same field in the chart with `x1` and `x2` exchanged.
    pub fn swap_coords(&self) -> Expr {
        self.substitute(&Expr::Var(Coord::X2), &Expr::Var(Coord::X1))
    }

    /// Indices of the constants the tree references.
    pub fn constants(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Const(k) = e {
                if !out.contains(k) {
                    out.push(*k);
                }
            }
        });
        out.sort_unstable();
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Unary(_, a) => a.visit(f),
            Expr::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            _ => 1,
        }
    }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        display::write_expr(self, f)
    }
}

/// Values of the named constants `k1..k9`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstEnv {
    values: [Option<f64>; NUM_CONSTANTS],
}

impl ConstEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds `k1, k2, …` to the given values in order.
    pub fn from_values(values: &[f64]) -> Self {
        assert!(values.len() <= NUM_CONSTANTS);
        let mut env = Self::new();
        for (i, v) in values.iter().enumerate() {
            env.values[i] = Some(*v);
        }
        env
    }

    /// Binds `k{index}` (one-based, as written in expressions).
    pub fn set(&mut self, index: usize, value: f64) -> Result<(), ExprError> {
        let slot = index
            .checked_sub(1)
            .and_then(|i| self.values.get_mut(i))
            .ok_or_else(|| ExprError::UnknownIdentifier {
                name: format!("k{index}"),
                offset: 0,
            })?;
        *slot = Some(value);
        Ok(())
    }

    pub fn with(mut self, index: usize, value: f64) -> Self {
        self.set(index, value).expect("constant index in 1..=9");
        self
    }

    /// Binds a constant given by name (`"k3"`).
    pub fn set_named(&mut self, name: &str, value: f64) -> Result<(), ExprError> {
        match parse_constant_name(name) {
            Some(k) => self.set(k as usize + 1, value),
            None => Err(ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: 0,
            }),
        }
    }

    /// Value of the zero-based constant slot.
    pub fn get(&self, slot: u8) -> Option<f64> {
        self.values.get(slot as usize).copied().flatten()
    }

    pub fn bound(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (format!("k{}", i + 1), v)))
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.bound().collect()
    }
}

pub(crate) fn parse_constant_name(name: &str) -> Option<u8> {
    let digits = name.strip_prefix('k')?;
    match digits.parse::<u8>() {
        Ok(d @ 1..=9) if digits.len() == 1 => Some(d - 1),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("constant k{} is not bound", .0 + 1)]
    UnboundConstant(u8),
    #[error("x1 and x2 jets have different orders")]
    OrderMismatch,
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{op} is undefined at {value}")]
    Domain { op: &'static str, value: f64 },
}
