//! Truncated Taylor jets over the four variables `(x¹, x², X, Y)`.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar function about a
//! point, up to a fixed total degree. Arithmetic and the elementary
//! functions propagate the coefficients exactly through that degree, so
//! every mixed partial derivative of a composed expression is available
//! from a single evaluation.

mod fd;
mod jet;
mod layout;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fd::{
    fd_crosscheck, fd_crosscheck_with, fd_partial, field_from, indices_up_to, FdCheck, FdConfig,
    ScalarField,
};
pub use jet::{jet_apply, Jet, JetOp};

/// Number of jet variables: the base coordinates and the direction components.
pub const NVARS: usize = 4;

/// Highest supported jet order.
pub const MAX_ORDER: usize = 8;

/// Order that covers every formula in the toolkit (curvature needs four).
pub const DEFAULT_ORDER: usize = 4;

/// Jet variable slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X1 = 0,
    X2 = 1,
    /// First direction component `X`.
    DirX = 2,
    /// Second direction component `Y`.
    DirY = 3,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::X1, Var::X2, Var::DirX, Var::DirY];
    /// The two base coordinates, in order.
    pub const BASE: [Var; 2] = [Var::X1, Var::X2];
    /// The two direction components, in order.
    pub const DIR: [Var; 2] = [Var::DirX, Var::DirY];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self, JetError> {
        Var::ALL
            .get(index)
            .copied()
            .ok_or(JetError::VariableOutOfRange(index))
    }
}

/// Exponents of a monomial in `(x¹, x², X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex([u8; NVARS]);

impl MultiIndex {
    pub const fn new(exponents: [u8; NVARS]) -> Self {
        Self(exponents)
    }

    pub const fn zero() -> Self {
        Self([0; NVARS])
    }

    /// Unit index `e_var`.
    pub fn unit(var: Var) -> Self {
        let mut e = [0; NVARS];
        e[var.index()] = 1;
        Self(e)
    }

    /// Index of the mixed partial obtained by differentiating once by each listed variable.
    pub fn of(vars: &[Var]) -> Self {
        let mut e = [0u8; NVARS];
        for v in vars {
            e[v.index()] += 1;
        }
        Self(e)
    }

    pub fn exponents(&self) -> [u8; NVARS] {
        self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0) {
            *a += b;
        }
        Self(e)
    }

    /// Product of the factorials of the exponents.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&e| (1..=e as u32).map(f64::from).product::<f64>())
            .product()
    }

    /// True when the index only involves the base coordinates.
    pub fn is_base_only(&self) -> bool {
        self.0[2] == 0 && self.0[3] == 0
    }
}

impl From<[u8; NVARS]> for MultiIndex {
    fn from(e: [u8; NVARS]) -> Self {
        Self(e)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {0} out of range 0..3")]
    VariableOutOfRange(usize),
    #[error("jet order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("jets of orders {0} and {1} cannot be combined")]
    OrderMismatch(usize, usize),
    #[error("division by a jet whose value part is zero")]
    DivisionByZeroValue,
    #[error("{op} is undefined at value {value}")]
    DomainError { op: &'static str, value: f64 },
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    DegreeExceedsOrder { degree: usize, order: usize },
    #[error("{op} expects {expected} argument(s), got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cannot differentiate a jet of order 0")]
    NoDerivative,
}

/// Coordinate jet at `value`: value part `value`, unit slope in `var`.
pub fn jet_variable(value: f64, var: usize, order: usize) -> Result<Jet, JetError> {
    Jet::variable(value, Var::from_index(var)?, order)
}

/// `∂^|idx| f / ∂v^idx` read off a jet.
pub fn partial(jet: &Jet, idx: &MultiIndex) -> Result<f64, JetError> {
    jet.partial(idx)
}
