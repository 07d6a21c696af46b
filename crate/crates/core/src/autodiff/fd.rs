//! Central-finite-difference oracle for checking jet derivatives.

use serde::Serialize;

use super::{Jet, MultiIndex, Var, NVARS};

/// A scalar function of `(x¹, x², X, Y)` that can be evaluated both as a
/// plain number and as a jet.
pub trait ScalarField {
    type Error;

    fn eval_jet(&self, point: [f64; NVARS], order: usize) -> Result<Jet, Self::Error>;

    fn eval(&self, point: [f64; NVARS]) -> Result<f64, Self::Error> {
        self.eval_jet(point, 0).map(|j| j.value())
    }
}

impl<E, F> ScalarField for F
where
    F: Fn([f64; NVARS], usize) -> Result<Jet, E>,
{
    type Error = E;

    fn eval_jet(&self, point: [f64; NVARS], order: usize) -> Result<Jet, E> {
        self(point, order)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    /// Fixed step per differentiation; `None` selects [`FdConfig::step_for`].
    pub step: Option<f64>,
    /// Apply one Richardson level `(4·D(h) − D(2h)) / 3`.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            step: None,
            richardson: true,
        }
    }
}

impl FdConfig {
    /// Round-off grows like `ε/h^d` while the Richardson-corrected truncation
    /// error shrinks like `h⁴`, so higher derivatives need wider steps.
    pub fn step_for(&self, degree: usize) -> f64 {
        self.step.unwrap_or(match degree {
            0 | 1 => 1e-4,
            2 => 1e-3,
            3 => 5e-3,
            _ => 1e-2,
        })
    }
}

/// Nested central differences of `f` at `point` for the multi-index `idx`.
pub fn fd_partial<E>(
    f: impl Fn([f64; NVARS]) -> Result<f64, E>,
    point: [f64; NVARS],
    idx: &MultiIndex,
    config: FdConfig,
) -> Result<f64, E> {
    let vars: Vec<usize> = idx
        .exponents()
        .iter()
        .enumerate()
        .flat_map(|(v, &e)| std::iter::repeat_n(v, e as usize))
        .collect();
    let h = config.step_for(vars.len());
    let d_h = nested(&f, point, &vars, h)?;
    if !config.richardson || vars.is_empty() {
        return Ok(d_h);
    }
    let d_2h = nested(&f, point, &vars, 2.0 * h)?;
    Ok((4.0 * d_h - d_2h) / 3.0)
}

fn nested<E>(
    f: &impl Fn([f64; NVARS]) -> Result<f64, E>,
    point: [f64; NVARS],
    vars: &[usize],
    h: f64,
) -> Result<f64, E> {
    let Some((&v, rest)) = vars.split_first() else {
        return f(point);
    };
    let mut plus = point;
    let mut minus = point;
    plus[v] += h;
    minus[v] -= h;
    Ok((nested(f, plus, rest, h)? - nested(f, minus, rest, h)?) / (2.0 * h))
}

/// Jet derivative next to its finite-difference estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdCheck {
    pub jet_value: f64,
    pub fd_value: f64,
    /// `|jet − fd| / max(|jet|, 1)`.
    pub rel_error: f64,
}

/// Compares one jet partial of `f` against the finite-difference oracle.
pub fn fd_crosscheck<F: ScalarField>(
    f: &F,
    point: [f64; NVARS],
    idx: &MultiIndex,
) -> Result<FdCheck, F::Error> {
    fd_crosscheck_with(f, point, idx, FdConfig::default())
}

pub fn fd_crosscheck_with<F: ScalarField>(
    f: &F,
    point: [f64; NVARS],
    idx: &MultiIndex,
    config: FdConfig,
) -> Result<FdCheck, F::Error> {
    let jet = f.eval_jet(point, idx.degree())?;
    let jet_value = jet.partial(idx).expect("jet order equals index degree");
    let fd_value = fd_partial(|p| f.eval(p), point, idx, config)?;
    Ok(FdCheck {
        jet_value,
        fd_value,
        rel_error: (jet_value - fd_value).abs() / jet_value.abs().max(1.0),
    })
}

/// All multi-indices of degree `1..=max_degree`.
pub fn indices_up_to(max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let order = max_degree.min(super::MAX_ORDER);
    for idx in Jet::constant(0.0, order).indices() {
        if idx.degree() >= 1 {
            out.push(*idx);
        }
    }
    out
}

/// Convenience: a field built from a closure over the four variable jets.
pub fn field_from<E>(
    f: impl Fn(&[Jet; NVARS]) -> Result<Jet, E>,
) -> impl Fn([f64; NVARS], usize) -> Result<Jet, E> {
    move |p: [f64; NVARS], order: usize| {
        let vars = Var::ALL.map(|v| Jet::variable(p[v.index()], v, order).unwrap());
        f(&vars)
    }
}
