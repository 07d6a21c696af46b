//! Coordinate changes on the base and their action on metrics.

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::autodiff::Jet;

const POLE_TOL: f64 = 1e-12;

/// A change of base coordinates `x ↦ x̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChartMap {
    /// `x̄¹ = (x¹ + k1)/(x² − k2)`, `x̄² = 1/(x² − k2)`.
    KillDRational { k1: f64, k2: f64 },
    /// `x̄¹ = x¹ + k1·x²`, `x̄² = x²`.
    KillDConstant { k1: f64 },
    /// `x̄ = k·x`.
    Scale { k: f64 },
    /// `x̄¹ = x²`, `x̄² = x¹`.
    Swap,
}

impl ChartMap {
    /// Old coordinates to new.
    pub fn forward(&self, x: [f64; 2]) -> Result<[f64; 2], MetricError> {
        let [x1, x2] = x;
        Ok(match *self {
            ChartMap::KillDRational { k1, k2 } => {
                let s = x2 - k2;
                if s.abs() < POLE_TOL {
                    return Err(MetricError::DomainSingularity { x1, x2 });
                }
                [(x1 + k1) / s, 1.0 / s]
            }
            ChartMap::KillDConstant { k1 } => [x1 + k1 * x2, x2],
            ChartMap::Scale { k } => [k * x1, k * x2],
            ChartMap::Swap => [x2, x1],
        })
    }

    /// New coordinates to old.
    pub fn inverse(&self, xb: [f64; 2]) -> Result<[f64; 2], MetricError> {
        let [y1, y2] = xb;
        Ok(match *self {
            ChartMap::KillDRational { k1, k2 } => {
                if y2.abs() < POLE_TOL {
                    return Err(MetricError::DomainSingularity { x1: y1, x2: y2 });
                }
                [y1 / y2 - k1, k2 + 1.0 / y2]
            }
            ChartMap::KillDConstant { k1 } => [y1 - k1 * y2, y2],
            ChartMap::Scale { k } => [y1 / k, y2 / k],
            ChartMap::Swap => [y2, y1],
        })
    }

    /// Old coordinates and the Jacobian `∂x/∂x̄` as jets in the new coordinates.
    pub(super) fn pullback(&self, y1: &Jet, y2: &Jet) -> Result<([Jet; 2], [[Jet; 2]; 2]), MetricError> {
        let order = y1.order();
        let c = |v: f64| Jet::constant(v, order);
        Ok(match *self {
            ChartMap::KillDRational { k1, k2 } => {
                if y2.value().abs() < POLE_TOL {
                    return Err(MetricError::DomainSingularity {
                        x1: y1.value(),
                        x2: y2.value(),
                    });
                }
                let r = y2.recip()?;
                let r2 = &r * &r;
                let x1 = y1 * &r - k1;
                let x2 = &r + k2;
                let j = [[r.clone(), -(y1 * &r2)], [c(0.0), -r2]];
                ([x1, x2], j)
            }
            ChartMap::KillDConstant { k1 } => (
                [y1 - &y2.scale(k1), y2.clone()],
                [[c(1.0), c(-k1)], [c(0.0), c(1.0)]],
            ),
            ChartMap::Scale { k } => (
                [y1.scale(1.0 / k), y2.scale(1.0 / k)],
                [[c(1.0 / k), c(0.0)], [c(0.0), c(1.0 / k)]],
            ),
            ChartMap::Swap => ([y2.clone(), y1.clone()], [[c(0.0), c(1.0)], [c(1.0), c(0.0)]]),
        })
    }
}
