use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, EquationResidual};
use crate::metrics::EvalPoint;

/// Rectangle of base points times a fan of unit directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    pub dirs: usize,
    /// Seed for per-point rotation of the direction fan; `None` uses half-step offsets.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self::new([-1.0, 1.0], [-1.0, 1.0])
    }
}

impl Grid {
    pub fn new(x1: [f64; 2], x2: [f64; 2]) -> Self {
        Self {
            x1,
            x2,
            n1: 11,
            n2: 11,
            dirs: 16,
            seed: None,
        }
    }

    pub fn with_counts(mut self, n1: usize, n2: usize) -> Self {
        self.n1 = n1;
        self.n2 = n2;
        self
    }

    pub fn with_dirs(mut self, dirs: usize) -> Self {
        self.dirs = dirs;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::InvalidGrid(m.to_string()));
        if self.n1 < 2 || self.n2 < 2 {
            return bad("grid counts must be at least 2");
        }
        if self.dirs == 0 {
            return bad("direction count must be positive");
        }
        let ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ok(self.x1) || !ok(self.x2) {
            return bad("grid rectangle must be finite and nondegenerate");
        }
        Ok(())
    }

    fn linspace(r: [f64; 2], n: usize, i: usize) -> f64 {
        r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64
    }

    /// Base points, `x²` varying fastest.
    pub fn base_points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.n1 * self.n2);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                out.push([Self::linspace(self.x1, self.n1, i), Self::linspace(self.x2, self.n2, j)]);
            }
        }
        out
    }

    /// Unit directions at angles `(k + u)·2π/dirs`.
    fn fan(&self, u: f64) -> Vec<[f64; 2]> {
        (0..self.dirs)
            .map(|k| {
                let t = (k as f64 + u) * TAU / self.dirs as f64;
                [t.cos(), t.sin()]
            })
            .collect()
    }

    /// Every base point paired with every direction.
    pub fn samples(&self) -> Vec<EvalPoint> {
        let base = self.base_points();
        let mut rng = self.seed.map(ChaCha8Rng::seed_from_u64);
        let mut out = Vec::with_capacity(base.len() * self.dirs);
        for b in base {
            let u = rng.as_mut().map_or(0.5, |r| r.random::<f64>());
            for d in self.fan(u) {
                out.push(EvalPoint::from_parts(b, d));
            }
        }
        out
    }

    pub fn info(&self) -> GridInfo {
        GridInfo {
            x1: self.x1,
            x2: self.x2,
            n1: self.n1,
            n2: self.n2,
            dirs: self.dirs,
            seed: self.seed,
            evaluated: 0,
            excluded: 0,
        }
    }
}

/// Grid description stored in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    pub dirs: usize,
    pub seed: Option<u64>,
    pub evaluated: usize,
    pub excluded: usize,
}

pub(crate) struct Scan {
    pub equations: Vec<EquationResidual>,
    pub evaluated: usize,
    pub excluded: usize,
}

/// Evaluates `f` at every sample in parallel and keeps, per equation, the
/// largest `|residual|` with the earliest sample on ties.
///
/// `f` returns `None` for samples that must be skipped (singular sets).
pub(crate) fn scan<T, F>(samples: &[T], labels: &[&str], point: impl Fn(&T) -> Vec<f64> + Sync, f: F) -> Result<Scan, AnalysisError>
where
    T: Sync,
    F: Fn(&T) -> Result<Option<Vec<f64>>, AnalysisError> + Sync,
{
    let results: Vec<Result<Option<Vec<f64>>, AnalysisError>> = samples.par_iter().map(&f).collect();
    let mut equations: Vec<EquationResidual> = labels
        .iter()
        .map(|l| EquationResidual {
            label: l.to_string(),
            max_residual: 0.0,
            at_point: Vec::new(),
        })
        .collect();
    let mut evaluated = 0;
    let mut excluded = 0;
    for (sample, r) in samples.iter().zip(results) {
        let Some(values) = r? else {
            excluded += 1;
            continue;
        };
        evaluated += 1;
        debug_assert_eq!(values.len(), labels.len());
        for (eq, v) in equations.iter_mut().zip(values) {
            let v = v.abs();
            let better = match (v.is_nan(), eq.max_residual.is_nan()) {
                (true, false) => true,
                (false, false) => v > eq.max_residual,
                _ => false,
            };
            if better || eq.at_point.is_empty() {
                eq.max_residual = v;
                eq.at_point = point(sample);
            }
        }
    }
    Ok(Scan {
        equations,
        evaluated,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_bounds() {
        let g = Grid::new([0.0, 1.0], [2.0, 3.0]);
        let b = g.base_points();
        assert_eq!(b.len(), 121);
        assert_eq!(b[0], [0.0, 2.0]);
        assert_eq!(b[120], [1.0, 3.0]);
        assert_eq!(g.samples().len(), 121 * 16);
    }

    #[test]
    fn unit_directions_avoid_axes_by_default() {
        let g = Grid::default();
        for s in g.samples() {
            assert!((s.x.hypot(s.y) - 1.0).abs() < 1e-15);
            assert!(s.x.abs() > 0.09);
        }
    }

    #[test]
    fn seeded_jitter_is_reproducible() {
        let g = Grid::default().with_seed(Some(42));
        assert_eq!(g.samples(), g.samples());
        assert_ne!(g.samples(), Grid::default().samples());
    }

    #[test]
    fn validation() {
        assert!(Grid::default().with_counts(1, 5).validate().is_err());
        assert!(Grid::new([1.0, 1.0], [0.0, 1.0]).validate().is_err());
        assert!(Grid::default().validate().is_ok());
    }

    #[test]
    fn scan_keeps_first_maximum() {
        let samples = [1.0, -3.0, 3.0, 2.0];
        let s = scan(&samples, &["a"], |x| vec![*x], |x| Ok(Some(vec![*x]))).unwrap();
        assert_eq!(s.equations[0].max_residual, 3.0);
        assert_eq!(s.equations[0].at_point, vec![-3.0]);
        assert_eq!(s.evaluated, 4);
    }
}
