use serde::{Deserialize, Serialize};

use super::pfun::{p_jet, projectivity_residual, PFunctions, PROJECTIVE_TOL};
use super::AnalysisError;
use crate::autodiff::{Jet, Var};
use crate::metrics::{EvalPoint, Metric};

pub type Tensor3 = [[[f64; 2]; 2]; 2];
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Which expression of the curvature tensor to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CurvatureForm {
    /// `δⁱ_j(P_kl − P_lk) + δⁱ_k P_jl − δⁱ_l P_jk + Xⁱ ∂_{Xʲ}(P_kl − P_lk)`.
    #[default]
    Corrected,
    /// The same without the `−δⁱ_l P_jk` term.
    AsPrinted,
}

fn require_projective(metric: &Metric, pt: &EvalPoint) -> Result<(), AnalysisError> {
    let r = projectivity_residual(metric, pt)?;
    let residual = r[0].abs().max(r[1].abs());
    if !(residual <= PROJECTIVE_TOL) {
        return Err(AnalysisError::NotProjectiveAtPoint { residual });
    }
    Ok(())
}

fn connection_from(f: &PFunctions, dir: [f64; 2]) -> Tensor3 {
    let mut g = [[[0.0; 2]; 2]; 2];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            for (k, v) in gij.iter_mut().enumerate() {
                *v = delta(i, j) * f.p_i[k] + delta(i, k) * f.p_i[j] + dir[i] * f.p_ij[j][k];
            }
        }
    }
    g
}

/// `Gⁱ_jk = δⁱ_j p_k + δⁱ_k p_j + Xⁱ p_jk`, valid in projective coordinates.
pub fn connection_g(metric: &Metric, pt: &EvalPoint) -> Result<Tensor3, AnalysisError> {
    require_projective(metric, pt)?;
    let f = PFunctions::from_jet(&p_jet(metric, pt, 2)?);
    Ok(connection_from(&f, pt.dir()))
}

/// `P_ij = ∂p_i/∂xʲ − p_i p_j − p_ij p` as jets two orders below `p`.
fn p_matrix(p: &Jet) -> Result<[[Jet; 2]; 2], AnalysisError> {
    let n = p.order() - 2;
    let pi = [p.derivative(Var::DirX)?, p.derivative(Var::DirY)?];
    let p0 = p.truncate(n);
    let mut out: Vec<Jet> = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            let dx = pi[i].derivative(Var::BASE[j])?;
            let prod = (&pi[i] * &pi[j]).truncate(n);
            let pij = pi[i].derivative(Var::DIR[j])?;
            out.push(dx - prod - &pij * &p0);
        }
    }
    let [a, b, c, d]: [Jet; 4] = out.try_into().expect("four entries");
    Ok([[a, b], [c, d]])
}

/// Connection, the `P` matrix and the curvature tensor at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureBundle {
    pub form: CurvatureForm,
    /// `[i][j][k] = Gⁱ_jk`.
    pub g: Tensor3,
    /// `[i][j] = P_ij`.
    pub p: [[f64; 2]; 2],
    /// `[j][k][l] = ∂P_kl/∂Xʲ`.
    pub dp_ddir: Tensor3,
    /// `[i][j][k][l] = Kⁱ_jkl`.
    pub k: Tensor4,
}

impl CurvatureBundle {
    /// `K^α_{αkl}`.
    pub fn trace(&self) -> [[f64; 2]; 2] {
        [0, 1].map(|k| [0, 1].map(|l| (0..2).map(|a| self.k[a][a][k][l]).sum()))
    }

    /// `max_kl |K^α_{αkl} − 3(P_kl − P_lk)|`.
    pub fn trace_defect(&self) -> f64 {
        let t = self.trace();
        let mut worst = 0.0f64;
        for k in 0..2 {
            for l in 0..2 {
                worst = worst.max((t[k][l] - 3.0 * (self.p[k][l] - self.p[l][k])).abs());
            }
        }
        worst
    }

    /// `|P_12 − P_21|`.
    pub fn skewness(&self) -> f64 {
        (self.p[0][1] - self.p[1][0]).abs()
    }

    pub fn max_abs_k(&self) -> f64 {
        self.k.iter().flatten().flatten().flatten().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn max_abs_p(&self) -> f64 {
        self.p.iter().flatten().fold(0.0, |a, b| a.max(b.abs()))
    }
}

pub fn curvature_bundle(metric: &Metric, pt: &EvalPoint, form: CurvatureForm) -> Result<CurvatureBundle, AnalysisError> {
    require_projective(metric, pt)?;
    let pj = p_jet(metric, pt, 3)?;
    let f = PFunctions::from_jet(&pj);
    let dir = pt.dir();
    let pm = p_matrix(&pj)?;
    let p = [0, 1].map(|i| [0, 1].map(|j| pm[i][j].value()));
    let dp_ddir = [0, 1].map(|j| [0, 1].map(|k| [0, 1].map(|l| pm[k][l].d(Var::DIR[j]))));
    let mut curv = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = delta(i, j) * (p[k][l] - p[l][k])
                        + delta(i, k) * p[j][l]
                        + dir[i] * (dp_ddir[j][k][l] - dp_ddir[j][l][k]);
                    if form == CurvatureForm::Corrected {
                        v -= delta(i, l) * p[j][k];
                    }
                    curv[i][j][k][l] = v;
                }
            }
        }
    }
    Ok(CurvatureBundle {
        form,
        g: connection_from(&f, dir),
        p,
        dp_ddir,
        k: curv,
    })
}

/// Curvature computed directly from the connection jets:
/// `∂_l Gⁱ_jk − Gᵐ_l ∂_{Xᵐ}Gⁱ_jk − (k↔l) + Gⁱ_ml Gᵐ_jk − Gⁱ_mk Gᵐ_jl`
/// with `Gⁱ_l = ∂(pXⁱ)/∂Xˡ`. Independent of the `P` formula.
pub fn berwald_curvature(metric: &Metric, pt: &EvalPoint) -> Result<Tensor4, AnalysisError> {
    require_projective(metric, pt)?;
    let pj = p_jet(metric, pt, 3)?;
    let f = PFunctions::from_jet(&pj);
    let dir = pt.dir();
    let xs = [
        Jet::variable(pt.x, Var::DirX, 1)?,
        Jet::variable(pt.y, Var::DirY, 1)?,
    ];
    let pk: Vec<Jet> = Var::DIR
        .iter()
        .map(|&v| pj.derivative(v))
        .collect::<Result<_, _>>()?;
    let mut g: Vec<Jet> = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let pjk = pk[j].derivative(Var::DIR[k])?;
                let mut t = &xs[i] * &pjk;
                if i == j {
                    t = t + pk[k].truncate(1);
                }
                if i == k {
                    t = t + pk[j].truncate(1);
                }
                g.push(t);
            }
        }
    }
    let gc = |i: usize, j: usize, k: usize| &g[4 * i + 2 * j + k];
    // Gⁱ_l = δⁱ_l p + Xⁱ p_l
    let g1 = |i: usize, l: usize| delta(i, l) * f.p + dir[i] * f.p_i[l];
    let mut h = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = gc(i, j, k).d(Var::BASE[l]) - gc(i, j, l).d(Var::BASE[k]);
                    for m in 0..2 {
                        v -= g1(m, l) * gc(i, j, k).d(Var::DIR[m]);
                        v += g1(m, k) * gc(i, j, l).d(Var::DIR[m]);
                        v += gc(i, m, l).value() * gc(m, j, k).value();
                        v -= gc(i, m, k).value() * gc(m, j, l).value();
                    }
                    h[i][j][k][l] = v;
                }
            }
        }
    }
    Ok(h)
}

/// `|P_12 − P_21|` at a point.
pub fn skewness_condition_residual(metric: &Metric, pt: &EvalPoint) -> Result<f64, AnalysisError> {
    require_projective(metric, pt)?;
    let pm = p_matrix(&p_jet(metric, pt, 2)?)?;
    Ok((pm[0][1].value() - pm[1][0].value()).abs())
}
