//! The acceptance matrix: twelve numbered checks plus optional corpus rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use kropina_core::analysis::{
    constant_curvature_residuals, cubic_exceptional_check, cubic_system_alpha_residuals, curvature_bundle,
    flow_line_straightness, kill_d_residuals, minkowski_residuals, p_functions, parabolic_residuals,
    projectivity_residuals, system_beta_residuals, system_i_residuals, AnalysisError, CurvatureForm, DCase,
    EquationSet, Grid,
};
use kropina_core::autodiff::{fd_partial, FdConfig, Jet, MultiIndex, Var};
use kropina_core::expr::{eval_expr, parse, ConstEnv};
use kropina_core::geodesics::{integrate_geodesic, spray};
use kropina_core::metrics::{make_metric, solve_parabolic_a, EvalPoint, Metric, MetricSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{classify, Thresholds};
use crate::corpus::{
    non_projective, projective_members, random_potentials, CorpusEntry, AD_EXPRESSIONS, GENERIC_POTENTIALS,
};

pub const DEFAULT_SEED: u64 = 42;

/// Result of one row of the matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub pass: bool,
    pub detail: String,
    /// Measured quantities, keyed by name.
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub rows: Vec<Outcome>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn table(&self) -> String {
        let mut s = format!("seed {}\n", self.seed);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4}  {}  {:<34} {}",
                r.id,
                if r.pass { "PASS" } else { "FAIL" },
                r.title,
                r.detail
            );
        }
        s
    }
}

type Check = Result<(bool, String, BTreeMap<String, f64>), String>;

fn outcome(id: u32, title: &str, check: Check) -> Outcome {
    let (pass, detail, values) = check.unwrap_or_else(|e| (false, format!("error: {e}"), BTreeMap::new()));
    Outcome {
        id: id.to_string(),
        title: title.to_string(),
        pass,
        detail,
        values,
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn metric(spec: &MetricSpec) -> Result<Metric, String> {
    make_metric(spec).map_err(err)
}

fn main_grid(seed: u64) -> Grid {
    Grid::new([0.2, 0.8], [0.2, 0.8]).with_seed(Some(seed))
}

fn values(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub const TITLES: [&str; 12] = [
    "AD soundness",
    "projectivity theorem",
    "converse witness",
    "system equivalence",
    "D-classification",
    "Minkowski classification",
    "parabolic branch",
    "curvature consistency",
    "constant-curvature theorem",
    "cubic branch",
    "spray cross-check",
    "determinism",
];

/// Jet partials of degree ≤ 3 against central differences.
pub fn ad_soundness(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xad);
    let env = ConstEnv::new();
    let mut worst2 = 0.0f64;
    let mut worst3 = 0.0f64;
    let mut count = 0usize;
    for src in AD_EXPRESSIONS {
        let e = parse(src).map_err(err)?;
        for _ in 0..3 {
            let (x1, x2) = (rng.random_range(0.25..0.75), rng.random_range(0.25..0.75));
            let jet = eval_expr(
                &e,
                &env,
                &Jet::variable(x1, Var::X1, 3).map_err(err)?,
                &Jet::variable(x2, Var::X2, 3).map_err(err)?,
            )
            .map_err(err)?;
            for deg in 1..=3u8 {
                for i in 0..=deg {
                    let idx = MultiIndex::new([i, deg - i, 0, 0]);
                    let j = jet.partial(&idx).map_err(err)?;
                    let fd = fd_partial(|p| e.eval_scalar(&env, p[0], p[1]), [x1, x2, 0.0, 0.0], &idx, FdConfig::default())
                        .map_err(err)?;
                    let rel = (j - fd).abs() / j.abs().max(1.0);
                    if deg <= 2 {
                        worst2 = worst2.max(rel);
                    } else {
                        worst3 = worst3.max(rel);
                    }
                    count += 1;
                }
            }
        }
    }
    let pass = worst2 < 1e-5 && worst3 < 1e-3;
    Ok((
        pass,
        format!("{count} partials; max rel err {worst2:.2e} (deg<=2), {worst3:.2e} (deg 3)"),
        values(&[("max_rel_err_deg2", worst2), ("max_rel_err_deg3", worst3)]),
    ))
}

/// Canonical metrics from random potentials: grid projectivity and straight geodesics.
pub fn projectivity_theorem(seed: u64) -> Check {
    let grid = main_grid(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let mut worst = 0.0f64;
    let mut worst_dev = 0.0f64;
    let mut incomplete = 0;
    for phi in random_potentials(seed, 20) {
        let m = metric(&MetricSpec::canonical(&phi))?;
        worst = worst.max(projectivity_residuals(&m, &grid).map_err(err)?.max_residual());
        let a: f64 = rng.random_range(-0.6..0.6);
        let tr = integrate_geodesic(&m, [0.5, 0.5], [a.cos(), a.sin()], 0.3, 200, None).map_err(err)?;
        match (tr.completed(), tr.deviation) {
            (true, Some(d)) => worst_dev = worst_dev.max(d),
            _ => incomplete += 1,
        }
    }
    let pass = worst < 1e-8 && worst_dev < 1e-6 && incomplete == 0;
    Ok((
        pass,
        format!("20 metrics; max projectivity residual {worst:.2e}; max deviation {worst_dev:.2e}; {incomplete} incomplete"),
        values(&[("max_residual", worst), ("max_deviation", worst_dev)]),
    ))
}

/// Largest chord deviation over a fan of geodesics from one start.
fn bent_geodesic(m: &Metric) -> Result<f64, String> {
    let mut best = 0.0f64;
    for a in [0.0f64, 0.5, -0.5, 1.0] {
        let tr = integrate_geodesic(m, [0.5, 0.5], [a.cos(), a.sin()], 1.0, 400, None).map_err(err)?;
        if let Some(d) = tr.deviation {
            best = best.max(d);
        }
    }
    Ok(best)
}

/// Non-projective Kropina metrics are caught both ways.
pub fn converse_witness(seed: u64) -> Check {
    let grid = main_grid(seed);
    let mut min_res = f64::INFINITY;
    let mut min_dev = f64::INFINITY;
    for spec in non_projective().iter().take(5) {
        let m = metric(spec)?;
        min_res = min_res.min(projectivity_residuals(&m, &grid).map_err(err)?.max_residual());
        min_dev = min_dev.min(bent_geodesic(&m)?);
    }
    let pass = min_res > 1e-3 && min_dev > 1e-3;
    Ok((
        pass,
        format!("5 metrics; smallest max residual {min_res:.2e}; smallest geodesic deviation {min_dev:.2e}"),
        values(&[("min_max_residual", min_res), ("min_deviation", min_dev)]),
    ))
}

/// Residual below which a grid report counts as satisfied in the
/// equivalence check.
pub const EQUIVALENCE_THRESHOLD: f64 = 1e-8;

/// Grid projectivity and system I give the same verdict.
pub fn system_equivalence(seed: u64) -> Check {
    let grid = Grid::new([0.2, 0.6], [-0.9, -0.5]).with_counts(6, 6).with_dirs(12).with_seed(Some(seed));
    let mut disagreements = Vec::new();
    let mut worst_pass = 0.0f64;
    let mut best_fail = f64::INFINITY;
    let pass_members = projective_members(seed);
    let fail_members = non_projective();
    let cases = pass_members
        .iter()
        .map(|mem| {
            let m = metric(&mem.spec)?;
            Ok((true, mem.name.clone(), mem.chart.map_or(m.clone(), |c| m.transformed(c))))
        })
        .chain(fail_members.iter().enumerate().map(|(i, s)| Ok((false, format!("non-projective-{i}"), metric(s)?))))
        .collect::<Result<Vec<_>, String>>()?;
    for (expected, name, m) in &cases {
        let six = projectivity_residuals(m, &grid).map_err(err)?.max_residual();
        let sys = system_i_residuals(m, &grid, EquationSet::Corrected).map_err(err)?;
        let sys_max = sys
            .equations
            .iter()
            .filter(|e| e.label != "I-D")
            .map(|e| e.max_residual)
            .fold(0.0, f64::max);
        let (v6, vi) = (six < EQUIVALENCE_THRESHOLD, sys_max < EQUIVALENCE_THRESHOLD);
        if v6 != vi || v6 != *expected {
            disagreements.push(name.clone());
        }
        if *expected {
            worst_pass = worst_pass.max(six).max(sys_max);
        } else {
            best_fail = best_fail.min(six).min(sys_max);
        }
    }
    let pass = disagreements.is_empty();
    let detail = format!(
        "{}+{} metrics; projective max {worst_pass:.2e}; non-projective min {best_fail:.2e}{}",
        pass_members.len(),
        fail_members.len(),
        if pass { String::new() } else { format!("; disagree: {}", disagreements.join(", ")) }
    );
    Ok((pass, detail, values(&[("projective_max", worst_pass), ("non_projective_min", best_fail)])))
}

/// The two admissible shapes of `D`: the β system, straight singular flow lines
/// and removal by a change of coordinates.
pub fn d_classification(seed: u64) -> Check {
    let grid = main_grid(seed);
    let kill_grid = Grid::new([0.2, 0.8], [0.2, 0.8]).with_counts(5, 4);
    let env = ConstEnv::new();
    let mut cases: Vec<(String, DCase)> = [(1.0, 2.0), (-0.5, 3.0), (0.3, -1.5)]
        .iter()
        .map(|&(k1, k2)| (format!("(x1 + ({k1}))/(({k2}) - x2)"), DCase::Rational { k1, k2 }))
        .collect();
    cases.extend([0.5, -1.2].map(|k1| (format!("({k1})"), DCase::Constant { k1 })));
    let (mut beta, mut flow, mut kill) = (0.0f64, 0.0f64, 0.0f64);
    let mut kill_points = usize::MAX;
    for (d, case) in &cases {
        let e = parse(d).map_err(err)?;
        beta = beta.max(system_beta_residuals(&e, &env, &grid).map_err(err)?.max_residual());
        let m = metric(&MetricSpec::kropina_general("1 + 0.2*x1", "0.1*x2", "2", d))?;
        flow = flow.max(flow_line_straightness(&m, [0.5, 0.5], 0.5, 200).map_err(err)?);
        let r = kill_d_residuals(&m, *case, &kill_grid).map_err(err)?;
        kill = kill.max(r.max_residual());
        kill_points = kill_points.min(r.grid.evaluated);
    }
    let pass = beta < 1e-10 && flow < 1e-8 && kill < 1e-9 && kill_points >= 20;
    Ok((
        pass,
        format!("5 fields; beta {beta:.2e}; flow-line deviation {flow:.2e}; |D̄| {kill:.2e} at {kill_points} points"),
        values(&[("beta", beta), ("flow_deviation", flow), ("kill_d", kill)]),
    ))
}

fn minkowski_draws(seed: u64) -> Vec<MetricSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6);
    let mut out = Vec::new();
    for _ in 0..3 {
        out.push(MetricSpec::minkowski_linear([
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]));
    }
    for _ in 0..3 {
        out.push(MetricSpec::minkowski_rational([
            rng.random_range(1.5..2.5),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]));
    }
    out
}

/// System III separates the two Minkowski families from generic potentials.
pub fn minkowski_classification(seed: u64) -> Check {
    let grid = main_grid(seed);
    let mut worst = 0.0f64;
    for spec in minkowski_draws(seed) {
        worst = worst.max(minkowski_residuals(&metric(&spec)?, &grid).map_err(err)?.max_residual());
    }
    let mut min_generic = f64::INFINITY;
    for phi in GENERIC_POTENTIALS {
        let r = minkowski_residuals(&metric(&MetricSpec::canonical(phi))?, &grid).map_err(err)?;
        min_generic = min_generic.min(r.max_residual());
    }
    let pass = worst < 1e-9 && min_generic > 1e-3;
    Ok((
        pass,
        format!("6 Minkowski max {worst:.2e}; 5 generic min {min_generic:.2e}"),
        values(&[("minkowski_max", worst), ("generic_min", min_generic)]),
    ))
}

pub const PARABOLIC_SIGMAS: [&str; 3] = ["0", "x1^3", "exp(x1)"];

/// Implicit solve, the parabolic condition and projectivity for the parabolic family.
pub fn parabolic_branch(seed: u64) -> Check {
    let grid = Grid::new([0.3, 0.8], [0.3, 0.8]).with_seed(Some(seed));
    let env = ConstEnv::new();
    let (mut solve, mut para, mut proj) = (0.0f64, 0.0f64, 0.0f64);
    for sigma in PARABOLIC_SIGMAS {
        let e = parse(sigma).map_err(err)?;
        for b in grid.base_points() {
            solve = solve.max(solve_parabolic_a(&e, &env, b[0], b[1]).map_err(err)?.residual);
        }
        let m = metric(&MetricSpec::parabolic(sigma))?;
        para = para.max(parabolic_residuals(&m, &grid).map_err(err)?.max_residual());
        proj = proj.max(projectivity_residuals(&m, &grid).map_err(err)?.max_residual());
    }
    let pass = solve < 1e-12 && para < 1e-10 && proj < 1e-8;
    Ok((
        pass,
        format!("3 sigma; solve residual {solve:.2e}; 4AC-B^2 {para:.2e}; projectivity {proj:.2e}"),
        values(&[("solve", solve), ("parabolic", para), ("projectivity", proj)]),
    ))
}

fn sample_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<EvalPoint> {
    (0..n)
        .map(|_| {
            let a: f64 = rng.random_range(-1.2..1.2);
            EvalPoint::new(rng.random_range(0.25..0.75), rng.random_range(0.25..0.75), a.cos(), a.sin())
        })
        .collect()
}

/// Trace identity, homogeneity of `P` and flatness of Minkowski metrics.
pub fn curvature_consistency(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x8);
    let (mut trace, mut homog, mut flat) = (0.0f64, 0.0f64, 0.0f64);
    for phi in random_potentials(seed ^ 0x88, 10) {
        let m = metric(&MetricSpec::canonical(&phi))?;
        for pt in sample_points(&mut rng, 20) {
            let b = curvature_bundle(&m, &pt, CurvatureForm::Corrected).map_err(err)?;
            trace = trace.max(b.trace_defect());
            let b2 = curvature_bundle(&m, &pt.scaled(2.5), CurvatureForm::Corrected).map_err(err)?;
            for i in 0..2 {
                for j in 0..2 {
                    homog = homog.max((b.p[i][j] - b2.p[i][j]).abs());
                }
            }
        }
    }
    for spec in minkowski_draws(seed) {
        let m = metric(&spec)?;
        for pt in sample_points(&mut rng, 20) {
            flat = flat.max(curvature_bundle(&m, &pt, CurvatureForm::Corrected).map_err(err)?.max_abs_k());
        }
    }
    let pass = trace < 1e-8 && homog < 1e-9 && flat < 1e-10;
    Ok((
        pass,
        format!("trace defect {trace:.2e}; P homogeneity {homog:.2e}; Minkowski |K| {flat:.2e}"),
        values(&[("trace_defect", trace), ("p_homogeneity", homog), ("minkowski_k", flat)]),
    ))
}

/// The seven potential equations hold exactly on the Minkowski families.
pub fn constant_curvature(seed: u64) -> Check {
    let grid = main_grid(seed);
    let env = ConstEnv::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9);
    let mut good = Vec::new();
    for _ in 0..3 {
        let (k1, k2, k5, k6) = (
            rng.random_range(1.5..2.5f64),
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
        );
        good.push(format!("(x1^2 - ({k2})*x1 + ({k5}))/(({k1}) - x2) + ({k6})"));
        let (a, b, c) = (
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
            rng.random_range(-1.0..1.0f64),
        );
        good.push(format!("({a})*x1 + ({b})*x2 + ({c})"));
    }
    let mut worst = 0.0f64;
    for src in &good {
        let r = constant_curvature_residuals(&parse(src).map_err(err)?, &env, &grid, EquationSet::Corrected).map_err(err)?;
        worst = worst.max(r.max_residual());
    }
    let mut min_bad = f64::INFINITY;
    let bad: Vec<String> = random_potentials(seed, 20)
        .into_iter()
        .chain(GENERIC_POTENTIALS.iter().map(|s| s.to_string()))
        .collect();
    for src in &bad {
        let psi = parse(src).map_err(err)?.swap_coords();
        let r = constant_curvature_residuals(&psi, &env, &grid, EquationSet::Corrected).map_err(err)?;
        min_bad = min_bad.min(r.max_residual());
    }
    let pass = worst < 1e-9 && min_bad > 1e-3;
    Ok((
        pass,
        format!("6 Minkowski potentials max {worst:.2e}; {} others min {min_bad:.2e}", bad.len()),
        values(&[("minkowski_max", worst), ("other_min", min_bad)]),
    ))
}

/// Exceptional cubic family, its degenerate draw and constant cubic metrics.
pub fn cubic_branch(seed: u64) -> Check {
    let grid = Grid::new([0.0, 1.0], [0.0, 1.0]).with_seed(Some(seed));
    let exceptional = cubic_exceptional_check([1.0, 1.0, 0.0, 1.0], &grid).map_err(err)?.max_residual();
    let rejected = matches!(
        cubic_exceptional_check([1.0, 1.0, 0.0, 0.0], &grid),
        Err(AnalysisError::DegenerateCubic { .. })
    );
    let mut constant = 0.0f64;
    for (a, b, c, d) in [("2", "1", "0.5", "0.3"), ("1", "-2", "0.7", "0"), ("0.5", "3", "-1", "2")] {
        let m = metric(&MetricSpec::cubic_general(a, b, c, d))?;
        constant = constant.max(cubic_system_alpha_residuals(&m, &grid).map_err(err)?.max_residual());
    }
    let pass = exceptional < 1e-8 && rejected && constant == 0.0;
    Ok((
        pass,
        format!(
            "exceptional max {exceptional:.2e}; degenerate draw {}; constant-coefficient alpha max {constant:e}",
            if rejected { "rejected" } else { "NOT rejected" }
        ),
        values(&[("exceptional_max", exceptional), ("constant_alpha_max", constant)]),
    ))
}

/// The spray of the fundamental tensor is `p·X` on projective metrics.
pub fn spray_cross_check(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb);
    let mut specs: Vec<MetricSpec> = random_potentials(seed ^ 0xbb, 10).iter().map(|p| MetricSpec::canonical(p)).collect();
    specs.extend(minkowski_draws(seed));
    let metrics = specs.iter().map(metric).collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let m = &metrics[i % metrics.len()];
        let a: f64 = rng.random_range(-1.0..1.0);
        let pt = EvalPoint::new(rng.random_range(0.3..0.7), rng.random_range(0.3..0.7), a.cos(), a.sin());
        let g = spray(m, &pt).map_err(err)?;
        let p = p_functions(m, &pt).map_err(err)?.p;
        worst = worst.max((g[0] - p * pt.x).abs()).max((g[1] - p * pt.y).abs());
    }
    Ok((worst < 1e-8, format!("200 states; max |G - pX| {worst:.2e}"), values(&[("max_error", worst)])))
}

/// Rows 1–11.
pub fn run_criteria(seed: u64) -> Vec<Outcome> {
    let checks: [fn(u64) -> Check; 11] = [
        ad_soundness,
        projectivity_theorem,
        converse_witness,
        system_equivalence,
        d_classification,
        minkowski_classification,
        parabolic_branch,
        curvature_consistency,
        constant_curvature,
        cubic_branch,
        spray_cross_check,
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, f)| outcome(i as u32 + 1, TITLES[i], f(seed)))
        .collect()
}

/// Row 12: a second run of rows 1–11 serializes to the same bytes.
pub fn determinism(seed: u64, first: &[Outcome]) -> Outcome {
    let a = serde_json::to_vec(first).expect("rows serialize");
    let b = serde_json::to_vec(&run_criteria(seed)).expect("rows serialize");
    let same = a == b;
    outcome(
        12,
        TITLES[11],
        Ok((same, format!("{} bytes, {}", a.len(), if same { "identical" } else { "differ" }), BTreeMap::new())),
    )
}

/// A corpus row passes when every expected flag matches the classification.
pub fn corpus_row(entry: &CorpusEntry, grid: &Grid, t: Thresholds) -> Outcome {
    let check = || -> Check {
        let m = metric(&entry.metric)?;
        let c = classify(&m, grid, t).map_err(err)?;
        let mut mismatches = Vec::new();
        for (flag, want) in &entry.expect {
            let got = c.flag(flag).ok_or_else(|| format!("unknown flag `{flag}`"))?;
            if got.status != *want {
                mismatches.push(format!("{flag}: expected {want:?}, got {:?}", got.status));
            }
        }
        let ok = mismatches.is_empty();
        let detail = if ok {
            format!("{} flags as expected", entry.expect.len())
        } else {
            mismatches.join("; ")
        };
        Ok((ok, detail, BTreeMap::new()))
    };
    let (pass, detail, values) = check().unwrap_or_else(|e| (false, format!("error: {e}"), BTreeMap::new()));
    Outcome {
        id: format!("corpus:{}", entry.name),
        title: entry.name.clone(),
        pass,
        detail,
        values,
    }
}

pub fn run_suite(seed: u64, corpus: &[CorpusEntry], grid: &Grid, t: Thresholds) -> SuiteReport {
    let mut rows = run_criteria(seed);
    let det = determinism(seed, &rows);
    rows.push(det);
    rows.extend(corpus.iter().map(|e| corpus_row(e, grid, t)));
    SuiteReport { seed, rows }
}
