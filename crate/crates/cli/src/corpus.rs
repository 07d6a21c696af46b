//! Built-in metric corpora and user corpus files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use kropina_core::metrics::{ChartMap, MetricSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::Status;
use crate::CliError;

/// Expressions in `x1, x2`, smooth on `[0.2, 0.8]²`, for the derivative check.
pub const AD_EXPRESSIONS: [&str; 25] = [
    "x1*x2",
    "x1^3 - 2*x1*x2^2 + 0.5",
    "sin(x1)*cos(x2)",
    "exp(x1 - x2)",
    "ln(1 + x1*x2)",
    "sqrt(x1 + x2)",
    "cbrt(x1 + 2*x2)",
    "1/(1 + x1^2 + x2^2)",
    "x1^x2",
    "abs(x1 - 2)*x2",
    "sin(3*x1 + x2)^2",
    "exp(-x1^2)*x2^3",
    "(x1 + 1)/(x2 + 2)",
    "cos(x1*x2)/(x1 + 1)",
    "ln(x1)*ln(x2)",
    "sqrt(1 + sin(x1)^2)",
    "x2^2/(1 - x1)",
    "exp(sin(x1*x2))",
    "(x1^2 + 0.3*x1 + 0.1)/(2 - x2) + 1",
    "x1^4 - x2^4 + x1^2*x2^2",
    "sin(x1)^3*cos(x2)^2",
    "x1*exp(x2)/(1 + x1)",
    "cbrt(1 + x1^2*x2)",
    "ln(cos(x1) + 2)*sqrt(x2)",
    "(x1 - x2)^5",
];

fn num(v: f64) -> String {
    format!("({v:.4})")
}

/// Seeded polynomial/trigonometric potentials with `4φ₁ − φ₂² > 0` on
/// `[0.2, 0.8]²`, so the canonical metric has a Riemannian quadratic part there.
pub fn random_potentials(seed: u64, n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = rng.random_range(-0.5..0.5);
            let b = rng.random_range(2.5..3.5);
            let c = rng.random_range(-0.5..0.5);
            let d = rng.random_range(-1.0..1.0);
            let e = rng.random_range(-1.0..1.0);
            let f = rng.random_range(-0.5..0.5);
            let g = rng.random_range(-0.5..0.5);
            format!(
                "{}*x1^2 + {}*x1 + {}*sin({}*x2 + {}*x1) + {}*x1*x2 + {}*cos(x2)",
                num(a),
                num(b),
                num(c),
                num(d),
                num(e),
                num(f),
                num(g)
            )
        })
        .collect()
}

/// Potentials that are not of Minkowski type.
pub const GENERIC_POTENTIALS: [&str; 5] = [
    "sin(x1)",
    "x1*x2 + 2*x1",
    "exp(0.5*x1)*cos(x2) + x1",
    "x1^3 + x2^2 + 2*x1",
    "ln(1 + x1)*x2 + 3*x1",
];

/// Kropina metrics whose coefficients violate the projectivity system.
pub fn non_projective() -> Vec<MetricSpec> {
    vec![
        MetricSpec::kropina_general("1 + x2", "0", "1", "0"),
        MetricSpec::kropina_general("1", "x1", "1 + 0.5*x2", "0"),
        MetricSpec::kropina_general("1", "0", "2", "0.3*x1*x2"),
        MetricSpec::kropina_general("2 + sin(x2)", "0.5", "1", "0.2"),
        MetricSpec::kropina_general("1", "0", "1 + x1^2", "0.1"),
        MetricSpec::kropina_general("1 + x1*x2", "0.2", "1", "0"),
        MetricSpec::kropina_general("2", "x2", "1", "0.1*x1"),
        MetricSpec::kropina_general("1 + 0.5*x1^2", "0", "1 + 0.5*x2^2", "0"),
        MetricSpec::kropina_general("exp(0.3*x2)", "0.1", "1", "0.05"),
        MetricSpec::kropina_general("1", "0.3*x1", "1", "0.2*x2"),
    ]
}

/// A corpus member: a spec, possibly rewritten in another chart.
#[derive(Debug, Clone)]
pub struct Member {
    pub name: String,
    pub spec: MetricSpec,
    pub chart: Option<ChartMap>,
}

impl Member {
    fn plain(name: impl Into<String>, spec: MetricSpec) -> Self {
        Self {
            name: name.into(),
            spec,
            chart: None,
        }
    }
}

/// Projective Kropina metrics in several forms and charts.
pub fn projective_members(seed: u64) -> Vec<Member> {
    let phis = random_potentials(seed ^ 0x5eed, 4);
    let mut out: Vec<Member> = phis
        .iter()
        .enumerate()
        .map(|(i, p)| Member::plain(format!("canonical-{i}"), MetricSpec::canonical(p)))
        .collect();
    out.push(Member::plain("minkowski-linear", MetricSpec::minkowski_linear([0.5, -1.0, 2.0])));
    out.push(Member::plain("minkowski-rational", MetricSpec::minkowski_rational([2.0, 0.5, 0.25, 1.0])));
    out.push(Member::plain("parabolic-cubic", MetricSpec::parabolic("x1^3")));
    out.push(Member::plain("parabolic-exp", MetricSpec::parabolic("exp(x1)")));
    out.push(Member {
        name: "kill-d-rational".into(),
        spec: MetricSpec::canonical("sin(x1) + x2^2"),
        chart: Some(ChartMap::KillDRational { k1: 1.0, k2: 2.0 }),
    });
    out.push(Member {
        name: "kill-d-constant".into(),
        spec: MetricSpec::canonical("x1*x2 + x1"),
        chart: Some(ChartMap::KillDConstant { k1: 0.5 }),
    });
    out
}

/// One row of a user corpus: a metric and the flags it is expected to have.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub metric: MetricSpec,
    pub expect: BTreeMap<String, Status>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CorpusFile {
    Wrapped { entries: Vec<CorpusEntry> },
    Bare(Vec<CorpusEntry>),
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("corpus {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("corpus {} is empty", path.display())));
    }
    let file: CorpusFile =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("corpus {}: {e}", path.display())))?;
    let entries = match file {
        CorpusFile::Wrapped { entries } | CorpusFile::Bare(entries) => entries,
    };
    if entries.is_empty() {
        return Err(CliError::Usage(format!("corpus {} has no entries", path.display())));
    }
    for e in &entries {
        if e.expect.is_empty() {
            return Err(CliError::Usage(format!("corpus entry `{}` expects nothing", e.name)));
        }
    }
    Ok(entries)
}
