//! Suite configuration files: a JSON object with an optional `seed` and
//! `tol` and a list of suites, each tagged by `kind`.

use std::collections::{BTreeMap, BTreeSet};

use renyi_core::densities::parse as parse_density;
use renyi_core::inequalities::Theorem;
use renyi_core::verification::{case_sampler, transform_case_sampler, ParamFamily};
use serde::Deserialize;

use crate::evaluate::FUNCTIONALS;

/// Largest number of rows a check grid may expand to.
pub const MAX_GRID_ROWS: usize = 1_000_000;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    /// Pass threshold for inequality records, overriding the default.
    pub tol: Option<f64>,
    pub suites: Vec<Suite>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Suite {
    Functional(FunctionalSuite),
    Limits(LimitsSuite),
    Check(CheckSuite),
    Random(RandomSuite),
    Identities(IdentitiesSuite),
    Discrete(DiscreteSuite),
    Sharpness(SharpnessSuite),
    Preservation(PreservationSuite),
    Bridge(BridgeSuite),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSuite {
    pub name: Option<String>,
    pub cases: Vec<FunctionalCase>,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalCase {
    pub functional: String,
    pub densities: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub expect: Expect,
}

/// A reference value, or another functional evaluation to compare against.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Expect {
    Value(f64),
    Functional {
        functional: String,
        densities: Vec<String>,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

/// Rényi quantities at order `1 ± eps` against their Shannon limits.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSuite {
    pub name: Option<String>,
    pub cases: Vec<LimitCase>,
    pub eps: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitCase {
    pub f: String,
    pub g: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Value(f64),
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Axis::Value(v) => Ok(vec![*v]),
            Axis::List(v) if v.is_empty() => Err("empty axis".into()),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { from, to, step } => {
                if !(step.is_finite() && *step > 0.0 && from.is_finite() && to.is_finite() && from <= to) {
                    return Err(format!("range needs finite from <= to and step > 0, got {from}..{to} step {step}"));
                }
                let count = ((to - from) / step * (1.0 + 1e-12) + 1e-9).floor() + 1.0;
                if count > MAX_GRID_ROWS as f64 {
                    return Err(format!("range has {count} points"));
                }
                Ok((0..count as usize).map(|i| from + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSuite {
    pub name: Option<String>,
    /// Theorem spec; may contain `{axis}` placeholders.
    pub theorem: String,
    pub f: String,
    /// Density spec, or `witness` for the equality witness of `f`.
    pub g: String,
    /// Must contain `alpha` and `beta`; other axes feed placeholders.
    pub grid: BTreeMap<String, Axis>,
    /// `corrected` (default) or `paper`.
    pub witness_mode: Option<String>,
    /// Pass iff `|gap - value| <= tol` instead of the inequality test.
    pub expect_gap: Option<ExpectGap>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectGap {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    #[default]
    Worst,
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSuite {
    pub name: Option<String>,
    /// Sampler name: `rrr`, `escort`, `rel_escort`, `bip_down`,
    /// `down_fisher`, `up`, `up_exp` or `upper_mom`.
    pub theorem: String,
    pub n: u64,
    #[serde(default)]
    pub records: RecordMode,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesSuite {
    pub name: Option<String>,
    pub n: u64,
    pub tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteSuite {
    pub name: Option<String>,
    pub n: u64,
    pub tol: f64,
    /// Bound on the escort-equality grid.
    pub escort_tol: f64,
    /// Random escort instances, reported without a bound.
    #[serde(default = "default_escort_n")]
    pub escort_n: u64,
    pub seed: Option<u64>,
}

fn default_escort_n() -> u64 {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessSuite {
    pub name: Option<String>,
    pub theorem: String,
    pub f: String,
    pub family: String,
    pub start: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub expect: Option<Vec<f64>>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_rel_tol() -> f64 {
    0.01
}

fn default_gap_tol() -> f64 {
    1e-6
}

pub fn default_budget() -> usize {
    2000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreservationSuite {
    pub name: Option<String>,
    pub transforms: Vec<String>,
    pub n: u64,
    pub tol: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSuite {
    pub name: Option<String>,
    pub n: u64,
    pub tol: f64,
    pub seed: Option<u64>,
}

impl Suite {
    pub fn kind(&self) -> &'static str {
        match self {
            Suite::Functional(_) => "functional",
            Suite::Limits(_) => "limits",
            Suite::Check(_) => "check",
            Suite::Random(_) => "random",
            Suite::Identities(_) => "identities",
            Suite::Discrete(_) => "discrete",
            Suite::Sharpness(_) => "sharpness",
            Suite::Preservation(_) => "preservation",
            Suite::Bridge(_) => "bridge",
        }
    }

    fn given_name(&self) -> Option<&str> {
        match self {
            Suite::Functional(s) => s.name.as_deref(),
            Suite::Limits(s) => s.name.as_deref(),
            Suite::Check(s) => s.name.as_deref(),
            Suite::Random(s) => s.name.as_deref(),
            Suite::Identities(s) => s.name.as_deref(),
            Suite::Discrete(s) => s.name.as_deref(),
            Suite::Sharpness(s) => s.name.as_deref(),
            Suite::Preservation(s) => s.name.as_deref(),
            Suite::Bridge(s) => s.name.as_deref(),
        }
    }

    /// The configured name, or `kind-index`.
    pub fn name(&self, index: usize) -> String {
        self.given_name().map_or_else(|| format!("{}-{index}", self.kind()), str::to_string)
    }
}

/// Parses and validates a configuration; the error is a diagnostic.
pub fn parse(text: &str) -> Result<Config, String> {
    let config: Config = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
    config.validate()?;
    Ok(config)
}

fn positive(what: &str, v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{what} must be finite and > 0, got {v}"))
    }
}

fn density(spec: &str) -> Result<(), String> {
    parse_density(spec).map(|_| ()).map_err(|e| e.to_string())
}

fn functional_call(name: &str, densities: &[String]) -> Result<(), String> {
    if !FUNCTIONALS.iter().any(|(n, _, _)| *n == name) {
        return Err(format!("unknown functional `{name}`"));
    }
    densities.iter().try_for_each(|d| density(d))
}

/// Names inside `{...}` in a template.
pub fn placeholders(template: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            return Err(format!("unclosed placeholder in `{template}`"));
        };
        out.push(rest[start + 1..start + len].to_string());
        rest = &rest[start + len + 1..];
    }
    if rest.contains('}') {
        return Err(format!("stray `}}` in `{template}`"));
    }
    Ok(out)
}

/// Replaces each `{name}` by the shortest round-trip form of its value.
pub fn substitute(template: &str, values: &BTreeMap<&str, f64>) -> String {
    let mut s = template.to_string();
    for (k, v) in values {
        s = s.replace(&format!("{{{k}}}"), &v.to_string());
    }
    s
}

impl CheckSuite {
    /// Grid axes in sorted order with their values.
    pub fn axes(&self) -> Result<Vec<(&str, Vec<f64>)>, String> {
        self.grid.iter().map(|(k, a)| Ok((k.as_str(), a.values().map_err(|e| format!("axis `{k}`: {e}"))?))).collect()
    }

    /// Rows in lexicographic order of the sorted axes (the first axis
    /// varies slowest).
    pub fn rows(&self) -> Result<Vec<BTreeMap<&str, f64>>, String> {
        let axes = self.axes()?;
        let total = axes.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()).filter(|&n| n <= MAX_GRID_ROWS));
        if total.is_none() {
            return Err(format!("grid has more than {MAX_GRID_ROWS} rows"));
        }
        let mut rows = vec![BTreeMap::new()];
        for (k, values) in &axes {
            rows = rows
                .into_iter()
                .flat_map(|row| {
                    values.iter().map(move |&v| {
                        let mut r = row.clone();
                        r.insert(*k, v);
                        r
                    })
                })
                .collect();
        }
        Ok(rows)
    }

    fn validate(&self) -> Result<(), String> {
        for axis in ["alpha", "beta"] {
            if !self.grid.contains_key(axis) {
                return Err(format!("grid needs an `{axis}` axis"));
            }
        }
        for template in [&self.theorem, &self.f, &self.g] {
            for p in placeholders(template)? {
                if !self.grid.contains_key(&p) {
                    return Err(format!("placeholder `{{{p}}}` in `{template}` has no grid axis"));
                }
            }
        }
        if let Some(m) = &self.witness_mode {
            if m != "corrected" && m != "paper" {
                return Err(format!("witness_mode must be `corrected` or `paper`, got `{m}`"));
            }
            if self.g != "witness" {
                return Err("witness_mode needs g = \"witness\"".into());
            }
        }
        if let Some(e) = &self.expect_gap {
            positive("expect_gap.tol", e.tol)?;
        }
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        // every expanded row must name valid densities and theorems
        for row in self.rows()? {
            Theorem::parse(&substitute(&self.theorem, &row)).map_err(|e| e.to_string())?;
            density(&substitute(&self.f, &row))?;
            if self.g != "witness" {
                density(&substitute(&self.g, &row))?;
            }
        }
        Ok(())
    }
}

impl Config {
    fn validate(&self) -> Result<(), String> {
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        if self.suites.is_empty() {
            return Err("no suites".into());
        }
        let mut names = BTreeSet::new();
        for (i, suite) in self.suites.iter().enumerate() {
            let name = suite.name(i);
            if !names.insert(name.clone()) {
                return Err(format!("duplicate suite name `{name}`"));
            }
            suite.validate().map_err(|e| format!("suite `{name}`: {e}"))?;
        }
        Ok(())
    }
}

impl Suite {
    fn validate(&self) -> Result<(), String> {
        let count = |n: u64| if n == 0 { Err("n must be > 0".to_string()) } else { Ok(()) };
        match self {
            Suite::Functional(s) => {
                positive("tol", s.tol)?;
                for c in &s.cases {
                    functional_call(&c.functional, &c.densities)?;
                    if let Expect::Functional { functional, densities, .. } = &c.expect {
                        functional_call(functional, densities)?;
                    }
                }
                Ok(())
            }
            Suite::Limits(s) => {
                positive("tol", s.tol)?;
                positive("eps", s.eps)?;
                s.cases.iter().try_for_each(|c| density(&c.f).and_then(|_| density(&c.g)))
            }
            Suite::Check(s) => s.validate(),
            Suite::Random(s) => {
                count(s.n)?;
                if let Some(t) = s.tol {
                    positive("tol", t)?;
                }
                case_sampler(&s.theorem).map(|_| ()).map_err(|e| e.to_string())
            }
            Suite::Identities(s) => {
                count(s.n)?;
                positive("tol", s.tol)
            }
            Suite::Discrete(s) => {
                count(s.n)?;
                positive("tol", s.tol)?;
                positive("escort_tol", s.escort_tol)
            }
            Suite::Sharpness(s) => {
                Theorem::parse(&s.theorem).map_err(|e| e.to_string())?;
                density(&s.f)?;
                let family = ParamFamily::parse(&s.family).map_err(|e| e.to_string())?;
                family.build(&s.start).map_err(|e| format!("start: {e}"))?;
                if let Some(e) = &s.expect {
                    if e.len() != family.dimension() {
                        return Err(format!("expect has {} values, the family takes {}", e.len(), family.dimension()));
                    }
                }
                positive("rel_tol", s.rel_tol)?;
                positive("gap_tol", s.gap_tol)?;
                if s.budget == 0 {
                    return Err("budget must be > 0".into());
                }
                Ok(())
            }
            Suite::Preservation(s) => {
                count(s.n)?;
                positive("tol", s.tol)?;
                if s.transforms.is_empty() {
                    return Err("no transforms".into());
                }
                s.transforms.iter().try_for_each(|k| transform_case_sampler(k).map(|_| ()).map_err(|e| e.to_string()))
            }
            Suite::Bridge(s) => {
                count(s.n)?;
                positive("tol", s.tol)
            }
        }
    }
}
