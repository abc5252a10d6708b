//! Turns subcommands and configured suites into records.

use std::collections::BTreeMap;

use rayon::prelude::*;
use renyi_core::densities::parse as parse_density;
use renyi_core::functionals::Functionals;
use renyi_core::inequalities::{check, equality_witness, CheckReport, Direction, Theorem, WitnessMode};
use renyi_core::verification::{
    case_sampler, discrete_escort_grid, discrete_escort_search, discrete_jensen_search, identity_search,
    minimize_gap, preservation_search, random_search_violations, shannon_bridge_search, ParamFamily, SimplexOptions,
};
use renyi_core::{Density, Error};
use serde_json::{json, Map, Value};

use crate::config::{self, CheckSuite, Expect, RecordMode, Suite};
use crate::evaluate::evaluate;
use crate::report::{Record, Status};

/// Settings shared by every suite of a run.
pub struct Context {
    pub fx: Functionals,
    pub seed: u64,
    /// `--tol`: pass threshold for inequality records, over any configured one.
    pub tol: Option<f64>,
    /// Config-level threshold, below suite-level ones.
    pub config_tol: Option<f64>,
    pub strict: bool,
    pub paper_witness: bool,
}

/// A usage or configuration problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

/// Marks `r` as failed by `e`: numerical failures are errors; violated
/// preconditions and degenerate parameters are skipped unless strict.
pub fn fail_record(ctx: &Context, mut r: Record, e: &Error) -> Record {
    r.set("error", e.to_string());
    r.status = if e.is_numerical() || ctx.strict { Status::Error } else { Status::Skipped };
    r
}

impl Context {
    fn witness_mode(&self, configured: Option<&str>) -> WitnessMode {
        match configured {
            Some("paper") => WitnessMode::Paper,
            Some(_) => WitnessMode::Corrected,
            None if self.paper_witness => WitnessMode::Paper,
            None => WitnessMode::Corrected,
        }
    }

    /// Pass rule of an inequality report: `gap >= -tol` with an explicit
    /// threshold, the report's own verdict otherwise.
    fn passes(&self, report: &CheckReport, suite_tol: Option<f64>) -> bool {
        match self.tol.or(suite_tol).or(self.config_tol) {
            Some(t) => report.gap >= -t,
            None => report.pass,
        }
    }
}

/// `g` of a check: a density or the equality witness of `f`.
pub enum Partner {
    Density(Density),
    Witness(WitnessMode),
}

impl Partner {
    pub fn parse(ctx: &Context, spec: &str, mode: Option<&str>) -> Result<Self, UsageError> {
        if spec == "witness" {
            Ok(Partner::Witness(ctx.witness_mode(mode)))
        } else {
            Ok(Partner::Density(parse_density(spec)?))
        }
    }
}

pub struct CheckRequest<'a> {
    pub suite: &'a str,
    pub theorem: Theorem,
    pub f: Density,
    pub g: Partner,
    pub alpha: f64,
    pub beta: f64,
    pub expect_gap: Option<config::ExpectGap>,
    pub tol: Option<f64>,
}

pub fn check_record(ctx: &Context, req: &CheckRequest) -> Record {
    let mut r = Record::new(req.suite, "check");
    r.set("f", req.f.to_string());
    let g = match &req.g {
        Partner::Density(g) => Ok(g.clone()),
        Partner::Witness(mode) => {
            r.set("witness_mode", mode);
            equality_witness(&req.theorem, &req.f, req.alpha, req.beta, *mode)
        }
    };
    let report = g.and_then(|g| {
        r.set("g", g.to_string());
        check(&ctx.fx, &req.theorem, &req.f, &g, req.alpha, req.beta)
    });
    match report {
        Ok(mut report) => {
            let pass = match req.expect_gap {
                Some(e) => (report.gap - e.value).abs() <= e.tol,
                None => ctx.passes(&report, req.tol),
            };
            report.pass = pass;
            r.merge(&report);
            if let Some(e) = req.expect_gap {
                r.set("expect_gap", e.value);
            }
            r.warning = report.conditioning_warning;
            r.gap = Some(report.gap);
            r.judge(pass);
            r
        }
        Err(e) => {
            r.set("theorem", req.theorem.to_string()).set("alpha", req.alpha).set("beta", req.beta);
            fail_record(ctx, r, &e)
        }
    }
}

pub fn eval_record(
    ctx: &Context,
    suite: &str,
    functional: &str,
    densities: &[String],
    params: &BTreeMap<String, f64>,
) -> Result<Record, UsageError> {
    let parsed = densities.iter().map(|d| parse_density(d)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&Density> = parsed.iter().collect();
    let mut r = Record::new(suite, "eval");
    r.set("functional", functional).set("densities", densities).set("params", params);
    match evaluate(&ctx.fx, functional, &refs, params) {
        Ok(m) => {
            r.fields.extend(m);
            Ok(r)
        }
        Err(e @ Error::InvalidParameter(_)) => Err(e.into()),
        Err(e) => Ok(fail_record(ctx, r, &e)),
    }
}

pub struct SharpnessRequest<'a> {
    pub suite: &'a str,
    pub theorem: Theorem,
    pub f: Density,
    pub family: ParamFamily,
    pub start: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub budget: usize,
    pub expect: Option<Vec<f64>>,
    pub rel_tol: f64,
    pub gap_tol: f64,
}

pub fn sharpness_record(ctx: &Context, req: &SharpnessRequest) -> Record {
    let mut r = Record::new(req.suite, "sharpness");
    r.set("theorem", req.theorem.to_string())
        .set("f", req.f.to_string())
        .set("family", req.family)
        .set("start", &req.start)
        .set("alpha", req.alpha)
        .set("beta", req.beta);
    let opts = SimplexOptions { budget: req.budget, ..Default::default() };
    match minimize_gap(&ctx.fx, &req.theorem, &req.f, req.family, &req.start, req.alpha, req.beta, &opts) {
        Ok(o) => {
            r.merge(&o);
            let mut pass = o.best_gap <= req.gap_tol;
            if let Some(expect) = &req.expect {
                let rel = o.best_params.iter().zip(expect).map(|(p, e)| ((p - e) / e).abs()).fold(0.0, f64::max);
                r.set("expect", expect).set("max_rel_error", rel);
                pass &= rel <= req.rel_tol;
            }
            r.gap = Some(o.best_gap);
            r.judge(pass);
            r
        }
        Err(e) => fail_record(ctx, r, &e),
    }
}

fn suite_seed(ctx: &Context, seed: Option<u64>) -> u64 {
    seed.unwrap_or(ctx.seed)
}

fn functional_records(ctx: &Context, name: &str, s: &config::FunctionalSuite) -> Result<Vec<Record>, UsageError> {
    let mut out = Vec::new();
    for c in &s.cases {
        let mut r = eval_record(ctx, name, &c.functional, &c.densities, &c.params)?;
        r.fields.insert("kind".into(), json!("functional"));
        if r.status != Status::Pass {
            out.push(r);
            continue;
        }
        let value = r.fields["value"].as_f64().unwrap_or(f64::NAN);
        let expect = match &c.expect {
            Expect::Value(v) => *v,
            Expect::Functional { functional, densities, params } => {
                let e = eval_record(ctx, name, functional, densities, params)?;
                if e.status != Status::Pass {
                    r.set("expect", e.fields.get("error"));
                    r.status = e.status;
                    out.push(r);
                    continue;
                }
                r.set("expect_functional", functional);
                e.fields["value"].as_f64().unwrap_or(f64::NAN)
            }
        };
        let deviation = (value - expect).abs();
        r.set("expect", expect).set("deviation", deviation);
        r.judge(deviation <= s.tol);
        out.push(r);
    }
    Ok(out)
}

fn limit_records(ctx: &Context, name: &str, s: &config::LimitsSuite) -> Result<Vec<Record>, UsageError> {
    let fx = &ctx.fx;
    let mut out = Vec::new();
    for c in &s.cases {
        let (f, g) = (parse_density(&c.f)?, parse_density(&c.g)?);
        let mut r = Record::new(name, "limits");
        r.set("f", &c.f).set("g", &c.g).set("eps", s.eps);
        let run = || -> renyi_core::Result<Map<String, Value>> {
            let (s_f, kl, h) = (fx.shannon_entropy(&f)?.value, fx.kl_divergence(&f, &g)?.value, fx.shannon_cross_entropy(&f, &g)?.value);
            let mut m = Map::new();
            let mut worst = 0.0f64;
            for (label, sign) in [("below", -1.0), ("above", 1.0)] {
                let order = 1.0 + sign * s.eps;
                let d = [
                    (fx.renyi_entropy(&f, order)?.value - s_f).abs(),
                    (fx.renyi_divergence(&f, &g, order)?.value - kl).abs(),
                    (fx.renyi_cross_entropy(&f, &g, order)?.value - h).abs(),
                ];
                worst = d.iter().fold(worst, |a, b| a.max(*b));
                m.insert(label.into(), json!({"entropy": d[0], "divergence": d[1], "cross_entropy": d[2]}));
            }
            m.insert("max_deviation".into(), json!(worst));
            Ok(m)
        };
        match run() {
            Ok(m) => {
                let pass = m["max_deviation"].as_f64().is_some_and(|d| d <= s.tol);
                r.fields.extend(m);
                r.judge(pass);
                out.push(r);
            }
            Err(e) => out.push(fail_record(ctx, r, &e)),
        }
    }
    Ok(out)
}

fn check_suite_records(ctx: &Context, name: &str, s: &CheckSuite) -> Result<Vec<Record>, UsageError> {
    let rows = s.rows().map_err(UsageError)?;
    let requests = rows
        .iter()
        .map(|row| {
            Ok(CheckRequest {
                suite: name,
                theorem: Theorem::parse(&config::substitute(&s.theorem, row))?,
                f: parse_density(&config::substitute(&s.f, row))?,
                g: Partner::parse(ctx, &config::substitute(&s.g, row), s.witness_mode.as_deref())?,
                alpha: row["alpha"],
                beta: row["beta"],
                expect_gap: s.expect_gap,
                tol: s.tol,
            })
        })
        .collect::<Result<Vec<_>, UsageError>>()?;
    Ok(requests.par_iter().map(|req| check_record(ctx, req)).collect())
}

fn random_records(ctx: &Context, name: &str, s: &config::RandomSuite) -> Result<Vec<Record>, UsageError> {
    let sampler = case_sampler(&s.theorem)?;
    let seed = suite_seed(ctx, s.seed);
    let (summary, outcomes) = random_search_violations(&ctx.fx, s.n, seed, sampler);
    let passes = |o: &renyi_core::verification::Outcome| ctx.passes(&o.report, s.tol);
    if s.records == RecordMode::All {
        return Ok(outcomes
            .iter()
            .map(|o| {
                let mut r = Record::new(name, "random");
                r.set("index", o.case.index).set("f", &o.case.f).set("g", &o.case.g).merge(&o.report);
                let pass = passes(o);
                r.set("pass", pass);
                r.warning = o.report.conditioning_warning;
                r.gap = Some(o.report.gap);
                r.judge(pass);
                r
            })
            .collect());
    }
    let worst_in = |d: Direction| {
        outcomes.iter().filter(|o| o.report.direction == d).map(|o| o.report.gap).reduce(f64::min)
    };
    let failures = outcomes.iter().filter(|o| !passes(o)).count();
    let mut r = Record::new(name, "random");
    r.set("theorem", &s.theorem)
        .set("seed", seed)
        .set("n", s.n)
        .set("evaluated", outcomes.len())
        .set("count_errors", summary.count_errors)
        .set("count_warnings", summary.count_warnings)
        .set("count_reversed", summary.count_reversed)
        .set("count_failures", failures)
        .set("worst_gap", summary.worst_gap)
        .set("worst_gap_normal", worst_in(Direction::Normal))
        .set("worst_gap_reversed", worst_in(Direction::Reversed))
        .set("worst_case", &summary.worst_case);
    r.gap = summary.worst_case.as_ref().map(|o| o.report.gap);
    if outcomes.len() < s.n as usize {
        r.set("error", format!("only {} of {} instances could be evaluated", outcomes.len(), s.n));
        r.status = Status::Error;
    } else {
        r.judge(failures == 0);
    }
    Ok(vec![r])
}

fn run_suite(ctx: &Context, name: &str, suite: &Suite) -> Result<Vec<Record>, UsageError> {
    match suite {
        Suite::Functional(s) => functional_records(ctx, name, s),
        Suite::Limits(s) => limit_records(ctx, name, s),
        Suite::Check(s) => check_suite_records(ctx, name, s),
        Suite::Random(s) => random_records(ctx, name, s),
        Suite::Identities(s) => {
            let seed = suite_seed(ctx, s.seed);
            let summary = identity_search(&ctx.fx, s.n, seed);
            let mut r = Record::new(name, "identities");
            let per: Map<String, Value> = summary.per_identity.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            r.set("seed", seed)
                .set("n", s.n)
                .set("evaluated", summary.evaluated)
                .set("count_errors", summary.count_errors)
                .set("max_residual", summary.max_residual)
                .set("per_identity", per)
                .set("worst_case", &summary.worst_case);
            r.judge(summary.evaluated == s.n && summary.max_residual <= s.tol);
            Ok(vec![r])
        }
        Suite::Discrete(s) => {
            let seed = suite_seed(ctx, s.seed);
            let search = discrete_jensen_search(s.n, seed);
            let grid = discrete_escort_grid();
            let random = discrete_escort_search(s.escort_n, seed);
            let mut r = Record::new(name, "discrete");
            r.set("seed", seed)
                .set("n", s.n)
                .set("min_gap", search.min_gap)
                .set("count_reversed", search.reversed)
                .set("worst_case", &search.worst_case)
                .set("escort_grid_max", grid)
                .set("escort_random_n", s.escort_n)
                .set("escort_random_max", random);
            r.gap = Some(search.min_gap);
            r.judge(search.min_gap >= -s.tol && grid <= s.escort_tol);
            Ok(vec![r])
        }
        Suite::Sharpness(s) => {
            let req = SharpnessRequest {
                suite: name,
                theorem: Theorem::parse(&s.theorem)?,
                f: parse_density(&s.f)?,
                family: ParamFamily::parse(&s.family)?,
                start: s.start.clone(),
                alpha: s.alpha,
                beta: s.beta,
                budget: s.budget,
                expect: s.expect.clone(),
                rel_tol: s.rel_tol,
                gap_tol: s.gap_tol,
            };
            Ok(vec![sharpness_record(ctx, &req)])
        }
        Suite::Preservation(s) => {
            let seed = suite_seed(ctx, s.seed);
            s.transforms
                .iter()
                .map(|kind| {
                    let summary = preservation_search(&ctx.fx, kind, s.n, seed)?;
                    let mut r = Record::new(name, "preservation");
                    r.set("seed", seed).merge(&summary);
                    r.judge(summary.evaluated == s.n && summary.max_gap <= s.tol);
                    Ok(r)
                })
                .collect()
        }
        Suite::Bridge(s) => {
            let seed = suite_seed(ctx, s.seed);
            let summary = shannon_bridge_search(&ctx.fx, s.n, seed);
            let mut r = Record::new(name, "bridge");
            r.set("seed", seed).merge(&summary);
            r.judge(summary.evaluated == s.n && summary.max_residual <= s.tol);
            Ok(vec![r])
        }
    }
}

/// Runs every suite in order; `progress` receives each suite name once done.
pub fn run_config(
    ctx: &Context,
    config: &config::Config,
    mut progress: impl FnMut(&str, &[Record]),
) -> Result<Vec<Record>, UsageError> {
    let mut records = Vec::new();
    for (i, suite) in config.suites.iter().enumerate() {
        let name = suite.name(i);
        let rs = run_suite(ctx, &name, suite)?;
        progress(&name, &rs);
        records.extend(rs);
    }
    Ok(records)
}
