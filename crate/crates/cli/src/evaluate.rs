//! Functionals by name, for `eval` and the `functional` suite kind.

use std::collections::BTreeMap;

use renyi_core::functionals::{Estimate, Functionals};
use renyi_core::{Density, Error, Result};
use serde_json::{json, Map, Value};

/// Name, densities needed (1 to 3), parameter names.
pub const FUNCTIONALS: &[(&str, usize, &[&str])] = &[
    ("renyi_entropy", 1, &["alpha"]),
    ("entropy_power", 1, &["alpha"]),
    ("shannon_entropy", 1, &[]),
    ("kl_divergence", 2, &[]),
    ("shannon_cross_entropy", 2, &[]),
    ("renyi_divergence", 2, &["beta"]),
    ("renyi_cross_entropy", 2, &["gamma"]),
    ("escort_cross_entropy", 2, &["gamma", "xi"]),
    ("cross_divergence", 3, &["a", "b"]),
    ("generalized_fisher", 1, &["p", "lambda"]),
    ("cross_fisher", 2, &["a", "b", "c"]),
    ("down_fisher", 1, &["p", "q", "lambda"]),
    ("cross_down_fisher", 2, &["a", "b", "c", "xi"]),
    ("deviation", 1, &["p"]),
    ("cross_deviation", 2, &["p", "gamma"]),
    ("exp_moment", 1, &["s"]),
    ("exp_cross_deviation", 2, &["gamma"]),
    ("upper_moment", 1, &["p", "a"]),
    ("cross_upper_moment", 2, &["p", "lambda", "b"]),
];

fn estimate(e: Estimate) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("value".into(), json!(e.value));
    m.insert("error".into(), json!(e.error));
    m
}

/// Evaluates `name` on `densities` (f, then g, then h) with `params`.
/// Returns at least `value` and `error`; Fisher and moment functionals add
/// their derived quantity.
pub fn evaluate(
    fx: &Functionals,
    name: &str,
    densities: &[&Density],
    params: &BTreeMap<String, f64>,
) -> Result<Map<String, Value>> {
    let Some(&(_, arity, names)) = FUNCTIONALS.iter().find(|(n, _, _)| *n == name) else {
        let known: Vec<&str> = FUNCTIONALS.iter().map(|(n, _, _)| *n).collect();
        return Err(Error::InvalidParameter(format!("unknown functional `{name}`; known: {}", known.join(", "))));
    };
    if densities.len() != arity {
        return Err(Error::InvalidParameter(format!("`{name}` takes {arity} densities, got {}", densities.len())));
    }
    if let Some(k) = params.keys().find(|k| !names.contains(&k.as_str())) {
        return Err(Error::InvalidParameter(format!("`{name}` has no parameter `{k}`")));
    }
    let p = |k: &str| -> Result<f64> {
        params.get(k).copied().ok_or_else(|| Error::InvalidParameter(format!("`{name}` needs parameter `{k}`")))
    };
    let d = densities;
    let out = match name {
        "renyi_entropy" => estimate(fx.renyi_entropy(d[0], p("alpha")?)?),
        "entropy_power" => estimate(fx.entropy_power(d[0], p("alpha")?)?),
        "shannon_entropy" => estimate(fx.shannon_entropy(d[0])?),
        "kl_divergence" => estimate(fx.kl_divergence(d[0], d[1])?),
        "shannon_cross_entropy" => estimate(fx.shannon_cross_entropy(d[0], d[1])?),
        "renyi_divergence" => estimate(fx.renyi_divergence(d[0], d[1], p("beta")?)?),
        "renyi_cross_entropy" => estimate(fx.renyi_cross_entropy(d[0], d[1], p("gamma")?)?),
        "escort_cross_entropy" => estimate(fx.escort_cross_entropy(d[0], d[1], p("gamma")?, p("xi")?)?),
        "cross_divergence" => estimate(fx.cross_divergence(d[0], d[1], d[2], p("a")?, p("b")?)?),
        "generalized_fisher" => {
            let r = fx.generalized_fisher(d[0], p("p")?, p("lambda")?)?;
            let mut m = estimate(r.integral);
            m.insert("phi".into(), json!(r.phi));
            m
        }
        "cross_fisher" => estimate(fx.cross_fisher(d[0], d[1], p("a")?, p("b")?, p("c")?)?),
        "down_fisher" => estimate(fx.down_fisher(d[0], p("p")?, p("q")?, p("lambda")?)?),
        "cross_down_fisher" => estimate(fx.cross_down_fisher(d[0], d[1], p("a")?, p("b")?, p("c")?, p("xi")?)?),
        "deviation" => estimate(fx.deviation(d[0], p("p")?)?),
        "cross_deviation" => estimate(fx.cross_deviation(d[0], d[1], p("p")?, p("gamma")?)?),
        "exp_moment" => estimate(fx.exp_moment(d[0], p("s")?)?),
        "exp_cross_deviation" => estimate(fx.exp_cross_deviation(d[0], d[1], p("gamma")?)?),
        "upper_moment" => {
            let r = fx.upper_moment(d[0], p("p")?, p("a")?)?;
            let mut m = estimate(r.moment);
            m.insert("deviation".into(), json!(r.deviation));
            m
        }
        _ => {
            let r = fx.cross_upper_moment(d[0], d[1], p("p")?, p("lambda")?, p("b")?)?;
            let mut m = estimate(r.moment);
            m.insert("deviation".into(), json!(r.deviation));
            m
        }
    };
    Ok(out)
}
