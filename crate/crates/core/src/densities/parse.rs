//! Density spec strings: `family:key=value[,key=value...]`.
//!
//! Values are numbers or nested specs. A nested spec containing commas must
//! be wrapped in parentheses: `escort:base=(pareto:xm=1,alpha=2),exp=2`.

use std::collections::BTreeMap;

use super::{Density, Modifier};
use crate::error::{Error, Result};

fn fail(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse { input: input.to_string(), reason: reason.into() }
}

/// Splits at commas that are not inside parentheses.
fn split_top_level(s: &str) -> std::result::Result<Vec<&str>, String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced `)`".into());
                }
            }
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced `(`".into());
    }
    parts.push(&s[start..]);
    Ok(parts)
}

fn strip_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// A parsed `kind:key=value,...` string with its keys not yet consumed.
pub(crate) struct Args<'a> {
    pub(crate) input: &'a str,
    pub(crate) family: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    pub(crate) fn split(input: &'a str) -> Result<Self> {
        let input = strip_parens(input);
        let (family, rest) = match input.split_once(':') {
            Some((f, r)) => (f.trim(), r),
            None => (input, ""),
        };
        let mut map = BTreeMap::new();
        if !rest.trim().is_empty() {
            for part in split_top_level(rest).map_err(|e| fail(input, e))? {
                let (k, v) = part.split_once('=').ok_or_else(|| fail(input, format!("`{part}` is not key=value")))?;
                if map.insert(k.trim(), v).is_some() {
                    return Err(fail(input, format!("duplicate key `{}`", k.trim())));
                }
            }
        }
        Ok(Args { input, family, map })
    }

    pub(crate) fn fail(&self, reason: impl Into<String>) -> Error {
        fail(self.input, reason)
    }

    pub(crate) fn number(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.map.remove(key) {
            Some(v) => {
                v.trim().parse::<f64>().map_err(|_| fail(self.input, format!("`{key}`: `{v}` is not a number")))
            }
            None => default.ok_or_else(|| fail(self.input, format!("`{}` needs `{key}`", self.family))),
        }
    }

    pub(crate) fn density(&mut self, key: &str) -> Result<Density> {
        let v = self.map.remove(key).ok_or_else(|| fail(self.input, format!("`{}` needs `{key}`", self.family)))?;
        parse(strip_parens(v))
    }

    pub(crate) fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().next() {
            return Err(fail(self.input, format!("unknown key `{k}` for `{}`", self.family)));
        }
        Ok(())
    }
}

/// Parses a density spec string.
pub fn parse(input: &str) -> Result<Density> {
    let mut a = Args::split(input)?;
    let d = match a.family {
        "uniform" => Density::uniform(a.number("lo", Some(0.0))?, a.number("hi", Some(1.0))?),
        "exponential" => Density::exponential(a.number("rate", Some(1.0))?),
        "gaussian" => Density::gaussian(a.number("mu", Some(0.0))?, a.number("sigma", Some(1.0))?),
        "halfgennormal" => Density::half_generalized_normal(a.number("k", None)?, a.number("scale", Some(1.0))?),
        "gennormal" => Density::generalized_normal(a.number("k", None)?, a.number("scale", Some(1.0))?),
        "qexponential" => Density::q_exponential(a.number("q", None)?, a.number("rate", Some(1.0))?),
        "weibull" => Density::weibull(a.number("shape", None)?, a.number("scale", Some(1.0))?),
        "gengamma" => Density::generalized_gamma(a.number("a", None)?, a.number("d", None)?, a.number("p", None)?),
        "gamma" => Density::gamma(a.number("shape", None)?, a.number("scale", Some(1.0))?),
        "pareto" => Density::pareto(a.number("xm", Some(1.0))?, a.number("alpha", None)?),
        "rayleigh" => Density::rayleigh(a.number("sigma", Some(1.0))?),
        "escort" => {
            let base = a.density("base")?;
            Density::numeric(&base, Modifier::PowerOfBase(a.number("exp", None)?))
        }
        "tilt_power" => {
            let base = a.density("base")?;
            Density::numeric(&base, Modifier::PowerTilt(a.number("r", None)?))
        }
        "tilt_exp" => {
            let base = a.density("base")?;
            Density::numeric(&base, Modifier::ExpTilt(a.number("s", None)?))
        }
        "tilt_derivative" => {
            let base = a.density("base")?;
            let m = Modifier::DerivativeTilt { a: a.number("a", None)?, b: a.number("b", None)? };
            Density::numeric(&base, m)
        }
        "tilt_tail" => {
            let base = a.density("base")?;
            let m = Modifier::TailTilt { index: a.number("index", None)?, r: a.number("r", None)? };
            Density::numeric(&base, m)
        }
        "tilt_relative" => {
            let base = a.density("base")?;
            let h = a.density("h")?;
            Density::numeric(&base, Modifier::RelativeTilt { h, r: a.number("r", None)? })
        }
        "tilt_curvature" => {
            let base = a.density("base")?;
            let m = Modifier::CurvatureTilt {
                a: a.number("a", None)?,
                b: a.number("b", None)?,
                c: a.number("c", None)?,
                shift: a.number("shift", None)?,
            };
            Density::numeric(&base, m)
        }
        other => return Err(a.fail(format!("unknown family `{other}`"))),
    };
    a.finish()?;
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_specs() {
        assert_eq!(parse("exponential:rate=1").unwrap().to_string(), "exponential:rate=1");
        assert_eq!(parse("pareto:xm=1,alpha=2").unwrap().to_string(), "pareto:xm=1,alpha=2");
        assert_eq!(parse("uniform").unwrap().to_string(), "uniform:lo=0,hi=1");
        assert_eq!(parse("gamma:shape=2").unwrap().to_string(), "gengamma:a=1,d=2,p=1");
    }

    #[test]
    fn nested_specs() {
        let d = parse("escort:base=(pareto:xm=1,alpha=2),exp=2").unwrap();
        assert_eq!(d.to_string(), "escort:base=(pareto:xm=1,alpha=2),exp=2");
        let d = parse("tilt_power:base=exponential:rate=1,r=0.5").unwrap();
        assert_eq!(d.to_string(), "tilt_power:base=(exponential:rate=1),r=0.5");
    }

    #[test]
    fn errors() {
        for bad in [
            "nosuch:x=1",
            "exponential:rate=abc",
            "exponential:rate=1,rate=2",
            "exponential:speed=1",
            "escort:base=(exponential:rate=1,exp=2",
            "weibull:scale=1",
            "exponential:rate",
        ] {
            assert!(matches!(parse(bad), Err(Error::Parse { .. })), "{bad}");
        }
        assert!(matches!(parse("exponential:rate=-1"), Err(Error::InvalidParameter(_))));
    }
}
