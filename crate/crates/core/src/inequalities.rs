//! Sharp inequalities `R_α[𝒪f] + D_β[f||g] ≤ H_γ[𝒪f; 𝒪̄g]`, one per
//! transformation, with `γ = α - (α-1)²/(α-β)`. Every checker compares both
//! sides in log scale and orients the gap so that it is expected to be
//! non-negative (the inequality reverses when `α < β`).
//!
//! Equality holds when `𝒪̄[g] ∝ 𝒪[f]^k` with `k = (α-1)/(γ-1)`, i.e.
//! `g ∝ f 𝒪[f]^{tilt}` with `tilt = k - 1 = (α-1)/(1-β)`. The printed
//! equality conditions use the reciprocal exponent `(1-β)/(α-β)`; both
//! forms can be built with [`equality_witness`].

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::densities::parse::Args;
use crate::densities::{same_support, Density, Modifier};
use crate::error::{Error, Result};
use crate::functionals::{near, Estimate, Functionals, CONDITIONING_RADIUS};

/// Smallest tolerated negative gap.
pub const GAP_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ParameterTriple {
    /// `(α-1)² + (γ-α)(α-β)`, zero for a valid triple.
    pub fn residual(&self) -> f64 {
        let (a, b, c) = (self.alpha, self.beta, self.gamma);
        (a - 1.0).powi(2) + (c - a) * (a - b)
    }

    /// Near-degenerate: `|α-β|` small or some order close to 1.
    pub fn ill_conditioned(&self) -> bool {
        near(self.alpha, self.beta) || near(self.alpha, 1.0) || near(self.beta, 1.0) || near(self.gamma, 1.0)
    }

    pub fn exponents(&self) -> WitnessExponents {
        let (a, b, c) = (self.alpha, self.beta, self.gamma);
        WitnessExponents { k: (a - 1.0) / (c - 1.0), tilt: (a - 1.0) / (1.0 - b), paper_k: (1.0 - b) / (a - b) }
    }
}

fn check_orders(alpha: f64, beta: f64) -> Result<()> {
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::DegenerateParameters(format!("orders must be finite, got ({alpha}, {beta})")));
    }
    if alpha == 1.0 || beta == 1.0 || alpha == beta {
        return Err(Error::DegenerateParameters(format!("need α != 1, β != 1, α != β, got ({alpha}, {beta})")));
    }
    Ok(())
}

/// `γ = α - (α-1)²/(α-β)`.
pub fn solve_triple(alpha: f64, beta: f64) -> Result<ParameterTriple> {
    check_orders(alpha, beta)?;
    let gamma = alpha - (alpha - 1.0).powi(2) / (alpha - beta);
    Ok(ParameterTriple { alpha, beta, gamma })
}

/// `β = α - (α-1)²/(α-γ)`, the same relation solved for `β`.
pub fn solve_beta(alpha: f64, gamma: f64) -> Result<ParameterTriple> {
    if alpha == 1.0 || gamma == 1.0 || alpha == gamma || !alpha.is_finite() || !gamma.is_finite() {
        return Err(Error::DegenerateParameters(format!("need α != 1, γ != 1, α != γ, got ({alpha}, {gamma})")));
    }
    let beta = alpha - (alpha - 1.0).powi(2) / (alpha - gamma);
    Ok(ParameterTriple { alpha, beta, gamma })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessExponents {
    /// `(α-1)/(γ-1)`.
    pub k: f64,
    /// `k - 1 = (α-1)/(1-β)`.
    pub tilt: f64,
    /// `(1-β)/(α-β)`, the printed exponent.
    pub paper_k: f64,
}

impl WitnessExponents {
    /// `paper_k - 1 = (1-α)/(α-β)`.
    pub fn paper_tilt(&self) -> f64 {
        self.paper_k - 1.0
    }
}

#[derive(Debug, Clone)]
pub enum Theorem {
    Rrr,
    Escort { xi: f64 },
    RelEscort { h: Density, xi: f64 },
    BipDown { a: f64, b: f64 },
    DownFisher { a: f64, b: f64, xi: f64 },
    Up { a: f64 },
    UpExp,
    UpperMom { a: f64, b: f64 },
}

impl Theorem {
    pub fn name(&self) -> &'static str {
        match self {
            Theorem::Rrr => "rrr",
            Theorem::Escort { .. } => "escort",
            Theorem::RelEscort { .. } => "rel_escort",
            Theorem::BipDown { .. } => "bip_down",
            Theorem::DownFisher { .. } => "down_fisher",
            Theorem::Up { .. } => "up",
            Theorem::UpExp => "up_exp",
            Theorem::UpperMom { .. } => "upper_mom",
        }
    }

    /// Extra parameters as a JSON object.
    pub fn extras(&self) -> Map<String, Value> {
        let v = match self {
            Theorem::Rrr | Theorem::UpExp => json!({}),
            Theorem::Escort { xi } => json!({ "xi": xi }),
            Theorem::RelEscort { h, xi } => json!({ "h": h.to_string(), "xi": xi }),
            Theorem::BipDown { a, b } | Theorem::UpperMom { a, b } => json!({ "a": a, "b": b }),
            Theorem::DownFisher { a, b, xi } => json!({ "a": a, "b": b, "xi": xi }),
            Theorem::Up { a } => json!({ "a": a }),
        };
        match v {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }

    /// Parses `rrr`, `escort:xi=2`, `rel_escort:h=(...),xi=1`,
    /// `bip_down:a=1,b=1`, `down_fisher:a=1,b=1,xi=2`, `up:a=3` (`a=2` gives
    /// `up_exp`), `up_exp`, `upper_mom:a=1,b=3`.
    pub fn parse(input: &str) -> Result<Self> {
        let mut p = Args::split(input)?;
        let t = match p.family {
            "rrr" => Theorem::Rrr,
            "escort" => Theorem::Escort { xi: p.number("xi", None)? },
            "rel_escort" => {
                let h = p.density("h")?;
                Theorem::RelEscort { h, xi: p.number("xi", None)? }
            }
            "bip_down" => Theorem::BipDown { a: p.number("a", None)?, b: p.number("b", None)? },
            "down_fisher" => {
                Theorem::DownFisher { a: p.number("a", None)?, b: p.number("b", None)?, xi: p.number("xi", None)? }
            }
            "up" => match p.number("a", None)? {
                a if a == 2.0 => Theorem::UpExp,
                a => Theorem::Up { a },
            },
            "up_exp" => Theorem::UpExp,
            "upper_mom" => Theorem::UpperMom { a: p.number("a", None)?, b: p.number("b", None)? },
            other => return Err(p.fail(format!("unknown theorem `{other}`"))),
        };
        p.finish()?;
        Ok(t)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theorem::Rrr => write!(f, "rrr"),
            Theorem::Escort { xi } => write!(f, "escort:xi={xi}"),
            Theorem::RelEscort { h, xi } => write!(f, "rel_escort:h=({h}),xi={xi}"),
            Theorem::BipDown { a, b } => write!(f, "bip_down:a={a},b={b}"),
            Theorem::DownFisher { a, b, xi } => write!(f, "down_fisher:a={a},b={b},xi={xi}"),
            Theorem::Up { a } => write!(f, "up:a={a}"),
            Theorem::UpExp => write!(f, "up_exp"),
            Theorem::UpperMom { a, b } => write!(f, "upper_mom:a={a},b={b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `α > β`: `lhs ≤ rhs`.
    Normal,
    /// `α < β`: `lhs ≥ rhs`.
    Reversed,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub theorem: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub extras: Map<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    /// Oriented so that the inequality means `gap ≥ 0`.
    pub gap: f64,
    pub direction: Direction,
    pub quad_error: f64,
    pub pass: bool,
    /// Near-degenerate parameters.
    #[serde(rename = "warning")]
    pub conditioning_warning: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(theorem: &Theorem, t: ParameterTriple, lhs: Estimate, rhs: Estimate, notes: Vec<String>) -> Self {
        let direction = if t.alpha > t.beta { Direction::Normal } else { Direction::Reversed };
        let gap = match direction {
            Direction::Normal => rhs.value - lhs.value,
            Direction::Reversed => lhs.value - rhs.value,
        };
        let quad_error = lhs.error + rhs.error;
        CheckReport {
            theorem: theorem.name().to_string(),
            alpha: t.alpha,
            beta: t.beta,
            gamma: t.gamma,
            extras: theorem.extras(),
            lhs: lhs.value,
            rhs: rhs.value,
            gap,
            direction,
            quad_error,
            pass: gap >= -GAP_FLOOR.max(10.0 * quad_error),
            conditioning_warning: t.ill_conditioned(),
            notes,
        }
    }
}

fn sum(a: Estimate, b: Estimate) -> Estimate {
    Estimate { value: a.value + b.value, error: a.error + b.error }
}

fn scaled(e: Estimate, s: f64) -> Estimate {
    Estimate { value: s * e.value, error: (s * e.error).abs() }
}

fn require_decreasing(f: &Density, who: &str) -> Result<()> {
    if !f.is_decreasing() {
        return Err(Error::PreconditionViolated(format!("{who} needs a decreasing density, {f} is not")));
    }
    Ok(())
}

fn require_positive_support(f: &Density) -> Result<()> {
    let s = f.support();
    if s.lo() < 0.0 {
        return Err(Error::PreconditionViolated(format!("support ({}, {}) is not inside (0, inf)", s.lo(), s.hi())));
    }
    Ok(())
}

fn require_down_params(a: f64, b: f64) -> Result<()> {
    if b == 0.0 || a == 2.0 * b {
        return Err(Error::DegenerateParameters(format!("down inequalities need b != 0 and a != 2b, got a={a}, b={b}")));
    }
    Ok(())
}

/// Largest sampled `f f''/f'^2`.
pub fn sup_curvature(f: &Density) -> Result<f64> {
    f.require_order(2)?;
    let mut sup = f64::NEG_INFINITY;
    for x in f.probe_points(512) {
        sup = sup.max(f.curvature(x)?);
    }
    Ok(sup)
}

/// Evaluates one inequality.
pub fn check(fx: &Functionals, theorem: &Theorem, f: &Density, g: &Density, alpha: f64, beta: f64) -> Result<CheckReport> {
    same_support(&[f, g])?;
    let t = solve_triple(alpha, beta)?;
    let gamma = t.gamma;
    let divergence = || fx.renyi_divergence(f, g, beta);
    let mut notes = Vec::new();
    let (lhs, rhs) = match theorem {
        Theorem::Rrr => (sum(fx.renyi_entropy(f, alpha)?, divergence()?), fx.renyi_cross_entropy(f, g, gamma)?),
        Theorem::Escort { xi } => {
            let order = 1.0 + (alpha - 1.0) * xi;
            let entropy = if *xi == 0.0 { Estimate { value: 0.0, error: 0.0 } } else { fx.renyi_entropy(f, order)? };
            (sum(scaled(entropy, *xi), divergence()?), fx.escort_cross_entropy(f, g, gamma, *xi)?)
        }
        Theorem::RelEscort { h, xi } => {
            same_support(&[f, h])?;
            let rel = if *xi == 0.0 {
                Estimate { value: 0.0, error: 0.0 }
            } else {
                fx.renyi_divergence(f, h, 1.0 + (alpha - 1.0) * xi)?
            };
            (sum(divergence()?, scaled(rel, -xi)), fx.cross_divergence(f, g, h, gamma, *xi)?)
        }
        Theorem::BipDown { a, b } => {
            require_down_params(*a, *b)?;
            require_decreasing(f, "the down inequality")?;
            let fisher = scaled(fx.ln_cross_fisher_integral(f, f, 2.0 - a, *b, 1.0 - alpha)?, 1.0 / (1.0 - alpha));
            let cross = scaled(fx.ln_cross_fisher_integral(f, g, 2.0 - a, *b, 1.0 - gamma)?, 1.0 / (1.0 - gamma));
            (sum(fisher, divergence()?), cross)
        }
        Theorem::DownFisher { a, b, xi } => {
            require_down_params(*a, *b)?;
            require_decreasing(f, "the down-Fisher inequality")?;
            let sup = sup_curvature(f)?;
            if sup >= *xi {
                return Err(Error::PreconditionViolated(format!("sup f f''/f'^2 = {sup} is not below ξ = {xi}")));
            }
            if !g.is_decreasing() {
                notes.push(format!("{g} is not decreasing"));
            }
            let c = 1.0 - alpha;
            let down = fx.ln_down_fisher(f, c * b, c * (a - b), xi * (2.0 - a / b))?;
            let cross = fx.ln_cross_down_fisher(f, g, *a, *b, 1.0 - gamma, *xi)?;
            (sum(scaled(down, 1.0 / c), divergence()?), scaled(cross, 1.0 / (1.0 - gamma)))
        }
        Theorem::Up { a } => {
            if *a == 2.0 {
                return check(fx, &Theorem::UpExp, f, g, alpha, beta);
            }
            require_positive_support(f)?;
            let moment = scaled(fx.ln_absolute_moment(f, (alpha - 1.0) / (2.0 - a))?, 1.0 / (1.0 - alpha));
            let cross = fx.ln_cross_moment(f, g, (gamma - 1.0) / (2.0 - a), gamma)?;
            (sum(moment, divergence()?), scaled(cross, 1.0 / (1.0 - gamma)))
        }
        Theorem::UpExp => {
            let moment = scaled(fx.ln_exp_moment(f, 1.0 - alpha)?, 1.0 / (1.0 - alpha));
            let cross = scaled(fx.ln_exp_cross_moment(f, g, gamma)?, 1.0 / (1.0 - gamma));
            (sum(moment, divergence()?), cross)
        }
        Theorem::UpperMom { a, b } => {
            if *a == 2.0 || *b == 2.0 {
                return Err(Error::DegenerateParameters(format!("upper moments need a != 2 and b != 2, got a={a}, b={b}")));
            }
            require_positive_support(f)?;
            let moment = scaled(fx.ln_upper_moment(f, (alpha - 1.0) / (2.0 - a), *b)?, 1.0 / (1.0 - alpha));
            let cross = fx.ln_cross_upper_moment(f, g, (gamma - 1.0) / (2.0 - a), gamma - 1.0, *b)?;
            (sum(moment, divergence()?), scaled(cross, 1.0 / (1.0 - gamma)))
        }
    };
    if !lhs.value.is_finite() || !rhs.value.is_finite() {
        return Err(Error::DivergentIntegral(format!("{theorem}: lhs {} rhs {}", lhs.value, rhs.value)));
    }
    Ok(CheckReport::new(theorem, t, lhs, rhs, notes))
}

pub fn check_rrr(fx: &Functionals, f: &Density, g: &Density, alpha: f64, beta: f64) -> Result<CheckReport> {
    check(fx, &Theorem::Rrr, f, g, alpha, beta)
}

pub fn check_escort(fx: &Functionals, f: &Density, g: &Density, alpha: f64, beta: f64, xi: f64) -> Result<CheckReport> {
    check(fx, &Theorem::Escort { xi }, f, g, alpha, beta)
}

pub fn check_rel_escort(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    h: &Density,
    alpha: f64,
    beta: f64,
    xi: f64,
) -> Result<CheckReport> {
    check(fx, &Theorem::RelEscort { h: h.clone(), xi }, f, g, alpha, beta)
}

pub fn check_bip_down(fx: &Functionals, f: &Density, g: &Density, alpha: f64, beta: f64, a: f64, b: f64) -> Result<CheckReport> {
    check(fx, &Theorem::BipDown { a, b }, f, g, alpha, beta)
}

#[allow(clippy::too_many_arguments)]
pub fn check_down_fisher(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    alpha: f64,
    beta: f64,
    a: f64,
    b: f64,
    xi: f64,
) -> Result<CheckReport> {
    check(fx, &Theorem::DownFisher { a, b, xi }, f, g, alpha, beta)
}

/// `a = 2` is the exponential-moment form.
pub fn check_up(fx: &Functionals, f: &Density, g: &Density, alpha: f64, beta: f64, a: f64) -> Result<CheckReport> {
    check(fx, &Theorem::Up { a }, f, g, alpha, beta)
}

pub fn check_upper_mom(fx: &Functionals, f: &Density, g: &Density, alpha: f64, beta: f64, a: f64, b: f64) -> Result<CheckReport> {
    check(fx, &Theorem::UpperMom { a, b }, f, g, alpha, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMode {
    /// From `𝒪̄[g] ∝ 𝒪[f]^k`, `k = (α-1)/(γ-1)`.
    Corrected,
    /// The printed equality conditions, verbatim.
    Paper,
}

/// Density `g` that should attain equality for the given `f`.
///
/// | theorem     | corrected (`t = (α-1)/(1-β)`)                    | printed (`p = (1-α)/(α-β)`)               |
/// |-------------|--------------------------------------------------|-------------------------------------------|
/// | rrr         | `f^{1+t}`                                         | `f^{(β-1)/(β-α)}`                          |
/// | escort      | `f^{1+ξt}`                                        | `f^{1+ξp}`                                 |
/// | rel_escort  | `f (f/h)^{ξt}`                                    | `f (f/h)^{ξp}`                             |
/// | bip_down    | `f^{1+at} |f'|^{-bt}`                             | `f^{1+ap} |f'|^{-bp}`                      |
/// | down_fisher | `f^{1+t(aξ-2bξ+2b)} |f'|^{t(b-a)} |ρ-ξ|^{-bt}`     | `f^{1-a+Aa+2(a-1)B} |f'|^{b-bA+(1-2b)B} |ρ-a/b|^B` |
/// | up          | `f |x|^{t/(2-a)}`                                 | `f |x|^{p/(2-a)}`                          |
/// | up_exp      | `f e^{-tx}`                                       | `f e^{-px}`                                |
/// | upper_mom   | `f T_b^{t/(2-a)}`                                 | `f T_a^{p/(2-a)}`                          |
///
/// with `ρ = f f''/f'^2`, `A = 1+ap`, `B = -bp` and `T_c(x) = ∫_x^d |(c-2)s|^{1/(c-2)} f(s) ds`.
pub fn equality_witness(theorem: &Theorem, f: &Density, alpha: f64, beta: f64, mode: WitnessMode) -> Result<Density> {
    let e = solve_triple(alpha, beta)?.exponents();
    let t = match mode {
        WitnessMode::Corrected => e.tilt,
        WitnessMode::Paper => e.paper_tilt(),
    };
    match theorem {
        Theorem::Rrr => f.escort(1.0 + t),
        Theorem::Escort { xi } => f.escort(1.0 + xi * t),
        Theorem::RelEscort { h, xi } => Density::numeric(f, Modifier::RelativeTilt { h: h.clone(), r: xi * t }),
        Theorem::BipDown { a, b } => {
            require_decreasing(f, "the down witness")?;
            Density::numeric(f, Modifier::DerivativeTilt { a: 1.0 + a * t, b: -b * t })
        }
        Theorem::DownFisher { a, b, xi } => {
            require_decreasing(f, "the down-Fisher witness")?;
            let m = match mode {
                WitnessMode::Corrected => Modifier::CurvatureTilt {
                    a: 1.0 + t * (a * xi - 2.0 * b * xi + 2.0 * b),
                    b: t * (b - a),
                    c: -b * t,
                    shift: *xi,
                },
                WitnessMode::Paper => {
                    let (big_a, big_b) = (1.0 + a * t, -b * t);
                    Modifier::CurvatureTilt {
                        a: 1.0 - a + big_a * a + 2.0 * (a - 1.0) * big_b,
                        b: b - b * big_a + (1.0 - 2.0 * b) * big_b,
                        c: big_b,
                        shift: a / b,
                    }
                }
            };
            Density::numeric(f, m)
        }
        Theorem::Up { a } if *a == 2.0 => equality_witness(&Theorem::UpExp, f, alpha, beta, mode),
        Theorem::Up { a } => {
            require_positive_support(f)?;
            Density::numeric(f, Modifier::PowerTilt(t / (2.0 - a)))
        }
        Theorem::UpExp => Density::numeric(f, Modifier::ExpTilt(-t)),
        Theorem::UpperMom { a, b } => {
            require_positive_support(f)?;
            let index = match mode {
                WitnessMode::Corrected => *b,
                WitnessMode::Paper => *a,
            };
            Density::numeric(f, Modifier::TailTilt { index, r: t / (2.0 - a) })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identities: Vec<IdentityResidual>,
    pub max_residual: f64,
}

/// Residuals of the particular cases of the cross-divergence `H̃_{a,b}`.
/// The `a = 2` and `(1-a)b = 1` identities are evaluated at those values
/// (keeping `b`, respectively `a`); the duality needs `b != 0`.
pub fn cross_divergence_identities(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    h: &Density,
    a: f64,
    b: f64,
) -> Result<IdentityReport> {
    same_support(&[f, g, h])?;
    if a == 1.0 || b == 0.0 || near(a, 1.0) {
        return Err(Error::DegenerateParameters(format!("identities need a != 1 and b != 0, got a={a}, b={b}")));
    }
    let cd = |p: &Density, q: &Density, r: &Density, a: f64, b: f64| fx.cross_divergence(p, q, r, a, b).map(|e| e.value);
    let div = |p: &Density, q: &Density, order: f64| fx.renyi_divergence(p, q, order).map(|e| e.value);
    let mut out = Vec::new();
    let mut push = |name: &'static str, lhs: f64, rhs: f64| {
        out.push(IdentityResidual { name, lhs, rhs, residual: (lhs - rhs).abs() });
    };
    push("f=g: -b D_{1+b(a-1)}[f||h]", cd(f, f, h, a, b)?, -b * div(f, h, 1.0 + b * (a - 1.0))?);
    let order = 1.0 + (a - 1.0) * (b - 1.0);
    let rhs = if b == 1.0 { 0.0 } else { (1.0 - b) * div(f, h, order)? };
    push("g=h: (1-b) D_{1+(a-1)(b-1)}[f||h]", cd(f, h, h, a, b)?, rhs);
    push("f=h: D_{2-a}[f||g]", cd(f, g, f, a, b)?, div(f, g, 2.0 - a)?);
    push("b=0: D_{2-a}[f||g]", cd(f, g, h, a, 0.0)?, div(f, g, 2.0 - a)?);
    push("a=2: b H̃_{b+1}[g;f||h]", cd(f, g, h, 2.0, b)?, b * cd(g, f, h, b + 1.0, 1.0)?);
    if !near(a, 1.0 - 1.0 / CONDITIONING_RADIUS) {
        let b1 = 1.0 / (1.0 - a);
        push("(1-a)b=1: H̃_a[h;g||f]", cd(f, g, h, a, b1)?, cd(h, g, f, a, 1.0)?);
    }
    let (a_bar, b_bar) = (1.0 + b * (1.0 - a), 1.0 / b);
    push("duality: -b H̃_{1+b(1-a),1/b}[f;h||g]", cd(f, g, h, a, b)?, -b * cd(f, h, g, a_bar, b_bar)?);
    let max_residual = out.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(IdentityReport { identities: out, max_residual })
}
