//! Measure-preserving transformations `f(x) dx = 𝒪[f](y) dy` and their
//! reciprocals `𝒪̄[g] = (g/f) 𝒪[f]`, driven by `y'(x) = ±f(x) / 𝒪[f](x)`.
//!
//! Two computation paths:
//!
//! * the pullback path rewrites a y-domain integral as one x-domain
//!   quadrature (`dy = |y'| dx`); inequality checkers use only this path;
//! * the grid path builds `y(x)` numerically on quantile nodes of `f`,
//!   inverts it by monotone cubic interpolation and integrates over `y`.
//!   It exists to cross-check the pullback path.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::densities::parse::Args;
use crate::densities::{ln_abs_derivative_jet, same_support, Density};
use crate::error::{Error, Result};
use crate::functionals::{Estimate, Functionals};
use crate::jet::Jet;
use crate::quadrature::{integrate, CumulativeTable, Interval, QuadratureConfig};

/// Tail mass left out of a grid map on each side.
pub const TAIL_MASS: f64 = 1e-12;
/// Equal-mass cells in the bulk of a grid map.
pub const GRID_CELLS: usize = 4096;
/// Bulk cells next to each end that are split four ways.
const REFINED_CELLS: usize = 16;
/// Geometric tail levels per halving of the tail mass.
const TAIL_LEVELS_PER_OCTAVE: usize = 16;
const TABLE_PANELS: usize = 256;

#[derive(Debug, Clone)]
pub enum TransformSpec {
    /// `𝒪[f] = f^ξ`, `y' = f^{1-ξ}`.
    Escort { xi: f64 },
    /// `𝒪[f] = (f/h)^ξ`, `y' = f^{1-ξ} h^ξ`.
    RelativeEscort { h: Density, xi: f64 },
    /// `𝒪[f] = f^a / |f'|^b`, `y' = f^{1-a} |f'|^b`; needs decreasing `f`.
    Down { a: f64, b: f64 },
    /// `𝒪[f] = |(a-2)x|^{1/(2-a)}`, `y' = -|(a-2)x|^{1/(a-2)} f`.
    Up { a: f64 },
    /// `𝒪[f] = e^{-x}`, `y' = -e^x f`.
    UpExp,
}

impl TransformSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TransformSpec::Escort { .. } => "escort",
            TransformSpec::RelativeEscort { .. } => "relative_escort",
            TransformSpec::Down { .. } => "down",
            TransformSpec::Up { .. } => "up",
            TransformSpec::UpExp => "up_exp",
        }
    }

    /// Parses `escort:xi=2`, `relative_escort:h=(exponential:rate=2),xi=1`,
    /// `down:a=1,b=1`, `up:a=3` or `up_exp`.
    pub fn parse(input: &str) -> Result<Self> {
        let mut a = Args::split(input)?;
        let spec = match a.family {
            "escort" => TransformSpec::Escort { xi: a.number("xi", None)? },
            "relative_escort" => {
                let h = a.density("h")?;
                TransformSpec::RelativeEscort { h, xi: a.number("xi", None)? }
            }
            "down" => TransformSpec::Down { a: a.number("a", None)?, b: a.number("b", None)? },
            "up" => TransformSpec::Up { a: a.number("a", None)? },
            "up_exp" => TransformSpec::UpExp,
            other => return Err(a.fail(format!("unknown transform `{other}`"))),
        };
        a.finish()?;
        Ok(spec)
    }

    /// Checks the preconditions of the transformation for `f`.
    pub fn validate(&self, f: &Density) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            TransformSpec::Escort { xi } => finite(*xi, "ξ"),
            TransformSpec::RelativeEscort { h, xi } => {
                finite(*xi, "ξ")?;
                same_support(&[f, h])
            }
            TransformSpec::Down { a, b } => {
                finite(*a, "a")?;
                finite(*b, "b")?;
                f.require_order(1)?;
                if !f.is_decreasing() {
                    return Err(Error::PreconditionViolated(format!("down transformation needs a decreasing density, {f} is not")));
                }
                Ok(())
            }
            TransformSpec::Up { a } => {
                finite(*a, "a")?;
                if *a == 2.0 {
                    return Err(Error::DegenerateParameters("up transformation with a = 2 is `up_exp`".into()));
                }
                if f.support().lo() < 0.0 {
                    return Err(Error::PreconditionViolated(format!(
                        "up transformation needs support inside (0, inf), got ({}, {})",
                        f.support().lo(),
                        f.support().hi()
                    )));
                }
                Ok(())
            }
            TransformSpec::UpExp => Ok(()),
        }
    }

    /// `y` decreases along `x` (the up transformations).
    pub fn is_decreasing(&self) -> bool {
        matches!(self, TransformSpec::Up { .. } | TransformSpec::UpExp)
    }

    /// Order of `f` needed for `ln 𝒪[f]` (one more for its slope).
    fn base_order(&self) -> usize {
        match self {
            TransformSpec::Down { b, .. } if *b != 0.0 => 1,
            _ => 0,
        }
    }

    fn singular_points(&self) -> Vec<f64> {
        match self {
            TransformSpec::Up { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Series of `ln 𝒪[f]` at `x`.
    pub fn ln_image_jet(&self, f: &Density, x: f64) -> Result<Jet> {
        let l = f.log_jet(x)?;
        Ok(match self {
            TransformSpec::Escort { xi } => l.scale(*xi),
            TransformSpec::RelativeEscort { h, xi } => (l - h.log_jet(x)?).scale(*xi),
            TransformSpec::Down { a, b } => {
                if *b == 0.0 {
                    l.scale(*a)
                } else {
                    l.scale(*a) - ln_abs_derivative_jet(&l).scale(*b)
                }
            }
            TransformSpec::Up { a } => Jet::variable(x).scale(a - 2.0).ln_abs().scale(1.0 / (2.0 - a)),
            TransformSpec::UpExp => Jet::variable(x).scale(-1.0),
        })
    }

    /// `ln 𝒪[f](x)`.
    pub fn ln_image(&self, f: &Density, x: f64) -> Result<f64> {
        Ok(self.ln_image_jet(f, x)?.value())
    }

    /// `ln |y'(x)| = ln f - ln 𝒪[f]`.
    pub fn ln_abs_speed(&self, f: &Density, x: f64) -> Result<f64> {
        Ok(f.ln_pdf(x)? - self.ln_image(f, x)?)
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::Escort { xi } => write!(f, "escort:xi={xi}"),
            TransformSpec::RelativeEscort { h, xi } => write!(f, "relative_escort:h=({h}),xi={xi}"),
            TransformSpec::Down { a, b } => write!(f, "down:a={a},b={b}"),
            TransformSpec::Up { a } => write!(f, "up:a={a}"),
            TransformSpec::UpExp => write!(f, "up_exp"),
        }
    }
}

impl Serialize for TransformSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

// ---- pullback path ----

/// Exponents of the y-domain integrand `𝒪[f]^image · 𝒪̄[g]^reciprocal · |d𝒪[f]/dy|^slope · |y|^position`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PullbackForm {
    pub image: f64,
    pub reciprocal: f64,
    pub slope: f64,
    pub position: f64,
}

fn lin(c: f64, v: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * v
    }
}

/// `ln ∫ 𝒪[f]^e1 𝒪̄[g]^e2 |d𝒪[f]/dy|^e3 |y|^e4 dy`, evaluated as
/// `ln ∫ f 𝒪^{e1-1} ((g/f) 𝒪)^{e2} (|L'| 𝒪² / f)^{e3} |y(x)|^{e4} dx`
/// with `L = ln 𝒪[f]` as a function of `x`.
///
/// `|y|` is only meaningful for the up transformations, whose `y` is
/// anchored at the right end of the support; it needs a finite tail there.
pub fn pullback_expectation(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    spec: &TransformSpec,
    form: PullbackForm,
) -> Result<Estimate> {
    spec.validate(f)?;
    same_support(&[f, g])?;
    if form.slope != 0.0 {
        f.require_order(spec.base_order() + 1)?;
        if let TransformSpec::RelativeEscort { h, .. } = spec {
            h.require_order(1)?;
        }
    }
    let table = if form.position == 0.0 {
        None
    } else {
        Some(position_table(fx, f, spec)?)
    };
    let singular = spec.singular_points();
    fx.ln_integral(&[f, g], &singular, |x| {
        let lf = f.ln_pdf(x)?;
        let jet = spec.ln_image_jet(f, x)?;
        let lo = jet.value();
        let mut v = lf + lin(form.image - 1.0, lo);
        if form.reciprocal != 0.0 {
            v += form.reciprocal * (g.ln_pdf(x)? - lf + lo);
        }
        if form.slope != 0.0 {
            let dl = jet.derivative(1);
            if dl.is_nan() {
                return Err(Error::NotDifferentiable { family: f.to_string(), order: spec.base_order() + 1 });
            }
            v += form.slope * (dl.abs().ln() + 2.0 * lo - lf);
        }
        if let Some((table, w)) = &table {
            v += form.position * table.refine(|t| w(t), x)?.ln();
        }
        Ok(v)
    })
}

type Weight = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Table of `|y(x)| = ∫_x^hi |y'|` for the up transformations.
fn position_table(fx: &Functionals, f: &Density, spec: &TransformSpec) -> Result<(CumulativeTable, Weight)> {
    if !spec.is_decreasing() {
        return Err(Error::InvalidParameter(format!("|y| has no canonical anchor for `{}`", spec.kind())));
    }
    let (f2, s2) = (f.clone(), spec.clone());
    let w: Weight = Box::new(move |t| s2.ln_abs_speed(&f2, t).map(f64::exp).unwrap_or(f64::NAN));
    let cfg = f.quad_config(&fx.cfg).with_points(&spec.singular_points(), &[]);
    let table = CumulativeTable::tail(&w, f.support(), TABLE_PANELS, &cfg)?;
    Ok((table, w))
}

/// `H_γ[𝒪[f]; 𝒪̄[g]]` through the pullback path.
pub fn transformed_cross_entropy(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    spec: &TransformSpec,
    gamma: f64,
) -> Result<Estimate> {
    if gamma == 1.0 {
        spec.validate(f)?;
        same_support(&[f, g])?;
        let singular = spec.singular_points();
        return fx.integral(&[f, g], &singular, |x| {
            let lf = f.ln_pdf(x)?;
            Ok(-lf.exp() * (g.ln_pdf(x)? - lf + spec.ln_image(f, x)?))
        });
    }
    let form = PullbackForm { image: 1.0, reciprocal: gamma - 1.0, ..Default::default() };
    let ln_i = pullback_expectation(fx, f, g, spec, form)?;
    Ok(Estimate { value: ln_i.value / (1.0 - gamma), error: (ln_i.error / (1.0 - gamma)).abs() })
}

/// `D_γ[𝒪[f] || 𝒪̄[g]]` through the pullback path.
pub fn transformed_divergence(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    spec: &TransformSpec,
    gamma: f64,
) -> Result<Estimate> {
    if gamma == 1.0 {
        return fx.kl_divergence(f, g);
    }
    let form = PullbackForm { image: gamma, reciprocal: 1.0 - gamma, ..Default::default() };
    let ln_i = pullback_expectation(fx, f, g, spec, form)?;
    Ok(Estimate { value: ln_i.value / (gamma - 1.0), error: (ln_i.error / (gamma - 1.0)).abs() })
}

/// `R_α[𝒪[f]]` through the pullback path.
pub fn transformed_renyi(fx: &Functionals, f: &Density, spec: &TransformSpec, alpha: f64) -> Result<Estimate> {
    if alpha == 1.0 {
        return transformed_cross_entropy(fx, f, f, spec, 1.0);
    }
    let form = PullbackForm { image: alpha, ..Default::default() };
    let ln_i = pullback_expectation(fx, f, f, spec, form)?;
    Ok(Estimate { value: ln_i.value / (1.0 - alpha), error: (ln_i.error / (1.0 - alpha)).abs() })
}

/// `R_α[𝒪[f]]` written as a functional of `f`:
///
/// | transform            | reduction                                            |
/// |----------------------|------------------------------------------------------|
/// | escort ξ             | `ξ R_{1+(α-1)ξ}[f]`                                   |
/// | relative escort h, ξ | `-ξ D_{1+(α-1)ξ}[f||h]`                               |
/// | down a, b            | `ln ∫ f^{1+a(α-1)} |f'|^{b(1-α)} / (1-α)`            |
/// | up a                 | `ln|a-2|/(a-2) + ln ∫ f |x|^{(α-1)/(2-a)} / (1-α)`   |
/// | up, a = 2            | `ln ∫ f e^{(1-α)x} / (1-α)`                          |
pub fn closed_renyi(fx: &Functionals, f: &Density, spec: &TransformSpec, alpha: f64) -> Result<Estimate> {
    spec.validate(f)?;
    if alpha == 1.0 {
        return Err(Error::DegenerateParameters("closed reductions need α != 1".into()));
    }
    let c = 1.0 - alpha;
    let scaled = |e: Estimate, s: f64, shift: f64| Estimate { value: shift + s * e.value, error: (s * e.error).abs() };
    match spec {
        TransformSpec::Escort { xi } => {
            if *xi == 0.0 {
                return Ok(Estimate { value: 0.0, error: 0.0 });
            }
            Ok(scaled(fx.renyi_entropy(f, 1.0 + (alpha - 1.0) * xi)?, *xi, 0.0))
        }
        TransformSpec::RelativeEscort { h, xi } => {
            if *xi == 0.0 {
                return Ok(Estimate { value: 0.0, error: 0.0 });
            }
            Ok(scaled(fx.renyi_divergence(f, h, 1.0 + (alpha - 1.0) * xi)?, -xi, 0.0))
        }
        TransformSpec::Down { a, b } => Ok(scaled(fx.ln_cross_fisher_integral(f, f, 2.0 - a, *b, c)?, 1.0 / c, 0.0)),
        TransformSpec::Up { a } => {
            let shift = (a - 2.0).abs().ln() / (a - 2.0);
            Ok(scaled(fx.ln_absolute_moment(f, (alpha - 1.0) / (2.0 - a))?, 1.0 / c, shift))
        }
        TransformSpec::UpExp => Ok(scaled(fx.ln_exp_moment(f, c)?, 1.0 / c, 0.0)),
    }
}

/// `H_γ[𝒪[f]; 𝒪̄[g]]` written as a functional of the pair:
///
/// | transform            | reduction                                              |
/// |----------------------|--------------------------------------------------------|
/// | escort ξ             | escort cross-entropy `H_{γ,ξ}[f;g]`                    |
/// | relative escort h, ξ | cross-divergence `H̃_{γ,ξ}[f;g||h]`                     |
/// | down a, b            | `ln` cross-Fisher integral `(2-a, b, 1-γ)` over `1-γ`  |
/// | up a                 | `ln|2-a|/(a-2) + ln ∫ f^{2-γ} g^{γ-1} |x|^{(γ-1)/(2-a)} / (1-γ)` |
/// | up, a = 2            | `ln ∫ f^{2-γ} g^{γ-1} e^{(1-γ)x} / (1-γ)`              |
pub fn closed_cross_entropy(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    spec: &TransformSpec,
    gamma: f64,
) -> Result<Estimate> {
    spec.validate(f)?;
    if gamma == 1.0 {
        return Err(Error::DegenerateParameters("closed reductions need γ != 1".into()));
    }
    let c = 1.0 - gamma;
    let scaled = |e: Estimate, shift: f64| Estimate { value: shift + e.value / c, error: (e.error / c).abs() };
    match spec {
        TransformSpec::Escort { xi } => fx.escort_cross_entropy(f, g, gamma, *xi),
        TransformSpec::RelativeEscort { h, xi } => fx.cross_divergence(f, g, h, gamma, *xi),
        TransformSpec::Down { a, b } => Ok(scaled(fx.ln_cross_fisher_integral(f, g, 2.0 - a, *b, c)?, 0.0)),
        TransformSpec::Up { a } => {
            let shift = (2.0 - a).abs().ln() / (a - 2.0);
            Ok(scaled(fx.ln_cross_moment(f, g, (gamma - 1.0) / (2.0 - a), gamma)?, shift))
        }
        TransformSpec::UpExp => Ok(scaled(fx.ln_exp_cross_moment(f, g, gamma)?, 0.0)),
    }
}

// ---- grid path ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Numeric change of variable `y(x)` on a truncated window of `f`.
#[derive(Debug, Clone, Serialize)]
pub struct PushforwardMap {
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// `y'(x_i)`.
    pub weight: Vec<f64>,
    pub direction: Direction,
    /// Mass of `f` outside `[x_0, x_N]`.
    pub truncated_mass: f64,
}

impl PushforwardMap {
    /// `(min y, max y)`.
    pub fn y_range(&self) -> (f64, f64) {
        let (a, b) = (self.y_grid[0], *self.y_grid.last().unwrap());
        (a.min(b), a.max(b))
    }

    /// `x(y)`: bisection on the table, then monotone cubic Hermite with
    /// slopes `1/y'(x_i)` limited as in Fritsch–Carlson.
    pub fn x_of(&self, y: f64) -> f64 {
        let n = self.y_grid.len();
        let inc = self.direction == Direction::Increasing;
        let key = |i: usize| if inc { self.y_grid[i] } else { -self.y_grid[i] };
        let t = if inc { y } else { -y };
        if t <= key(0) {
            return self.x_grid[0];
        }
        if t >= key(n - 1) {
            return self.x_grid[n - 1];
        }
        let (mut lo, mut hi) = (0, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if key(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (ya, yb) = (self.y_grid[lo], self.y_grid[hi]);
        let (xa, xb) = (self.x_grid[lo], self.x_grid[hi]);
        let h = yb - ya;
        let secant = (xb - xa) / h;
        let mut ma = 1.0 / self.weight[lo];
        let mut mb = 1.0 / self.weight[hi];
        if !ma.is_finite() || ma * secant < 0.0 {
            ma = if ma.is_finite() { 0.0 } else { 3.0 * secant };
        }
        if !mb.is_finite() || mb * secant < 0.0 {
            mb = if mb.is_finite() { 0.0 } else { 3.0 * secant };
        }
        let (al, be) = (ma / secant, mb / secant);
        let r = al * al + be * be;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            ma *= tau;
            mb *= tau;
        }
        let s = (y - ya) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let x = (2.0 * s3 - 3.0 * s2 + 1.0) * xa
            + (s3 - 2.0 * s2 + s) * h * ma
            + (-2.0 * s3 + 3.0 * s2) * xb
            + (s3 - s2) * h * mb;
        x.clamp(xa.min(xb), xa.max(xb))
    }

    /// `∫ φ(x(y)) dy` over the y-range, panel by panel.
    pub fn integrate_y<P: Fn(f64) -> Result<f64>>(&self, phi: P) -> Result<f64> {
        let cfg = QuadratureConfig { rel_tol: 1e-10, abs_tol: 1e-16, max_subdivisions: 200, ..Default::default() };
        let mut total = 0.0;
        for w in self.y_grid.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            let failure = RefCell::new(None);
            let r = integrate(
                |y| match phi(self.x_of(y)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                },
                Interval::new(a, b)?,
                &cfg,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            total += r.value;
        }
        Ok(total)
    }
}

/// Lower-side or upper-side probability level.
#[derive(Clone, Copy)]
enum Level {
    Lower(f64),
    Upper(f64),
}

fn quantile_levels() -> Vec<Level> {
    let cell = 1.0 / GRID_CELLS as f64;
    let mut lower = Vec::new();
    // geometric tail from TAIL_MASS until its steps reach the refined spacing
    let ratio = 2f64.powf(1.0 / TAIL_LEVELS_PER_OCTAVE as f64);
    let mut m = TAIL_MASS;
    while m * (ratio - 1.0) < cell / 4.0 {
        lower.push(m);
        m *= ratio;
    }
    let first = (m / (cell / 4.0)).ceil() as usize;
    for k in first..4 * REFINED_CELLS {
        lower.push(k as f64 * cell / 4.0);
    }
    let mut levels: Vec<Level> = lower.iter().map(|&m| Level::Lower(m)).collect();
    let half = GRID_CELLS / 2;
    for k in REFINED_CELLS..=half {
        levels.push(Level::Lower(k as f64 * cell));
    }
    for k in (REFINED_CELLS..half).rev() {
        levels.push(Level::Upper(k as f64 * cell));
    }
    levels.extend(lower.iter().rev().map(|&m| Level::Upper(m)));
    levels
}

/// Solves `∫_lo^x f = m` (or `∫_x^hi f = m`) by safeguarded Newton.
fn quantile(f: &Density, table: &CumulativeTable, level: Level) -> Result<f64> {
    let xs = table.abscissae();
    let pdf = |t: f64| f.pdf(t).unwrap_or(f64::NAN);
    let (mass, sign, values) = match level {
        Level::Lower(m) => (m, 1.0, table.lower_values()),
        Level::Upper(m) => (m, -1.0, table.upper_values()),
    };
    // bracket [xs[i], xs[i+1]] with the target between the node values
    let n = xs.len() - 1;
    let mut i = 0;
    while i + 1 < n && sign * (values[i + 1] - mass) < 0.0 {
        i += 1;
    }
    let (mut a, mut b) = (xs[i], xs[i + 1]);
    let residual = |x: f64| -> Result<f64> {
        Ok(match level {
            Level::Lower(m) => table.refine_lower(pdf, x)? - m,
            Level::Upper(m) => table.refine(pdf, x)? - m,
        })
    };
    let finite_mid = |a: f64, b: f64| {
        if a.is_finite() && b.is_finite() {
            0.5 * (a + b)
        } else if a.is_finite() {
            a + 1.0 + a.abs()
        } else {
            b - 1.0 - b.abs()
        }
    };
    let mut x = finite_mid(a, b);
    for _ in 0..200 {
        let r = residual(x)?;
        if r.abs() <= 1e-10 * mass {
            return Ok(x);
        }
        // residual grows with x for lower levels, shrinks for upper levels
        if sign * r < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let d = sign * f.pdf(x)?;
        let newton = x - r / d;
        x = if d != 0.0 && newton > a && newton < b { newton } else { finite_mid(a, b) };
        if a.is_finite() && b.is_finite() && (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Builds `y(x)` for `f` on equal-mass quantile nodes.
pub fn build_map(fx: &Functionals, f: &Density, spec: &TransformSpec) -> Result<PushforwardMap> {
    spec.validate(f)?;
    if let TransformSpec::UpExp = spec {
        fx.ln_exp_moment(f, 1.0)
            .map_err(|e| Error::DivergentIntegral(format!("up transformation with a = 2 needs ∫ e^x f < inf: {e}")))?;
    }
    let cfg = f.quad_config(&fx.cfg).with_points(&spec.singular_points(), &[]);
    let table = CumulativeTable::tail(|t| f.pdf(t).unwrap_or(f64::NAN), f.support(), TABLE_PANELS, &cfg)?;
    let mut x_grid: Vec<f64> = Vec::new();
    for level in quantile_levels() {
        let x = quantile(f, &table, level)?;
        if x_grid.last().is_none_or(|&p| x > p) && f.support().contains(x) {
            x_grid.push(x);
        }
    }
    if x_grid.len() < 16 {
        return Err(Error::InvalidParameter(format!("could not place grid nodes for {f}")));
    }
    let pdf = |t: f64| f.pdf(t).unwrap_or(f64::NAN);
    let (x0, xn) = (x_grid[0], *x_grid.last().unwrap());
    let truncated_mass = table.refine_lower(pdf, x0)? + table.refine(pdf, xn)?;

    let speed = |t: f64| spec.ln_abs_speed(f, t).map(f64::exp).unwrap_or(f64::NAN);
    let mut panels = Vec::with_capacity(x_grid.len() - 1);
    for w in x_grid.windows(2) {
        let r = integrate(speed, Interval::new(w[0], w[1])?, &cfg)?;
        if !r.converged || !r.value.is_finite() {
            return Err(Error::DivergentIntegral(format!("transformation weight of {f} on ({}, {})", w[0], w[1])));
        }
        panels.push(r.value);
    }
    let n = x_grid.len();
    let mut y_grid = vec![0.0; n];
    let direction = if spec.is_decreasing() { Direction::Decreasing } else { Direction::Increasing };
    match direction {
        Direction::Increasing => {
            // One-parameter down maps have y = f^{2-a}/(a-2) (or -ln f at a = 2)
            // and accumulate from the end with the smaller |y|; other increasing
            // maps are anchored at 0 at the end with the smaller panels. Either
            // way the compressed end stays resolved.
            let exact = |x: f64| -> Result<Option<f64>> {
                Ok(match spec {
                    TransformSpec::Down { a, b } if *b == 1.0 => {
                        let l = f.ln_pdf(x)?;
                        Some(if *a == 2.0 { -l } else { ((2.0 - a) * l).exp() / (a - 2.0) })
                    }
                    _ => None,
                })
            };
            let (first, last) = (exact(x0)?, exact(xn)?);
            let from_start = match (first, last) {
                (Some(p), Some(q)) => p.abs() <= q.abs(),
                _ => panels[0] <= panels[n - 2],
            };
            let anchor = |v: Option<f64>| v.unwrap_or(0.0);
            if from_start {
                y_grid[0] = anchor(first);
                for i in 0..n - 1 {
                    y_grid[i + 1] = y_grid[i] + panels[i];
                }
            } else {
                y_grid[n - 1] = anchor(last);
                for i in (0..n - 1).rev() {
                    y_grid[i] = y_grid[i + 1] - panels[i];
                }
            }
        }
        Direction::Decreasing => {
            let hi = f.support().hi();
            let tail = integrate(speed, Interval::new(xn, hi)?, &cfg)?;
            if !tail.converged || !tail.value.is_finite() {
                return Err(Error::DivergentIntegral(format!("transformation weight of {f} beyond {xn}")));
            }
            y_grid[n - 1] = tail.value;
            for i in (0..n - 1).rev() {
                y_grid[i] = y_grid[i + 1] + panels[i];
            }
        }
    }
    // drop nodes whose y does not move in floating point
    let mut keep = vec![true; n];
    let mut last = 0;
    for i in 1..n {
        if y_grid[i] == y_grid[last] {
            keep[i] = false;
        } else {
            last = i;
        }
    }
    let mut it = keep.iter();
    x_grid.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    y_grid.retain(|_| *it.next().unwrap());
    let sign = if direction == Direction::Increasing { 1.0 } else { -1.0 };
    let weight = x_grid.iter().map(|&x| sign * speed(x)).collect::<Vec<_>>();
    if weight.iter().any(|w| w.is_nan()) {
        return Err(Error::NonFiniteIntegrand { x: f64::NAN });
    }
    Ok(PushforwardMap { x_grid, y_grid, weight, direction, truncated_mass })
}

/// `𝒪[f]` (or `𝒪̄[g]`) tabulated through a shared map.
#[derive(Debug, Clone)]
pub struct TransformedDensity {
    pub map: Arc<PushforwardMap>,
    /// Density values at `map.y_grid`.
    pub values: Vec<f64>,
    f: Density,
    g: Option<Density>,
    spec: TransformSpec,
}

impl TransformedDensity {
    pub fn spec(&self) -> &TransformSpec {
        &self.spec
    }

    /// `ln` of the transformed density at the y-point image of `x`.
    pub fn ln_value_at_x(&self, x: f64) -> Result<f64> {
        let lo = self.spec.ln_image(&self.f, x)?;
        match &self.g {
            None => Ok(lo),
            Some(g) => Ok(lo + g.ln_pdf(x)? - self.f.ln_pdf(x)?),
        }
    }

    /// Density value at `y`, computed through `x(y)`.
    pub fn value(&self, y: f64) -> Result<f64> {
        Ok(self.ln_value_at_x(self.map.x_of(y))?.exp())
    }

    /// `∫ φ(y) dy` over the window.
    pub fn mass(&self) -> Result<f64> {
        self.map.integrate_y(|x| Ok(self.ln_value_at_x(x)?.exp()))
    }

    /// The reciprocal transform of `g` through this map.
    pub fn reciprocal(&self, g: &Density) -> Result<TransformedDensity> {
        same_support(&[&self.f, g])?;
        let mut t = TransformedDensity {
            map: self.map.clone(),
            values: Vec::new(),
            f: self.f.clone(),
            g: Some(g.clone()),
            spec: self.spec.clone(),
        };
        t.values = tabulate(&t)?;
        Ok(t)
    }

    /// `(y_i, value_i)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.map.y_grid.iter().copied().zip(self.values.iter().copied())
    }
}

fn tabulate(t: &TransformedDensity) -> Result<Vec<f64>> {
    t.map.x_grid.iter().map(|&x| Ok(t.ln_value_at_x(x)?.exp())).collect()
}

/// `𝒪[f]` on a quantile grid of `f`.
pub fn transform(fx: &Functionals, f: &Density, spec: &TransformSpec) -> Result<TransformedDensity> {
    let map = Arc::new(build_map(fx, f, spec)?);
    let mut t = TransformedDensity { map, values: Vec::new(), f: f.clone(), g: None, spec: spec.clone() };
    t.values = tabulate(&t)?;
    Ok(t)
}

/// `𝒪̄[g] = (g/f) 𝒪[f]` through the map of `f`.
pub fn reciprocal_transform(fx: &Functionals, g: &Density, f: &Density, spec: &TransformSpec) -> Result<TransformedDensity> {
    same_support(&[f, g])?;
    transform(fx, f, spec)?.reciprocal(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreservationCheck {
    /// `D_γ` of the transformed pair by quadrature over `y`.
    pub grid: f64,
    /// `D_γ[f||g]` by quadrature over `x`.
    pub direct: f64,
    pub gap: f64,
}

/// `D_γ[𝒪[f]||𝒪̄[g]]` on the grid against `D_γ[f||g]`.
pub fn verify_divergence_preservation(
    fx: &Functionals,
    f: &Density,
    g: &Density,
    spec: &TransformSpec,
    gamma: f64,
) -> Result<PreservationCheck> {
    let tf = transform(fx, f, spec)?;
    let tg = tf.reciprocal(g)?;
    let grid = grid_divergence(&tf, &tg, gamma)?;
    let direct = fx.renyi_divergence(f, g, gamma)?.value;
    Ok(PreservationCheck { grid, direct, gap: (grid - direct).abs() })
}

/// `D_γ` between two densities tabulated through the same map.
pub fn grid_divergence(p: &TransformedDensity, q: &TransformedDensity, gamma: f64) -> Result<f64> {
    if !Arc::ptr_eq(&p.map, &q.map) {
        return Err(Error::InvalidParameter("grid divergence needs densities on the same map".into()));
    }
    if gamma == 1.0 {
        return p.map.integrate_y(|x| {
            let (a, b) = (p.ln_value_at_x(x)?, q.ln_value_at_x(x)?);
            Ok(a.exp() * (a - b))
        });
    }
    let i = p.map.integrate_y(|x| Ok((gamma * p.ln_value_at_x(x)? + (1.0 - gamma) * q.ln_value_at_x(x)?).exp()))?;
    Ok(i.ln() / (gamma - 1.0))
}

/// `R_α` of a tabulated density by quadrature over `y`.
pub fn grid_renyi(t: &TransformedDensity, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return t.map.integrate_y(|x| {
            let l = t.ln_value_at_x(x)?;
            Ok(-l.exp() * l)
        });
    }
    let i = t.map.integrate_y(|x| Ok((alpha * t.ln_value_at_x(x)?).exp()))?;
    Ok(i.ln() / (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedRenyi {
    pub closed: Estimate,
    pub grid: Option<f64>,
    pub difference: Option<f64>,
}

/// Closed reduction of `R_α[𝒪[f]]`; with `verify` also its grid value.
pub fn renyi_of_transformed(
    fx: &Functionals,
    f: &Density,
    spec: &TransformSpec,
    alpha: f64,
    verify: bool,
) -> Result<TransformedRenyi> {
    let closed = closed_renyi(fx, f, spec, alpha)?;
    if !verify {
        return Ok(TransformedRenyi { closed, grid: None, difference: None });
    }
    let grid = grid_renyi(&transform(fx, f, spec)?, alpha)?;
    Ok(TransformedRenyi { closed, grid: Some(grid), difference: Some(grid - closed.value) })
}
