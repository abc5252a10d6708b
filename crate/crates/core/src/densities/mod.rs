//! One-dimensional probability densities.
//!
//! A [`Density`] is immutable and cheap to clone (shared behind an `Arc`).
//! Every family evaluates `ln f` together with its derivatives as a [`Jet`],
//! so `f`, `f'`, `f''` and composite quantities such as `f f'' / f'^2` are
//! available without underflow in the tails. Numeric densities apply a
//! [`Modifier`] to a base density and are normalized by quadrature once, at
//! construction.

pub(crate) mod parse;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::quadrature::{integrate, integrate_fallible, CumulativeTable, Interval, QuadratureConfig};

pub use parse::parse;

/// Number of panels in the tail table built for [`Modifier::TailTilt`].
const TAIL_TABLE_PANELS: usize = 256;

#[derive(Debug, Clone)]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Gaussian { mu: f64, sigma: f64 },
    /// `∝ exp(-(x/scale)^k)` on `(0, inf)`.
    HalfGeneralizedNormal { k: f64, scale: f64 },
    /// `∝ exp(-|x/scale|^k)` on the real line.
    GeneralizedNormal { k: f64, scale: f64 },
    /// `(2-q) rate [1 - (1-q) rate x]^{1/(1-q)}`; bounded support when `q < 1`.
    QExponential { q: f64, rate: f64 },
    Weibull { shape: f64, scale: f64 },
    /// Stacy form `p / (a^d Γ(d/p)) x^{d-1} exp(-(x/a)^p)`.
    GeneralizedGamma { a: f64, d: f64, p: f64 },
    Pareto { xm: f64, alpha: f64 },
    Rayleigh { sigma: f64 },
    Numeric { base: Density, modifier: Modifier },
}

/// Reweighting applied to a base density `f`; the result is renormalized.
#[derive(Debug, Clone)]
pub enum Modifier {
    /// `f^e`
    PowerOfBase(f64),
    /// `f |x|^r`
    PowerTilt(f64),
    /// `f e^{s x}`
    ExpTilt(f64),
    /// `f^a |f'|^b`
    DerivativeTilt { a: f64, b: f64 },
    /// `f T^r` with `T(x) = ∫_x^hi |(index-2) t|^{1/(index-2)} f(t) dt`
    TailTilt { index: f64, r: f64 },
    /// `f (f/h)^r`
    RelativeTilt { h: Density, r: f64 },
    /// `f^a |f'|^b |f f''/f'^2 - shift|^c`
    CurvatureTilt { a: f64, b: f64, c: f64, shift: f64 },
}

#[derive(Clone)]
pub struct Density {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    family: Family,
    support: Interval,
    /// `ln` of the quadrature mass of the unnormalized numeric density.
    ln_mass: f64,
    order: usize,
    center: f64,
    scale: f64,
    singular: Vec<f64>,
    tail: Option<CumulativeTable>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({self})")
    }
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(what.to_string()))
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    require(v.is_finite() && v > 0.0, &format!("{name} must be finite and > 0, got {v}"))
}

fn finite(v: f64, name: &str) -> Result<()> {
    require(v.is_finite(), &format!("{name} must be finite, got {v}"))
}

// k (k-1) ... (k-n+1)
fn falling(k: f64, n: usize) -> f64 {
    (0..n).map(|i| k - i as f64).product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Adds the derivatives of `c ln x`.
fn add_log(d: &mut [f64; MAX_ORDER + 1], c: f64, x: f64) {
    d[0] += c * x.ln();
    for n in 1..=MAX_ORDER {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        d[n] += c * sign * factorial(n - 1) / x.powi(n as i32);
    }
}

/// Adds the derivatives (in `u`) of `-(u/s)^k`.
fn add_power(d: &mut [f64; MAX_ORDER + 1], k: f64, s: f64, u: f64) {
    let sk = s.powf(k);
    for (n, dn) in d.iter_mut().enumerate() {
        let fk = falling(k, n);
        if fk != 0.0 {
            *dn -= fk * u.powf(k - n as f64) / sk;
        }
    }
}

impl Family {
    fn validate(&self) -> Result<()> {
        match *self {
            Family::Uniform { lo, hi } => {
                finite(lo, "lo")?;
                finite(hi, "hi")?;
                require(lo < hi, "uniform needs lo < hi")
            }
            Family::Exponential { rate } => positive(rate, "rate"),
            Family::Gaussian { mu, sigma } => {
                finite(mu, "mu")?;
                positive(sigma, "sigma")
            }
            Family::HalfGeneralizedNormal { k, scale } | Family::GeneralizedNormal { k, scale } => {
                positive(k, "k")?;
                positive(scale, "scale")
            }
            Family::QExponential { q, rate } => {
                finite(q, "q")?;
                require(q < 2.0, "q-exponential needs q < 2 to be normalizable")?;
                positive(rate, "rate")
            }
            Family::Weibull { shape, scale } => {
                positive(shape, "shape")?;
                positive(scale, "scale")
            }
            Family::GeneralizedGamma { a, d, p } => {
                positive(a, "a")?;
                positive(d, "d")?;
                positive(p, "p")
            }
            Family::Pareto { xm, alpha } => {
                positive(xm, "xm")?;
                positive(alpha, "alpha")
            }
            Family::Rayleigh { sigma } => positive(sigma, "sigma"),
            Family::Numeric { .. } => Ok(()),
        }
    }

    fn support(&self) -> Interval {
        let half = Interval::positive();
        match *self {
            Family::Uniform { lo, hi } => Interval::new(lo, hi).expect("validated"),
            Family::Gaussian { .. } | Family::GeneralizedNormal { .. } => Interval::real_line(),
            Family::QExponential { q, rate } if q < 1.0 => {
                Interval::new(0.0, 1.0 / ((1.0 - q) * rate)).expect("validated")
            }
            Family::Pareto { xm, .. } => Interval::new(xm, f64::INFINITY).expect("validated"),
            Family::Numeric { ref base, .. } => base.support(),
            _ => half,
        }
    }

    fn parametric_order(&self) -> usize {
        match *self {
            Family::Uniform { .. } => 0,
            Family::GeneralizedNormal { k, .. } => {
                if k.fract() == 0.0 && (k as i64) % 2 == 0 {
                    MAX_ORDER
                } else {
                    ((k.ceil() as usize).saturating_sub(1)).min(MAX_ORDER)
                }
            }
            _ => MAX_ORDER,
        }
    }

    /// `ln f` and its derivatives for the closed-form families.
    fn parametric_log_jet(&self, x: f64) -> Jet {
        let mut d = [0.0; MAX_ORDER + 1];
        match *self {
            Family::Uniform { lo, hi } => d[0] = -(hi - lo).ln(),
            Family::Exponential { rate } => {
                d[0] = rate.ln() - rate * x;
                d[1] = -rate;
            }
            Family::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                d[0] = -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
                d[1] = -z / sigma;
                d[2] = -1.0 / (sigma * sigma);
            }
            Family::HalfGeneralizedNormal { k, scale } => {
                d[0] = (k / scale).ln() - ln_gamma(1.0 / k);
                add_power(&mut d, k, scale, x);
            }
            Family::GeneralizedNormal { k, scale } => {
                add_power(&mut d, k, scale, x.abs());
                if x < 0.0 {
                    for (n, dn) in d.iter_mut().enumerate() {
                        if n % 2 == 1 {
                            *dn = -*dn;
                        }
                    }
                }
                d[0] += (k / (2.0 * scale)).ln() - ln_gamma(1.0 / k);
            }
            Family::QExponential { q, rate } => {
                if q == 1.0 {
                    return Family::Exponential { rate }.parametric_log_jet(x);
                }
                let w = 1.0 - (1.0 - q) * rate * x;
                d[0] = ((2.0 - q) * rate).ln() + w.ln() / (1.0 - q);
                for (n, dn) in d.iter_mut().enumerate().skip(1) {
                    *dn = -factorial(n - 1) * (1.0 - q).powi(n as i32 - 1) * (rate / w).powi(n as i32);
                }
            }
            Family::Weibull { shape, scale } => {
                d[0] = (shape / scale).ln() - (shape - 1.0) * scale.ln();
                add_log(&mut d, shape - 1.0, x);
                add_power(&mut d, shape, scale, x);
            }
            Family::GeneralizedGamma { a, d: dd, p } => {
                d[0] = p.ln() - dd * a.ln() - ln_gamma(dd / p);
                add_log(&mut d, dd - 1.0, x);
                add_power(&mut d, p, a, x);
            }
            Family::Pareto { xm, alpha } => {
                d[0] = alpha.ln() + alpha * xm.ln();
                add_log(&mut d, -(alpha + 1.0), x);
            }
            Family::Rayleigh { sigma } => {
                let s2 = sigma * sigma;
                d[0] = -2.0 * sigma.ln() - 0.5 * x * x / s2;
                d[1] = -x / s2;
                d[2] = -1.0 / s2;
                add_log(&mut d, 1.0, x);
            }
            Family::Numeric { .. } => unreachable!("numeric densities carry their own jets"),
        }
        Jet::from_derivatives(&d[..=self.parametric_order()])
    }

    /// Characteristic location and scale, used for probing and as quadrature hints.
    fn location_scale(&self) -> (f64, f64) {
        match *self {
            Family::Uniform { lo, hi } => (0.5 * (lo + hi), 0.5 * (hi - lo)),
            Family::Exponential { rate } => (0.0, 1.0 / rate),
            Family::Gaussian { mu, sigma } => (mu, sigma),
            Family::HalfGeneralizedNormal { scale, .. } | Family::GeneralizedNormal { scale, .. } => (0.0, scale),
            Family::QExponential { q, rate } => {
                if q < 1.0 {
                    (0.5 / ((1.0 - q) * rate), 0.5 / ((1.0 - q) * rate))
                } else {
                    (0.0, 1.0 / rate)
                }
            }
            Family::Weibull { scale, .. } => (0.0, scale),
            Family::GeneralizedGamma { a, d, p } => (0.0, a * (d / p).max(1.0).powf(1.0 / p)),
            Family::Pareto { xm, .. } => (xm, xm),
            Family::Rayleigh { sigma } => (0.0, sigma),
            Family::Numeric { ref base, .. } => (base.inner.center, base.inner.scale),
        }
    }

    fn declared_decreasing(&self) -> bool {
        match *self {
            Family::Exponential { .. }
            | Family::Pareto { .. }
            | Family::HalfGeneralizedNormal { .. }
            | Family::QExponential { .. } => true,
            Family::Numeric { ref base, modifier: Modifier::PowerOfBase(e) } => e > 0.0 && base.declared_decreasing(),
            Family::Numeric { ref base, modifier: Modifier::ExpTilt(s) } => s <= 0.0 && base.declared_decreasing(),
            _ => false,
        }
    }
}

impl Modifier {
    fn validate(&self, base: &Density) -> Result<()> {
        let order = base.order();
        match self {
            Modifier::PowerOfBase(e) => finite(*e, "exponent"),
            Modifier::PowerTilt(r) => finite(*r, "r"),
            Modifier::ExpTilt(s) => finite(*s, "s"),
            Modifier::DerivativeTilt { a, b } => {
                finite(*a, "a")?;
                finite(*b, "b")?;
                if *b != 0.0 && order < 1 {
                    return Err(Error::NotDifferentiable { family: base.to_string(), order: 1 });
                }
                Ok(())
            }
            Modifier::TailTilt { index, r } => {
                finite(*index, "index")?;
                finite(*r, "r")?;
                require(*index != 2.0, "tail tilt needs index != 2")
            }
            Modifier::RelativeTilt { h, r } => {
                finite(*r, "r")?;
                same_support(&[base, h])
            }
            Modifier::CurvatureTilt { a, b, c, shift } => {
                for (v, n) in [(a, "a"), (b, "b"), (c, "c"), (shift, "shift")] {
                    finite(*v, n)?;
                }
                let need = if *c != 0.0 {
                    2
                } else if *b != 0.0 {
                    1
                } else {
                    0
                };
                if order < need {
                    return Err(Error::NotDifferentiable { family: base.to_string(), order: need });
                }
                Ok(())
            }
        }
    }

    fn order(&self, base: usize) -> usize {
        match self {
            Modifier::DerivativeTilt { b, .. } if *b != 0.0 => base - 1,
            Modifier::RelativeTilt { h, .. } => base.min(h.order()),
            Modifier::CurvatureTilt { b, c, .. } => {
                if *c != 0.0 {
                    base - 2
                } else if *b != 0.0 {
                    base - 1
                } else {
                    base
                }
            }
            _ => base,
        }
    }
}

/// `ln |f'|` as a series, from the series of `ln f`.
pub fn ln_abs_derivative_jet(l: &Jet) -> Jet {
    *l + l.deriv().ln_abs()
}

/// `f f'' / f'^2 = 1 + ℓ'' / ℓ'^2` as a series.
pub fn curvature_jet(l: &Jet) -> Jet {
    let l1 = l.deriv();
    let l2 = l1.deriv();
    l2.div(&(l1 * l1)).add_const(1.0)
}

fn tail_weight(index: f64, t: f64) -> f64 {
    ((index - 2.0) * t).abs().powf(1.0 / (index - 2.0))
}

/// Fails unless all supports are exactly equal.
pub fn same_support(ds: &[&Density]) -> Result<()> {
    let first = ds[0].support();
    for d in &ds[1..] {
        let s = d.support();
        if s != first {
            return Err(Error::SupportMismatch(first.lo(), first.hi(), s.lo(), s.hi()));
        }
    }
    Ok(())
}

impl Density {
    fn closed(family: Family) -> Result<Self> {
        family.validate()?;
        let support = family.support();
        let order = family.parametric_order();
        let (center, scale) = family.location_scale();
        let mut singular = Vec::new();
        if let Family::GeneralizedNormal { .. } = family {
            singular.push(0.0);
        }
        Ok(Density {
            inner: Arc::new(Inner { family, support, ln_mass: 0.0, order, center, scale, singular, tail: None }),
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::closed(Family::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::closed(Family::Exponential { rate })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::closed(Family::Gaussian { mu, sigma })
    }

    pub fn half_generalized_normal(k: f64, scale: f64) -> Result<Self> {
        Self::closed(Family::HalfGeneralizedNormal { k, scale })
    }

    pub fn generalized_normal(k: f64, scale: f64) -> Result<Self> {
        Self::closed(Family::GeneralizedNormal { k, scale })
    }

    pub fn q_exponential(q: f64, rate: f64) -> Result<Self> {
        Self::closed(Family::QExponential { q, rate })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::closed(Family::Weibull { shape, scale })
    }

    pub fn generalized_gamma(a: f64, d: f64, p: f64) -> Result<Self> {
        Self::closed(Family::GeneralizedGamma { a, d, p })
    }

    /// Gamma with the given shape and scale.
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::generalized_gamma(scale, shape, 1.0)
    }

    pub fn pareto(xm: f64, alpha: f64) -> Result<Self> {
        Self::closed(Family::Pareto { xm, alpha })
    }

    pub fn rayleigh(sigma: f64) -> Result<Self> {
        Self::closed(Family::Rayleigh { sigma })
    }

    /// Applies `modifier` to `base` and normalizes by quadrature.
    pub fn numeric(base: &Density, modifier: Modifier) -> Result<Self> {
        modifier.validate(base)?;
        let support = base.support();
        let order = modifier.order(base.order());
        let (center, scale) = (base.inner.center, base.inner.scale);
        let mut singular = base.inner.singular.clone();
        if let Modifier::RelativeTilt { h, .. } = &modifier {
            singular.extend_from_slice(&h.inner.singular);
        }
        let needs_origin = matches!(modifier, Modifier::PowerTilt(_) | Modifier::TailTilt { .. });
        if needs_origin && (support.contains(0.0) || support.lo() == 0.0) && !singular.contains(&0.0) {
            singular.push(0.0);
        }
        let tail = match &modifier {
            Modifier::TailTilt { index, .. } => {
                let index = *index;
                let cfg = base.quad_config(&QuadratureConfig::default());
                let wf = |t: f64| tail_weight(index, t) * base.pdf(t).unwrap_or(f64::NAN);
                Some(CumulativeTable::tail(wf, support, TAIL_TABLE_PANELS, &cfg)?)
            }
            _ => None,
        };
        let mut inner = Inner {
            family: Family::Numeric { base: base.clone(), modifier },
            support,
            ln_mass: 0.0,
            order,
            center,
            scale,
            singular,
            tail,
        };
        let unnormalized = Density { inner: Arc::new(inner) };
        let ln_mass = unnormalized.ln_unnormalized_mass()?;
        inner = Arc::try_unwrap(unnormalized.inner).expect("sole owner");
        inner.ln_mass = ln_mass;
        Ok(Density { inner: Arc::new(inner) })
    }

    /// Escort density `∝ f^e`.
    pub fn escort(&self, e: f64) -> Result<Self> {
        Self::numeric(self, Modifier::PowerOfBase(e))
    }

    fn ln_unnormalized_mass(&self) -> Result<f64> {
        // Shift by the largest sampled log-value so the integral is O(1).
        let shift = self
            .probe_points(64)
            .into_iter()
            .filter_map(|x| self.unnormalized_log_jet(x).ok().map(|j| j.value()))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::ZeroMass);
        }
        let cfg = QuadratureConfig { abs_tol: f64::MIN_POSITIVE, ..self.quad_config(&QuadratureConfig::default()) };
        let r = integrate_fallible(|x| Ok((self.unnormalized_log_jet(x)?.value() - shift).exp()), self.support(), &cfg);
        let r = match r {
            Err(Error::DivergentIntegral(why)) => return Err(Error::NotNormalizable(why)),
            other => other?,
        };
        if !r.converged {
            return Err(Error::NotNormalizable(format!(
                "mass quadrature did not converge (estimate {:e}, error {:e})",
                r.value, r.error_estimate
            )));
        }
        if r.value <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(shift + r.value.ln())
    }

    fn unnormalized_log_jet(&self, x: f64) -> Result<Jet> {
        let Family::Numeric { base, modifier } = &self.inner.family else {
            return Ok(self.inner.family.parametric_log_jet(x));
        };
        let l = base.log_jet(x)?;
        let term = |j: Jet, c: f64| if c == 0.0 { None } else { Some(j.scale(c)) };
        let sum = |parts: Vec<Option<Jet>>| parts.into_iter().flatten().reduce(|a, b| a + b).expect("non-empty");
        Ok(match modifier {
            Modifier::PowerOfBase(e) => l.scale(*e),
            Modifier::PowerTilt(r) => sum(vec![Some(l), term(Jet::variable(x).ln_abs(), *r)]),
            Modifier::ExpTilt(s) => sum(vec![Some(l), term(Jet::variable(x), *s)]),
            Modifier::DerivativeTilt { a, b } => {
                sum(vec![Some(l.scale(*a)), term(ln_abs_derivative_jet(&l), *b)])
            }
            Modifier::TailTilt { index, r } => {
                let table = self.inner.tail.as_ref().expect("tail table built with the tilt");
                let index = *index;
                let ln_weight = |t: f64| ((index - 2.0) * t).abs().ln() / (index - 2.0);
                let ln_t0 = table.ln_refine(|t: f64| ln_weight(t) + base.ln_pdf(t).unwrap_or(f64::NAN), x)?;
                let ln_w = Jet::variable(x).scale(index - 2.0).ln_abs().scale(1.0 / (index - 2.0));
                // T/T(x) as a jet, so that T itself may underflow
                let tail = (ln_w + l).add_const(-ln_t0).exp().scale(-1.0).integral(1.0).truncate(l.order().unwrap_or(0) + 1);
                sum(vec![Some(l), term(tail.ln_abs().add_const(ln_t0), *r)])
            }
            Modifier::RelativeTilt { h, r } => sum(vec![Some(l), term(l - h.log_jet(x)?, *r)]),
            Modifier::CurvatureTilt { a, b, c, shift } => sum(vec![
                Some(l.scale(*a)),
                term(ln_abs_derivative_jet(&l), *b),
                term(curvature_jet(&l).add_const(-shift).ln_abs(), *c),
            ]),
        }
        .truncate(self.inner.order + 1))
    }

    /// Series of `ln f` at `x` (valid up to [`Density::order`]).
    pub fn log_jet(&self, x: f64) -> Result<Jet> {
        self.check_inside(x)?;
        Ok(self.unnormalized_log_jet(x)?.add_const(-self.inner.ln_mass))
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        let s = self.inner.support;
        if s.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport { x, lo: s.lo(), hi: s.hi() })
        }
    }

    pub fn family(&self) -> &Family {
        &self.inner.family
    }

    pub fn support(&self) -> Interval {
        self.inner.support
    }

    /// Differentiability class on the open support (capped at 4).
    pub fn order(&self) -> usize {
        self.inner.order
    }

    /// Mass of the unnormalized numeric density; 1 for closed-form families.
    pub fn normalizer(&self) -> f64 {
        self.inner.ln_mass.exp()
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.inner.family, Family::Numeric { .. })
    }

    /// Points where derived integrands may be singular.
    pub fn singular_points(&self) -> &[f64] {
        &self.inner.singular
    }

    /// Characteristic `(location, scale)`.
    pub fn location_scale(&self) -> (f64, f64) {
        (self.inner.center, self.inner.scale)
    }

    /// Scale-aware split points inside the support.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (c, s) = self.location_scale();
        let support = self.support();
        [c - 10.0 * s, c - s, c, c + s, c + 10.0 * s].into_iter().filter(|p| support.contains(*p)).collect()
    }

    /// `base` augmented with this density's singular points and breakpoints.
    pub fn quad_config(&self, base: &QuadratureConfig) -> QuadratureConfig {
        base.with_points(self.singular_points(), &self.breakpoints())
    }

    /// Interior sample points spread over the bulk of the density.
    pub fn probe_points(&self, n: usize) -> Vec<f64> {
        let s = self.support();
        let (c, scale) = self.location_scale();
        let grid = (0..n).map(|i| (i as f64 + 0.5) / n as f64);
        let pts: Vec<f64> = match (s.lo().is_finite(), s.hi().is_finite()) {
            (true, true) => grid.map(|u| s.lo() + (s.hi() - s.lo()) * u).collect(),
            (true, false) => grid.map(|u| 0.95 * u).map(|t| s.lo() + scale * t / (1.0 - t)).collect(),
            (false, true) => grid.map(|u| 0.95 * u).map(|t| s.hi() - scale * t / (1.0 - t)).collect(),
            (false, false) => grid.map(|u| 0.95 * (2.0 * u - 1.0)).map(|t| c + scale * t / (1.0 - t * t)).collect(),
        };
        pts.into_iter().filter(|x| s.contains(*x)).collect()
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        Ok(self.log_jet(x)?.value())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok(self.ln_pdf(x)?.exp())
    }

    /// `f(x)`, `f'(x)` or `f''(x)`.
    pub fn evaluate(&self, x: f64, order: usize) -> Result<f64> {
        if order > 2 || order > self.order() {
            return Err(Error::NotDifferentiable { family: self.to_string(), order });
        }
        let l = self.log_jet(x)?;
        let f = l.value().exp();
        Ok(match order {
            0 => f,
            1 => f * l.derivative(1),
            _ => {
                let l1 = l.derivative(1);
                f * (l1 * l1 + l.derivative(2))
            }
        })
    }

    /// `ln |f'(x)|`.
    pub fn ln_abs_derivative(&self, x: f64) -> Result<f64> {
        self.require_order(1)?;
        Ok(ln_abs_derivative_jet(&self.log_jet(x)?).value())
    }

    /// `f f'' / f'^2` at `x`.
    pub fn curvature(&self, x: f64) -> Result<f64> {
        self.require_order(2)?;
        Ok(curvature_jet(&self.log_jet(x)?).value())
    }

    pub fn require_order(&self, order: usize) -> Result<()> {
        if self.order() < order {
            return Err(Error::NotDifferentiable { family: self.to_string(), order });
        }
        Ok(())
    }

    /// Decreasing by family definition.
    pub fn declared_decreasing(&self) -> bool {
        self.inner.family.declared_decreasing()
    }

    /// Declared decreasing, or `f' < 0` at 512 sampled interior points.
    pub fn is_decreasing(&self) -> bool {
        if self.declared_decreasing() {
            return true;
        }
        if self.order() < 1 {
            return false;
        }
        self.probe_points(512).into_iter().all(|x| matches!(self.log_jet(x), Ok(j) if j.derivative(1) < 0.0))
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.inner.family {
            Family::Uniform { lo, hi } => write!(f, "uniform:lo={lo},hi={hi}"),
            Family::Exponential { rate } => write!(f, "exponential:rate={rate}"),
            Family::Gaussian { mu, sigma } => write!(f, "gaussian:mu={mu},sigma={sigma}"),
            Family::HalfGeneralizedNormal { k, scale } => write!(f, "halfgennormal:k={k},scale={scale}"),
            Family::GeneralizedNormal { k, scale } => write!(f, "gennormal:k={k},scale={scale}"),
            Family::QExponential { q, rate } => write!(f, "qexponential:q={q},rate={rate}"),
            Family::Weibull { shape, scale } => write!(f, "weibull:shape={shape},scale={scale}"),
            Family::GeneralizedGamma { a, d, p } => write!(f, "gengamma:a={a},d={d},p={p}"),
            Family::Pareto { xm, alpha } => write!(f, "pareto:xm={xm},alpha={alpha}"),
            Family::Rayleigh { sigma } => write!(f, "rayleigh:sigma={sigma}"),
            Family::Numeric { base, modifier } => match modifier {
                Modifier::PowerOfBase(e) => write!(f, "escort:base=({base}),exp={e}"),
                Modifier::PowerTilt(r) => write!(f, "tilt_power:base=({base}),r={r}"),
                Modifier::ExpTilt(s) => write!(f, "tilt_exp:base=({base}),s={s}"),
                Modifier::DerivativeTilt { a, b } => write!(f, "tilt_derivative:base=({base}),a={a},b={b}"),
                Modifier::TailTilt { index, r } => write!(f, "tilt_tail:base=({base}),index={index},r={r}"),
                Modifier::RelativeTilt { h, r } => write!(f, "tilt_relative:base=({base}),h=({h}),r={r}"),
                Modifier::CurvatureTilt { a, b, c, shift } => {
                    write!(f, "tilt_curvature:base=({base}),a={a},b={b},c={c},shift={shift}")
                }
            },
        }
    }
}

impl Serialize for Density {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    pub mass: f64,
    pub mass_error: f64,
    /// Smallest sampled `ln f`; positivity is judged on this value since
    /// `f` itself underflows in light tails.
    pub min_ln_pdf_sampled: f64,
    pub min_pdf_sampled: f64,
    pub ok: bool,
}

/// Mass and positivity diagnostics for an arbitrary log-density on
/// `support`; `probes` are the interior points checked for positivity.
pub fn check_density_fn<F: Fn(f64) -> f64>(
    ln_pdf: F,
    support: Interval,
    probes: &[f64],
    cfg: &QuadratureConfig,
) -> DensityReport {
    let (mass, mass_error) = match integrate(|x| ln_pdf(x).exp(), support, cfg) {
        Ok(r) => (r.value, r.error_estimate),
        Err(_) => (f64::NAN, f64::INFINITY),
    };
    let min_ln_pdf_sampled = probes.iter().map(|&x| ln_pdf(x)).fold(f64::INFINITY, f64::min);
    let ok = (mass - 1.0).abs() <= 1e-8 && min_ln_pdf_sampled > f64::NEG_INFINITY;
    DensityReport { mass, mass_error, min_ln_pdf_sampled, min_pdf_sampled: min_ln_pdf_sampled.exp(), ok }
}

/// Unit mass within 1e-8 and positivity at 512 interior points.
pub fn check_density(d: &Density) -> DensityReport {
    let cfg = d.quad_config(&QuadratureConfig::default());
    check_density_fn(|x| d.ln_pdf(x).unwrap_or(f64::NAN), d.support(), &d.probe_points(512), &cfg)
}
