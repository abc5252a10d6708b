//! Informational functionals evaluated by quadrature over the x-domain.
//!
//! Integrands are assembled in log space from density jets, so powers such
//! as `f^{1+p(λ-2)} |f'|^p` never form `0^{negative}`. Integrals of the form
//! `∫ exp(L(x)) dx` are shifted by the largest sampled value of `L` before
//! integration and returned as logarithms.

use serde::Serialize;

use crate::densities::{curvature_jet, ln_abs_derivative_jet, same_support, Density};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_fallible, CumulativeTable, QuadratureConfig};

/// Parameters closer than this to a singular value are flagged as ill-conditioned.
pub const CONDITIONING_RADIUS: f64 = 1e-6;

/// Panels in the tail table used by the upper-moment functionals.
pub const UPPER_TABLE_PANELS: usize = 256;

/// A value with its propagated quadrature error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    fn scaled(self, s: f64) -> Estimate {
        Estimate { value: s * self.value, error: (s * self.error).abs() }
    }

    /// `exp(s · ln I)` for a log-integral estimate.
    fn exp_scaled(self, s: f64) -> Estimate {
        let value = (s * self.value).exp();
        Estimate { value, error: value * (s * self.error).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherEstimate {
    /// The integral `∫ f^{1+p(λ-2)} |f'|^p`.
    pub integral: Estimate,
    /// `integral^{1/(pλ)}`.
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperMomentEstimate {
    /// The moment `M`.
    pub moment: Estimate,
    /// The deviation `m = M^{(a-2)/p}`.
    pub deviation: f64,
}

/// True when `v` is within [`CONDITIONING_RADIUS`] of `target`.
pub fn near(v: f64, target: f64) -> bool {
    (v - target).abs() < CONDITIONING_RADIUS
}

/// `c · v` with `0 · ±inf = 0`.
fn lin(c: f64, v: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * v
    }
}

fn nonzero(v: f64, name: &str) -> Result<()> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::DegenerateParameters(format!("{name} must be finite and non-zero, got {v}")));
    }
    Ok(())
}

fn not_one(v: f64, name: &str) -> Result<()> {
    if v == 1.0 || !v.is_finite() {
        return Err(Error::DegenerateParameters(format!("{name} must be finite and != 1, got {v}")));
    }
    Ok(())
}

fn tail_weight(index: f64, t: f64) -> f64 {
    ((index - 2.0) * t).abs().powf(1.0 / (index - 2.0))
}

fn ln_tail_weight(index: f64, t: f64) -> f64 {
    ((index - 2.0) * t).abs().ln() / (index - 2.0)
}

/// Evaluator for all functionals, parameterized by the quadrature settings.
#[derive(Debug, Clone, Default)]
pub struct Functionals {
    pub cfg: QuadratureConfig,
}

impl Functionals {
    pub fn new(cfg: QuadratureConfig) -> Self {
        Functionals { cfg }
    }

    fn config(&self, ds: &[&Density], extra_singular: &[f64]) -> QuadratureConfig {
        let mut cfg = self.cfg.with_points(extra_singular, &[]);
        for d in ds {
            cfg = d.quad_config(&cfg);
        }
        cfg.singular_points.sort_by(f64::total_cmp);
        cfg.singular_points.dedup();
        cfg.breakpoints.sort_by(f64::total_cmp);
        cfg.breakpoints.dedup();
        cfg
    }

    /// `ln ∫ exp(L(x)) dx` over the common support of `ds`; the error is
    /// the relative quadrature error of the integral.
    pub fn ln_integral<L>(&self, ds: &[&Density], extra_singular: &[f64], log_integrand: L) -> Result<Estimate>
    where
        L: Fn(f64) -> Result<f64>,
    {
        same_support(ds)?;
        let support = ds[0].support();
        let shift = ds[0]
            .probe_points(64)
            .into_iter()
            .filter_map(|x| log_integrand(x).ok())
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };
        let cfg = QuadratureConfig { abs_tol: f64::MIN_POSITIVE, ..self.config(ds, extra_singular) };
        let r = integrate_fallible(|x| Ok((log_integrand(x)? - shift).exp()), support, &cfg)?;
        let v = r.converged_value()?;
        if v <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Estimate { value: shift + v.ln(), error: r.error_estimate / v })
    }

    /// Signed integral `∫ φ(x) dx` over the common support of `ds`.
    pub fn integral<P>(&self, ds: &[&Density], extra_singular: &[f64], integrand: P) -> Result<Estimate>
    where
        P: Fn(f64) -> Result<f64>,
    {
        same_support(ds)?;
        let cfg = self.config(ds, extra_singular);
        let r = integrate_fallible(integrand, ds[0].support(), &cfg)?;
        Ok(Estimate { value: r.converged_value()?, error: r.error_estimate })
    }

    // ---- entropies and divergences ----

    /// `R_α[f] = ln ∫ f^α / (1-α)`; `α = 1` is the Shannon entropy.
    pub fn renyi_entropy(&self, f: &Density, alpha: f64) -> Result<Estimate> {
        if alpha == 1.0 {
            return self.shannon_entropy(f);
        }
        let ln_i = self.ln_integral(&[f], &[], |x| Ok(lin(alpha, f.ln_pdf(x)?)))?;
        Ok(ln_i.scaled(1.0 / (1.0 - alpha)))
    }

    /// `N_α[f] = exp(R_α[f])`.
    pub fn entropy_power(&self, f: &Density, alpha: f64) -> Result<Estimate> {
        let r = self.renyi_entropy(f, alpha)?;
        Ok(Estimate { value: r.value.exp(), error: r.value.exp() * r.error })
    }

    pub fn shannon_entropy(&self, f: &Density) -> Result<Estimate> {
        self.integral(&[f], &[], |x| {
            let l = f.ln_pdf(x)?;
            Ok(-lin(l.exp(), l))
        })
    }

    pub fn kl_divergence(&self, f: &Density, g: &Density) -> Result<Estimate> {
        self.integral(&[f, g], &[], |x| {
            let lf = f.ln_pdf(x)?;
            Ok(lin(lf.exp(), lf - g.ln_pdf(x)?))
        })
    }

    pub fn shannon_cross_entropy(&self, f: &Density, g: &Density) -> Result<Estimate> {
        self.integral(&[f, g], &[], |x| Ok(-lin(f.pdf(x)?, g.ln_pdf(x)?)))
    }

    /// `D_β[f||g] = ln ∫ f^β g^{1-β} / (β-1)`; `β = 1` is Kullback–Leibler.
    pub fn renyi_divergence(&self, f: &Density, g: &Density, beta: f64) -> Result<Estimate> {
        if beta == 1.0 {
            return self.kl_divergence(f, g);
        }
        let ln_i = self.ln_integral(&[f, g], &[], |x| Ok(lin(beta, f.ln_pdf(x)?) + lin(1.0 - beta, g.ln_pdf(x)?)))?;
        Ok(ln_i.scaled(1.0 / (beta - 1.0)))
    }

    /// `H_γ[f;g] = ln ∫ f g^{γ-1} / (1-γ)`; `γ = 1` is the Shannon cross-entropy.
    pub fn renyi_cross_entropy(&self, f: &Density, g: &Density, gamma: f64) -> Result<Estimate> {
        if gamma == 1.0 {
            return self.shannon_cross_entropy(f, g);
        }
        let ln_i = self.ln_integral(&[f, g], &[], |x| Ok(f.ln_pdf(x)? + lin(gamma - 1.0, g.ln_pdf(x)?)))?;
        Ok(ln_i.scaled(1.0 / (1.0 - gamma)))
    }

    /// `H_{γ,ξ}[f;g] = ln ∫ f^{1+(ξ-1)(γ-1)} g^{γ-1} / (1-γ)`, in log scale.
    /// At `γ = 1` this is `(ξ-1) S[f] + H[f;g]`.
    pub fn escort_cross_entropy(&self, f: &Density, g: &Density, gamma: f64, xi: f64) -> Result<Estimate> {
        if gamma == 1.0 {
            let s = self.shannon_entropy(f)?;
            let h = self.shannon_cross_entropy(f, g)?;
            let c = xi - 1.0;
            return Ok(Estimate { value: c * s.value + h.value, error: (c * s.error).abs() + h.error });
        }
        let e = 1.0 + (xi - 1.0) * (gamma - 1.0);
        let ln_i = self.ln_integral(&[f, g], &[], |x| Ok(lin(e, f.ln_pdf(x)?) + lin(gamma - 1.0, g.ln_pdf(x)?)))?;
        Ok(ln_i.scaled(1.0 / (1.0 - gamma)))
    }

    /// Cross-divergence `H̃_{a,b}[f;g||h] = ln ∫ f (f^{b-1} g / h^b)^{a-1} / (1-a)`.
    pub fn cross_divergence(&self, f: &Density, g: &Density, h: &Density, a: f64, b: f64) -> Result<Estimate> {
        not_one(a, "a")?;
        let c = a - 1.0;
        let ln_i = self.ln_integral(&[f, g, h], &[], |x| {
            let lf = f.ln_pdf(x)?;
            Ok(lf + lin(c * (b - 1.0), lf) + lin(c, g.ln_pdf(x)?) - lin(c * b, h.ln_pdf(x)?))
        })?;
        Ok(ln_i.scaled(1.0 / (1.0 - a)))
    }

    // ---- Fisher-type functionals ----

    /// `ln ∫ f^{1+p(λ-2)} |f'|^p`.
    pub fn ln_generalized_fisher(&self, f: &Density, p: f64, lambda: f64) -> Result<Estimate> {
        nonzero(p * lambda, "p·λ")?;
        f.require_order(1)?;
        let e = 1.0 + p * (lambda - 2.0);
        self.ln_integral(&[f], &[], |x| {
            let l = f.log_jet(x)?;
            Ok(lin(e, l.value()) + lin(p, ln_abs_derivative_jet(&l).value()))
        })
    }

    /// `(p,λ)`-Fisher information: the integral and `φ = integral^{1/(pλ)}`.
    pub fn generalized_fisher(&self, f: &Density, p: f64, lambda: f64) -> Result<FisherEstimate> {
        let ln_i = self.ln_generalized_fisher(f, p, lambda)?;
        Ok(FisherEstimate { integral: ln_i.exp_scaled(1.0), phi: (ln_i.value / (p * lambda)).exp() })
    }

    /// `ln ∫ f^{1+(a-1)c} g^{-c} |f'|^{bc}`.
    pub fn ln_cross_fisher_integral(&self, f: &Density, g: &Density, a: f64, b: f64, c: f64) -> Result<Estimate> {
        nonzero(c, "c")?;
        if b != 0.0 {
            f.require_order(1)?;
        }
        let e = 1.0 + (a - 1.0) * c;
        self.ln_integral(&[f, g], &[], |x| {
            let l = f.log_jet(x)?;
            let d = if b == 0.0 { 0.0 } else { ln_abs_derivative_jet(&l).value() };
            Ok(lin(e, l.value()) - lin(c, g.ln_pdf(x)?) + lin(b * c, d))
        })
    }

    /// Generalized cross-Fisher information `(∫ f^{1+(a-1)c} g^{-c} |f'|^{bc})^{1/c}`.
    pub fn cross_fisher(&self, f: &Density, g: &Density, a: f64, b: f64, c: f64) -> Result<Estimate> {
        Ok(self.ln_cross_fisher_integral(f, g, a, b, c)?.exp_scaled(1.0 / c))
    }

    /// `ln ∫ f^{1+p(λ-2)} |f'|^q |pλ/(p-q) - f f''/f'^2|^p`.
    pub fn ln_down_fisher(&self, f: &Density, p: f64, q: f64, lambda: f64) -> Result<Estimate> {
        if p == q {
            return Err(Error::DegenerateParameters(format!("down-Fisher needs p != q (both {p})")));
        }
        f.require_order(2)?;
        let e = 1.0 + p * (lambda - 2.0);
        let shift = p * lambda / (p - q);
        self.ln_integral(&[f], &[], |x| {
            let l = f.log_jet(x)?;
            let rho = curvature_jet(&l).value();
            Ok(lin(e, l.value()) + lin(q, ln_abs_derivative_jet(&l).value()) + lin(p, (shift - rho).abs().ln()))
        })
    }

    /// Down-Fisher measure `φ_{p,q,λ}[f]` (the integral itself).
    pub fn down_fisher(&self, f: &Density, p: f64, q: f64, lambda: f64) -> Result<Estimate> {
        Ok(self.ln_down_fisher(f, p, q, lambda)?.exp_scaled(1.0))
    }

    /// `ln ∫ (|f'|^{a-b} f^{-aξ-2b(1-ξ)} (f/g) |ξ - f f''/f'^2|^b)^c f`.
    ///
    /// The curvature factor carries the power `b`: this is what the pullback
    /// of the cross-Fisher integrand through the down transformation gives,
    /// and it reduces to a plain `|ξ - f f''/f'^2|` when `b = 1`.
    pub fn ln_cross_down_fisher(&self, f: &Density, g: &Density, a: f64, b: f64, c: f64, xi: f64) -> Result<Estimate> {
        f.require_order(2)?;
        let ef = -a * xi - 2.0 * b * (1.0 - xi) + 1.0;
        self.ln_integral(&[f, g], &[], |x| {
            let l = f.log_jet(x)?;
            let lf = l.value();
            let rho = curvature_jet(&l).value();
            let inner = lin(a - b, ln_abs_derivative_jet(&l).value()) + lin(ef, lf) - g.ln_pdf(x)?
                + lin(b, (xi - rho).abs().ln());
            Ok(lin(c, inner) + lf)
        })
    }

    /// Cross-down-Fisher measure (the integral, without an outer root).
    pub fn cross_down_fisher(&self, f: &Density, g: &Density, a: f64, b: f64, c: f64, xi: f64) -> Result<Estimate> {
        Ok(self.ln_cross_down_fisher(f, g, a, b, c, xi)?.exp_scaled(1.0))
    }

    // ---- moments ----

    /// `ln ∫ f |x|^p`.
    pub fn ln_absolute_moment(&self, f: &Density, p: f64) -> Result<Estimate> {
        self.ln_integral(&[f], &[0.0], |x| Ok(f.ln_pdf(x)? + lin(p, x.abs().ln())))
    }

    /// `σ_p[f] = (∫ f |x|^p)^{1/p}`.
    pub fn deviation(&self, f: &Density, p: f64) -> Result<Estimate> {
        nonzero(p, "p")?;
        Ok(self.ln_absolute_moment(f, p)?.exp_scaled(1.0 / p))
    }

    /// `ln ∫ f^{2-γ} g^{γ-1} |x|^p`.
    pub fn ln_cross_moment(&self, f: &Density, g: &Density, p: f64, gamma: f64) -> Result<Estimate> {
        self.ln_integral(&[f, g], &[0.0], |x| {
            Ok(lin(2.0 - gamma, f.ln_pdf(x)?) + lin(gamma - 1.0, g.ln_pdf(x)?) + lin(p, x.abs().ln()))
        })
    }

    /// Cross-deviation `σ_{p,γ}[f;g] = (∫ f^{2-γ} g^{γ-1} |x|^p)^{1/p}`.
    pub fn cross_deviation(&self, f: &Density, g: &Density, p: f64, gamma: f64) -> Result<Estimate> {
        nonzero(p, "p")?;
        Ok(self.ln_cross_moment(f, g, p, gamma)?.exp_scaled(1.0 / p))
    }

    /// `ln ∫ f^{2-γ} g^{γ-1} e^{(1-γ)x}`.
    pub fn ln_exp_cross_moment(&self, f: &Density, g: &Density, gamma: f64) -> Result<Estimate> {
        self.ln_integral(&[f, g], &[], |x| {
            Ok(lin(2.0 - gamma, f.ln_pdf(x)?) + lin(gamma - 1.0, g.ln_pdf(x)?) + (1.0 - gamma) * x)
        })
    }

    /// Exponential cross-deviation `(∫ f^{2-γ} g^{γ-1} e^{(1-γ)x})^{1/(1-γ)}`.
    pub fn exp_cross_deviation(&self, f: &Density, g: &Density, gamma: f64) -> Result<Estimate> {
        not_one(gamma, "γ")?;
        Ok(self.ln_exp_cross_moment(f, g, gamma)?.exp_scaled(1.0 / (1.0 - gamma)))
    }

    /// `ln ∫ f e^{s x}`.
    pub fn ln_exp_moment(&self, f: &Density, s: f64) -> Result<Estimate> {
        self.ln_integral(&[f], &[], |x| Ok(f.ln_pdf(x)? + s * x))
    }

    /// `∫ f e^{s x}`.
    pub fn exp_moment(&self, f: &Density, s: f64) -> Result<Estimate> {
        Ok(self.ln_exp_moment(f, s)?.exp_scaled(1.0))
    }

    /// Table of `T(x) = ∫_x^hi |(index-2) t|^{1/(index-2)} f(t) dt`.
    pub fn upper_tail(&self, f: &Density, index: f64) -> Result<CumulativeTable> {
        if index == 2.0 || !index.is_finite() {
            return Err(Error::DegenerateParameters(format!("upper-moment index must be finite and != 2, got {index}")));
        }
        let support = f.support();
        if support.lo() < 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "upper moments need support inside (0, inf), got ({}, {})",
                support.lo(),
                support.hi()
            )));
        }
        let cfg = self.config(&[f], &[0.0]);
        CumulativeTable::tail(|t| tail_weight(index, t) * f.pdf(t).unwrap_or(f64::NAN), support, UPPER_TABLE_PANELS, &cfg)
    }

    /// `ln T(x)` from a table built by [`Functionals::upper_tail`].
    pub fn ln_tail_value(&self, f: &Density, index: f64, table: &CumulativeTable, x: f64) -> Result<f64> {
        table.ln_refine(|t| ln_tail_weight(index, t) + f.ln_pdf(t).unwrap_or(f64::NAN), x)
    }

    /// `ln ∫ f^{1-λ} g^λ T(x)^p` with `T` the index-`index` tail.
    pub fn ln_cross_upper_moment(&self, f: &Density, g: &Density, p: f64, lambda: f64, index: f64) -> Result<Estimate> {
        let table = self.upper_tail(f, index)?;
        self.ln_integral(&[f, g], &[0.0], |x| {
            let gl = if lambda == 0.0 { 0.0 } else { lambda * g.ln_pdf(x)? };
            Ok(lin(1.0 - lambda, f.ln_pdf(x)?) + gl + lin(p, self.ln_tail_value(f, index, &table, x)?))
        })
    }

    /// `ln M_{p,a}[f] = ln ∫ T(x)^p f`.
    pub fn ln_upper_moment(&self, f: &Density, p: f64, a: f64) -> Result<Estimate> {
        self.ln_cross_upper_moment(f, f, p, 0.0, a)
    }

    /// Upper moment `M_{p,a}[f]` and upper deviation `m = M^{(a-2)/p}`.
    pub fn upper_moment(&self, f: &Density, p: f64, a: f64) -> Result<UpperMomentEstimate> {
        nonzero(p, "p")?;
        let ln_m = self.ln_upper_moment(f, p, a)?;
        Ok(UpperMomentEstimate { moment: ln_m.exp_scaled(1.0), deviation: (ln_m.value * (a - 2.0) / p).exp() })
    }

    /// Cross upper moment `M_{p,λ,b}[f;g]` and its deviation `M^{(b-2)/p}`.
    pub fn cross_upper_moment(&self, f: &Density, g: &Density, p: f64, lambda: f64, b: f64) -> Result<UpperMomentEstimate> {
        nonzero(p, "p")?;
        let ln_m = self.ln_cross_upper_moment(f, g, p, lambda, b)?;
        Ok(UpperMomentEstimate { moment: ln_m.exp_scaled(1.0), deviation: (ln_m.value * (b - 2.0) / p).exp() })
    }
}

macro_rules! free_functions {
    ($($name:ident($($arg:ident: $ty:ty),*) -> $ret:ty;)*) => {
        $(
            #[doc = concat!("[`Functionals::", stringify!($name), "`] with default quadrature settings.")]
            pub fn $name($($arg: $ty),*) -> Result<$ret> {
                Functionals::default().$name($($arg),*)
            }
        )*
    };
}

free_functions! {
    renyi_entropy(f: &Density, alpha: f64) -> Estimate;
    entropy_power(f: &Density, alpha: f64) -> Estimate;
    shannon_entropy(f: &Density) -> Estimate;
    kl_divergence(f: &Density, g: &Density) -> Estimate;
    shannon_cross_entropy(f: &Density, g: &Density) -> Estimate;
    renyi_divergence(f: &Density, g: &Density, beta: f64) -> Estimate;
    renyi_cross_entropy(f: &Density, g: &Density, gamma: f64) -> Estimate;
    escort_cross_entropy(f: &Density, g: &Density, gamma: f64, xi: f64) -> Estimate;
    cross_divergence(f: &Density, g: &Density, h: &Density, a: f64, b: f64) -> Estimate;
    generalized_fisher(f: &Density, p: f64, lambda: f64) -> FisherEstimate;
    cross_fisher(f: &Density, g: &Density, a: f64, b: f64, c: f64) -> Estimate;
    down_fisher(f: &Density, p: f64, q: f64, lambda: f64) -> Estimate;
    cross_down_fisher(f: &Density, g: &Density, a: f64, b: f64, c: f64, xi: f64) -> Estimate;
    deviation(f: &Density, p: f64) -> Estimate;
    cross_deviation(f: &Density, g: &Density, p: f64, gamma: f64) -> Estimate;
    exp_cross_deviation(f: &Density, g: &Density, gamma: f64) -> Estimate;
    exp_moment(f: &Density, s: f64) -> Estimate;
    upper_moment(f: &Density, p: f64, a: f64) -> UpperMomentEstimate;
    cross_upper_moment(f: &Density, g: &Density, p: f64, lambda: f64, b: f64) -> UpperMomentEstimate;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exp(rate: f64) -> Density {
        Density::exponential(rate).unwrap()
    }

    #[test]
    fn renyi_entropy_closed_forms() {
        assert_relative_eq!(renyi_entropy(&exp(1.0), 2.0).unwrap().value, 2f64.ln(), max_relative = 1e-10);
        let u = Density::uniform(0.0, 1.0).unwrap();
        assert!(renyi_entropy(&u, 3.0).unwrap().value.abs() < 1e-12);
        let n = Density::gaussian(0.0, 1.0).unwrap();
        let want = (2.0 * std::f64::consts::PI.sqrt()).ln();
        assert_relative_eq!(renyi_entropy(&n, 2.0).unwrap().value, want, max_relative = 1e-10);
    }

    #[test]
    fn divergences_closed_forms() {
        let (f, g) = (exp(2.0), exp(1.0));
        assert_relative_eq!(kl_divergence(&f, &g).unwrap().value, 2f64.ln() - 0.5, max_relative = 1e-10);
        assert_relative_eq!(renyi_divergence(&f, &g, 2.0).unwrap().value, (4.0f64 / 3.0).ln(), max_relative = 1e-10);
        assert!(renyi_divergence(&f, &g, 0.0).unwrap().value.abs() < 1e-12);
        assert!(renyi_divergence(&f, &f, 0.7).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_closed_forms() {
        let f = exp(1.0);
        let v = renyi_cross_entropy(&f, &exp(0.5), 1.5).unwrap().value;
        assert_relative_eq!(v, -2.0 * ((0.5f64).sqrt() * 0.8).ln(), max_relative = 1e-10);
        assert_relative_eq!(renyi_cross_entropy(&f, &exp(2.0), 1.5).unwrap().value, 2f64.ln(), max_relative = 1e-10);
    }

    #[test]
    fn fisher_closed_forms() {
        let r = generalized_fisher(&exp(3.0), 2.0, 1.0).unwrap();
        assert_relative_eq!(r.integral.value, 9.0, max_relative = 1e-10);
        assert!(matches!(
            generalized_fisher(&Density::uniform(0.0, 1.0).unwrap(), 2.0, 1.0),
            Err(Error::NotDifferentiable { .. })
        ));
        assert_relative_eq!(down_fisher(&exp(1.0), 1.0, 0.0, 2.0).unwrap().value, 1.0, max_relative = 1e-10);
        assert!(down_fisher(&exp(1.0), 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn moments_closed_forms() {
        let f = exp(1.0);
        assert_relative_eq!(deviation(&f, 1.0).unwrap().value, 1.0, max_relative = 1e-10);
        assert_relative_eq!(deviation(&f, 2.0).unwrap().value, 2f64.sqrt(), max_relative = 1e-10);
        assert_relative_eq!(exp_moment(&f, -1.0).unwrap().value, 0.5, max_relative = 1e-10);
        assert_relative_eq!(upper_moment(&f, 1.0, 3.0).unwrap().moment.value, 0.75, max_relative = 1e-9);
    }

    #[test]
    fn cross_down_fisher_with_zero_power_is_unit_mass() {
        let f = exp(1.0);
        let v = cross_down_fisher(&f, &exp(2.0), 1.0, 1.0, 0.0, 2.0).unwrap();
        assert_relative_eq!(v.value, 1.0, max_relative = 1e-10);
    }
}
