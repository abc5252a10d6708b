//! Truncated Taylor series in a single variable.
//!
//! Densities expose `ln f` as a [`Jet`] at a point: the Taylor coefficients of
//! `ln f(x + h)` in `h`. Composite quantities (modified densities, `ln |f'|`,
//! `f f'' / f'^2`, ...) are then obtained by series arithmetic, and the
//! number of valid coefficients tracks the differentiability order
//! automatically: taking a derivative drops one coefficient.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest derivative order carried.
pub const MAX_ORDER: usize = 4;
const N: usize = MAX_ORDER + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; N],
    len: usize,
}

impl Jet {
    /// Series from derivatives `d[k] = g^{(k)}(x)`.
    pub fn from_derivatives(d: &[f64]) -> Self {
        let len = d.len().min(N);
        let mut c = [0.0; N];
        let mut fact = 1.0;
        for k in 0..len {
            if k > 0 {
                fact *= k as f64;
            }
            c[k] = d[k] / fact;
        }
        Jet { c, len }
    }

    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c, len: N }
    }

    /// The identity function at `x`.
    pub fn variable(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        c[1] = 1.0;
        Jet { c, len: N }
    }

    /// Highest valid derivative order, `None` if even the value is missing.
    pub fn order(&self) -> Option<usize> {
        self.len.checked_sub(1)
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative; NaN when beyond the valid order.
    pub fn derivative(&self, k: usize) -> f64 {
        if k >= self.len {
            return f64::NAN;
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }

    pub fn truncate(mut self, len: usize) -> Self {
        self.len = self.len.min(len);
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in self.c.iter_mut() {
            *v *= s;
        }
        self
    }

    pub fn add_const(mut self, v: f64) -> Self {
        self.c[0] += v;
        self
    }

    /// Derivative as a series (one coefficient shorter).
    pub fn deriv(&self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N - 1 {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet { c, len: self.len.saturating_sub(1) }
    }

    /// Antiderivative with the given value at the expansion point.
    pub fn integral(&self, value: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = value;
        for k in 1..N {
            c[k] = self.c[k - 1] / k as f64;
        }
        Jet { c, len: (self.len + 1).min(N) }
    }

    pub fn div(&self, rhs: &Jet) -> Self {
        let len = self.len.min(rhs.len);
        let mut q = [0.0; N];
        for n in 0..len {
            let mut acc = self.c[n];
            for k in 1..=n {
                acc -= rhs.c[k] * q[n - k];
            }
            q[n] = acc / rhs.c[0];
        }
        Jet { c: q, len }
    }

    /// `ln |g|`; the derivatives agree with those of `ln g` wherever `g != 0`.
    pub fn ln_abs(&self) -> Self {
        let u = &self.c;
        let mut l = [0.0; N];
        l[0] = u[0].abs().ln();
        for n in 1..self.len {
            let mut acc = u[n];
            for k in 1..n {
                acc -= (k as f64 / n as f64) * l[k] * u[n - k];
            }
            l[n] = acc / u[0];
        }
        Jet { c: l, len: self.len }
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; N];
        e[0] = self.c[0].exp();
        for n in 1..self.len {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += k as f64 * self.c[k] * e[n - k];
            }
            e[n] = acc / n as f64;
        }
        Jet { c: e, len: self.len }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = [0.0; N];
        for k in 0..N {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, len: self.len.min(rhs.len) }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let len = self.len.min(rhs.len);
        let mut c = [0.0; N];
        for n in 0..len {
            for k in 0..=n {
                c[n] += self.c[k] * rhs.c[n - k];
            }
        }
        Jet { c, len }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_of_ln_roundtrip() {
        let x = Jet::variable(1.7);
        let y = x.ln_abs().exp();
        for k in 0..=MAX_ORDER {
            assert_relative_eq!(y.derivative(k), x.derivative(k), epsilon = 1e-12);
        }
    }

    #[test]
    fn ln_derivatives() {
        let l = Jet::variable(2.0).ln_abs();
        assert_relative_eq!(l.derivative(1), 0.5);
        assert_relative_eq!(l.derivative(2), -0.25);
        assert_relative_eq!(l.derivative(3), 2.0 / 8.0);
        assert_relative_eq!(l.derivative(4), -6.0 / 16.0);
    }

    #[test]
    fn ln_abs_of_negative() {
        let l = (-Jet::variable(2.0)).ln_abs();
        assert_relative_eq!(l.value(), 2f64.ln());
        assert_relative_eq!(l.derivative(1), 0.5);
    }

    #[test]
    fn product_and_quotient() {
        let x = Jet::variable(3.0);
        let sq = x * x;
        assert_relative_eq!(sq.derivative(1), 6.0);
        assert_relative_eq!(sq.derivative(2), 2.0);
        let back = sq.div(&x);
        assert_relative_eq!(back.derivative(0), 3.0);
        assert_relative_eq!(back.derivative(1), 1.0);
        assert_relative_eq!(back.derivative(2), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn derivative_drops_order() {
        let j = Jet::from_derivatives(&[1.0, 2.0, 3.0]);
        assert_eq!(j.order(), Some(2));
        assert_eq!(j.deriv().order(), Some(1));
        assert_relative_eq!(j.deriv().derivative(1), 3.0);
        assert!(j.derivative(3).is_nan());
        assert_eq!(j.deriv().integral(1.0).order(), Some(2));
    }
}
