//! Forward-mode dual numbers `v + d*eps`, `eps^2 = 0`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to interpret an expression tree.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    fn pow(self, exponent: Self) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn pow(self, exponent: Self) -> Self {
        self.powf(exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }

    pub fn variable(v: f64) -> Self {
        Self { v, d: 1.0 }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        // skip the product when the tangent is zero so 0 * inf stays 0
        Self { v, d: if self.d == 0.0 { 0.0 } else { dv * self.d } }
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let v = self.v / o.v;
        Self::new(v, (self.d - v * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    fn constant(c: f64) -> Self {
        Self::new(c, 0.0)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn abs(self) -> Self {
        // sign(0) = 0 subgradient
        let s = if self.v > 0.0 {
            1.0
        } else if self.v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.v.abs(), s)
    }
    fn pow(self, e: Self) -> Self {
        let v = self.v.powf(e.v);
        let mut d = 0.0;
        if self.d != 0.0 {
            d += e.v * self.v.powf(e.v - 1.0) * self.d;
        }
        if e.d != 0.0 {
            d += v * self.v.ln() * e.d;
        }
        Self::new(v, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives() {
        let x = 0.7;
        type Case = (Box<dyn Fn(Dual) -> Dual>, Box<dyn Fn(f64) -> f64>);
        let cases: Vec<Case> = vec![
            (Box::new(|a: Dual| a.exp()), Box::new(f64::exp)),
            (Box::new(|a: Dual| a.ln()), Box::new(f64::ln)),
            (Box::new(|a: Dual| a.sqrt()), Box::new(f64::sqrt)),
            (Box::new(|a: Dual| a.sin() * a.cos()), Box::new(|a: f64| a.sin() * a.cos())),
            (Box::new(|a: Dual| a.tanh() / a), Box::new(|a: f64| a.tanh() / a)),
            (Box::new(|a: Dual| a.pow(Dual::constant(3.0))), Box::new(|a: f64| a.powi(3))),
            (Box::new(|a: Dual| a.pow(a)), Box::new(|a: f64| a.powf(a))),
        ];
        for (df, f) in cases {
            let got = df(Dual::variable(x)).d;
            assert!((got - fd(&f, x)).abs() < 1e-8, "{got} vs {}", fd(&f, x));
        }
    }

    #[test]
    fn square_of_zero_has_zero_tangent() {
        let z = Dual::variable(0.0).pow(Dual::constant(2.0));
        assert_eq!(z, Dual::new(0.0, 0.0));
        assert_eq!(Dual::variable(0.0).abs().d, 0.0);
        assert_eq!(Dual::constant(0.0).sqrt().d, 0.0);
    }
}
