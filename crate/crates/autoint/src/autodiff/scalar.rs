//! Scalar abstraction shared by plain evaluation and parameter-gradient
//! evaluation. Tower arithmetic is generic over this trait, so the same
//! model code runs with `f64` coefficients or with tape variables
//! (forward-over-reverse).

use super::tape::Var;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;

    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self;
    fn acos(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn one() -> Self {
        Self::constant(1.0)
    }
    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn acos(self) -> Self {
        f64::acos(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant(v: f64) -> Self {
        Var::constant(v)
    }
    fn value(self) -> f64 {
        Var::value(self)
    }
    fn tanh(self) -> Self {
        let u = self.value().tanh();
        self.unary(u, 1.0 - u * u)
    }
    fn exp(self) -> Self {
        let e = self.value().exp();
        self.unary(e, e)
    }
    fn sin(self) -> Self {
        let x = self.value();
        self.unary(x.sin(), x.cos())
    }
    fn cos(self) -> Self {
        let x = self.value();
        self.unary(x.cos(), -x.sin())
    }
    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.unary(s, 0.5 / s)
    }
    fn recip(self) -> Self {
        let inv = 1.0 / self.value();
        self.unary(inv, -inv * inv)
    }
    fn acos(self) -> Self {
        let x = self.value();
        self.unary(x.acos(), -1.0 / (1.0 - x * x).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tape::Tape;
    use super::*;

    fn check_unary(f: impl Fn(Var<'_>) -> Var<'_>, g: impl Fn(f64) -> f64, x0: f64) {
        let tape = Tape::new();
        let x = tape.var(x0);
        let y = f(x);
        let grad = tape.gradient(y, &[x])[0];
        let h = 1e-6;
        let fd = (g(x0 + h) - g(x0 - h)) / (2.0 * h);
        assert!(
            (grad - fd).abs() < 1e-7 * (1.0 + fd.abs()),
            "x0={x0} grad={grad} fd={fd}"
        );
    }

    #[test]
    fn unary_gradients_match_finite_differences() {
        check_unary(|x| x.tanh(), f64::tanh, 0.3);
        check_unary(|x| x.exp(), f64::exp, -0.7);
        check_unary(|x| x.sin(), f64::sin, 1.1);
        check_unary(|x| x.cos(), f64::cos, 1.1);
        check_unary(|x| x.sqrt(), f64::sqrt, 2.5);
        check_unary(|x| x.recip(), |x| 1.0 / x, 1.7);
        check_unary(|x| x.acos(), f64::acos, 0.4);
    }
}
