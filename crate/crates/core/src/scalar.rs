//! Scalar abstraction for the numeric core.
//!
//! All tensor assembly is generic over [`Scalar`], which `f32` and `f64`
//! implement via their `num_traits::Float` surface. [`Dual`] wraps any
//! scalar with a first-order perturbation, so evaluating a pipeline at a
//! dual point differentiates it exactly — including through the LU matrix
//! inverse. Nesting `Dual<Dual<f64>>` gives exact second derivatives.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{FromPrimitive, Num, One, Zero};

/// Numeric type the tensor core is written against.
pub trait Scalar:
    Copy
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Num
    + Neg<Output = Self>
    + FromPrimitive
    + Send
    + Sync
    + 'static
{
    fn from_real(v: f64) -> Self;
    /// Underlying real part, collapsing any dual layers. Domain predicates,
    /// pivoting thresholds and diagnostics are decided on this value.
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: Self) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! impl_scalar_float {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_real(v: f64) -> Self {
                v as $t
            }
            fn value(self) -> f64 {
                self as f64
            }
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            fn atan(self) -> Self {
                <$t>::atan(self)
            }
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            fn powf(self, e: Self) -> Self {
                <$t>::powf(self, e)
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);

/// First-order dual number `re + eps·d` with `eps² = 0`.
///
/// Seeding `d = 1` on one input coordinate makes every downstream value
/// carry the exact partial derivative with respect to that coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub d: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(re: S, d: S) -> Self {
        Dual { re, d }
    }

    pub fn constant(re: S) -> Self {
        Dual { re, d: S::zero() }
    }

    /// Input variable with derivative seed 1.
    pub fn seeded(re: S) -> Self {
        Dual { re, d: S::one() }
    }
}

/// Lift a real point into dual space with the derivative seed on `coord`.
pub fn seed_direction<S: Scalar>(values: &[S], coord: usize) -> Vec<Dual<S>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i == coord {
                Dual::seeded(v)
            } else {
                Dual::constant(v)
            }
        })
        .collect()
}

/// Lift a real point into dual space with zero derivative part.
pub fn lift_constant<S: Scalar>(values: &[S]) -> Vec<Dual<S>> {
    values.iter().map(|&v| Dual::constant(v)).collect()
}

impl<S: Scalar> fmt::Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}ε", self.re, self.d)
    }
}

impl<S: Scalar> PartialOrd for Dual<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.re.partial_cmp(&other.re) {
            Some(std::cmp::Ordering::Equal) => self.d.partial_cmp(&other.d),
            ord => ord,
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.d + rhs.d)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.d - rhs.d)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.d + self.d * rhs.re)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let v = self.re / rhs.re;
        Dual::new(v, (self.d - v * rhs.d) / rhs.re)
    }
}

impl<S: Scalar> Rem for Dual<S> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        // Derivative taken with the quotient locally constant.
        let q = (self.re / rhs.re).value().trunc();
        let q = S::from_real(q);
        Dual::new(self.re % rhs.re, self.d - q * rhs.d)
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.d)
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}
impl<S: Scalar> SubAssign for Dual<S> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}
impl<S: Scalar> MulAssign for Dual<S> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}
impl<S: Scalar> DivAssign for Dual<S> {
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<S: Scalar> Zero for Dual<S> {
    fn zero() -> Self {
        Dual::constant(S::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.d.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    fn one() -> Self {
        Dual::constant(S::one())
    }
}

impl<S: Scalar> Num for Dual<S> {
    type FromStrRadixErr = S::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        S::from_str_radix(str, radix).map(Dual::constant)
    }
}

impl<S: Scalar> FromPrimitive for Dual<S> {
    fn from_i64(n: i64) -> Option<Self> {
        S::from_i64(n).map(Dual::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        S::from_u64(n).map(Dual::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        S::from_f64(n).map(Dual::constant)
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_real(v: f64) -> Self {
        Dual::constant(S::from_real(v))
    }

    fn value(self) -> f64 {
        self.re.value()
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.d / (S::from_real(2.0) * r))
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.d * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.d / self.re)
    }

    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.d * self.re.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.d * self.re.sin())
    }

    fn atan(self) -> Self {
        Dual::new(self.re.atan(), self.d / (S::one() + self.re * self.re))
    }

    fn abs(self) -> Self {
        if self.re.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi(self, n: i32) -> Self {
        let v = self.re.powi(n);
        let dv = S::from_real(f64::from(n)) * self.re.powi(n - 1);
        Dual::new(v, self.d * dv)
    }

    fn powf(self, e: Self) -> Self {
        let v = self.re.powf(e.re);
        // d(a^e) = e a^(e-1) a' + ln(a) a^e e'; the log branch only fires
        // for a genuinely varying exponent, so integral constant exponents
        // on negative bases keep working.
        let mut d = e.re * self.re.powf(e.re - S::one()) * self.d;
        if !e.d.is_zero() {
            d = d + self.re.ln() * v * e.d;
        }
        Dual::new(v, d)
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.d.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Dual<f64>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn arithmetic_derivatives() {
        // f(x) = (x^2 + 3x) / (x - 1) at x = 2: f = 10, f' = (2x+3)(x-1)-(x^2+3x) / (x-1)^2 = -3
        let x = D::seeded(2.0);
        let f = (x * x + D::from_real(3.0) * x) / (x - D::from_real(1.0));
        assert!(close(f.re, 10.0, 1e-15));
        assert!(close(f.d, -3.0, 1e-15));
    }

    #[test]
    fn transcendental_derivatives() {
        let x = D::seeded(0.7);
        let f = x.sin().exp();
        let expect = (0.7f64.sin()).exp();
        assert!(close(f.re, expect, 1e-15));
        assert!(close(f.d, expect * 0.7f64.cos(), 1e-15));

        let g = x.sqrt().ln();
        assert!(close(g.d, 1.0 / (2.0 * 0.7), 1e-14));

        let h = x.atan();
        assert!(close(h.d, 1.0 / (1.0 + 0.49), 1e-15));
    }

    #[test]
    fn nested_second_derivative() {
        // d²/dx² sin(x) at 0.3 = -sin(0.3)
        let x: Dual<Dual<f64>> = Dual::new(Dual::seeded(0.3), Dual::one());
        let f = x.sin();
        assert!(close(f.d.d, -0.3f64.sin(), 1e-14));
    }

    #[test]
    fn powf_constant_exponent_matches_powi() {
        let x = D::seeded(1.7);
        let a = x.powi(3);
        let b = x.powf(D::from_real(3.0));
        assert!(close(a.re, b.re, 1e-15));
        assert!(close(a.d, b.d, 1e-14));
    }

    #[test]
    fn powf_variable_exponent() {
        // d/dx x^x = x^x (ln x + 1) at x = 1.5
        let x = D::seeded(1.5);
        let f = x.powf(x);
        let expect = 1.5f64.powf(1.5) * (1.5f64.ln() + 1.0);
        assert!(close(f.d, expect, 1e-14));
    }
}
