//! Fixed-precision real numbers backed by MPFR.
//!
//! Every value carries its own mantissa width; binary operations produce the
//! wider of the two. Rounding is always to nearest, so a computation repeated
//! with the same inputs and precision reproduces bit for bit.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Round;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Environment variable overriding the default mantissa width.
pub const PRECISION_ENV: &str = "SUBSPACE_SDP_PRECISION";

pub const DEFAULT_PRECISION: u32 = 256;

/// Default precision in bits, honouring [`PRECISION_ENV`] when it parses to a
/// value of at least 64.
pub fn default_precision() -> u32 {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .filter(|&p| p >= 64)
        .unwrap_or(DEFAULT_PRECISION)
}

#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Float);

impl Real {
    pub fn zero(prec: u32) -> Real {
        Real(Float::new(prec))
    }

    pub fn one(prec: u32) -> Real {
        Real(Float::with_val(prec, 1))
    }

    pub fn from_i64(v: i64, prec: u32) -> Real {
        Real(Float::with_val(prec, v))
    }

    pub fn from_f64(v: f64, prec: u32) -> Real {
        Real(Float::with_val(prec, v))
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Real {
        Real(Float::with_val(prec, v))
    }

    pub fn from_rational(v: &Rational, prec: u32) -> Real {
        Real(Float::with_val(prec, v))
    }

    pub fn from_float(v: Float) -> Real {
        Real(v)
    }

    pub fn parse(s: &str, prec: u32) -> Result<Real> {
        let parsed = Float::parse(s.trim()).map_err(|e| Error::Parse(format!("bad real {s:?}: {e}")))?;
        Ok(Real(Float::with_val(prec, parsed)))
    }

    /// 2^-prec, the unit roundoff scale.
    pub fn epsilon(prec: u32) -> Real {
        let mut e = Float::with_val(prec, 1);
        e >>= prec;
        Real(e)
    }

    pub fn pow2(exp: i32, prec: u32) -> Real {
        let mut e = Float::with_val(prec, 1);
        if exp >= 0 {
            e <<= exp as u32;
        } else {
            e >>= (-exp) as u32;
        }
        Real(e)
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn with_prec(&self, prec: u32) -> Real {
        Real(Float::with_val(prec, &self.0))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn sqrt(&self) -> Real {
        Real(self.0.clone().sqrt())
    }

    pub fn abs(&self) -> Real {
        Real(self.0.clone().abs())
    }

    pub fn recip(&self) -> Real {
        Real(self.0.clone().recip())
    }

    pub fn square(&self) -> Real {
        Real(self.0.clone().square())
    }

    pub fn powi(&self, n: i32) -> Real {
        Real(Float::with_val(self.prec(), rug::ops::Pow::pow(&self.0, n)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_sign_positive() && !self.0.is_zero()
    }

    pub fn signum_i32(&self) -> i32 {
        match self.0.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn floor(&self) -> Integer {
        self.0.to_integer_round(Round::Down).map(|(i, _)| i).unwrap_or_default()
    }

    pub fn ceil(&self) -> Integer {
        self.0.to_integer_round(Round::Up).map(|(i, _)| i).unwrap_or_default()
    }

    pub fn max(self, other: Real) -> Real {
        if other > self { other } else { self }
    }

    pub fn min(self, other: Real) -> Real {
        if other < self { other } else { self }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    /// Significant decimal digits carried by the mantissa.
    pub fn decimal_digits(&self) -> usize {
        (self.prec() as f64 * std::f64::consts::LOG10_2).floor() as usize
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(self.decimal_digits()))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_decimal(digits))
    }
}

macro_rules! real_binop {
    ($Tr:ident, $m:ident, $TrA:ident, $ma:ident) => {
        impl<'a, 'b> $Tr<&'b Real> for &'a Real {
            type Output = Real;
            fn $m(self, rhs: &'b Real) -> Real {
                let p = self.0.prec().max(rhs.0.prec());
                Real(Float::with_val(p, (&self.0).$m(&rhs.0)))
            }
        }
        impl $Tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl<'b> $Tr<&'b Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &'b Real) -> Real {
                (&self).$m(rhs)
            }
        }
        impl<'a> $Tr<Real> for &'a Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                self.$m(&rhs)
            }
        }
        impl<'b> $TrA<&'b Real> for Real {
            fn $ma(&mut self, rhs: &'b Real) {
                if rhs.0.prec() > self.0.prec() {
                    self.0.set_prec(rhs.0.prec());
                }
                self.0.$ma(&rhs.0);
            }
        }
        impl $TrA<Real> for Real {
            fn $ma(&mut self, rhs: Real) {
                self.$ma(&rhs);
            }
        }
    };
}

real_binop!(Add, add, AddAssign, add_assign);
real_binop!(Sub, sub, SubAssign, sub_assign);
real_binop!(Mul, mul, MulAssign, mul_assign);
real_binop!(Div, div, DivAssign, div_assign);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0.clone())
    }
}

impl Mul<i64> for &Real {
    type Output = Real;
    fn mul(self, rhs: i64) -> Real {
        Real(Float::with_val(self.prec(), &self.0 * rhs))
    }
}

impl Mul<i64> for Real {
    type Output = Real;
    fn mul(self, rhs: i64) -> Real {
        &self * rhs
    }
}

impl Div<i64> for &Real {
    type Output = Real;
    fn div(self, rhs: i64) -> Real {
        Real(Float::with_val(self.prec(), &self.0 / rhs))
    }
}

impl Div<i64> for Real {
    type Output = Real;
    fn div(self, rhs: i64) -> Real {
        &self / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_at_256_bits() {
        let two = Real::from_i64(2, 256);
        let r = two.sqrt();
        let back = &r * &r - &two;
        assert!(back.abs() < Real::pow2(-250, 256));
        assert_eq!(Real::from_f64(3.7, 128).floor(), 3);
        assert_eq!(Real::from_f64(-3.2, 128).floor(), -4);
    }

    #[test]
    fn parse_keeps_digits() {
        let x = Real::parse("388.2240000000000000000000000000000000001", 256).unwrap();
        assert!(x > Real::parse("388.224", 256).unwrap());
        assert!(Real::parse("abc", 64).is_err());
    }

    #[test]
    fn mixed_precision_widens() {
        let a = Real::one(128);
        let b = Real::one(300);
        assert_eq!((&a + &b).prec(), 300);
    }
}
