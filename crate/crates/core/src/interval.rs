//! Outward-rounded interval arithmetic over MPFR floats.
//!
//! Lower endpoints are always rounded toward -inf and upper endpoints toward
//! +inf, so the true value of any expression built from exact inputs lies in
//! the computed enclosure.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::{Float, Integer, Rational};

#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = std::cmp::Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: rug::Assign<T> + rug::ops::AssignRound<T, Round = Round, Ordering = std::cmp::Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

impl Interval {
    pub fn new(lo: Float, hi: Float) -> Interval {
        debug_assert!(!(lo > hi), "inverted interval");
        Interval { lo, hi }
    }

    pub fn from_i64(v: i64, prec: u32) -> Interval {
        Interval { lo: down(prec, v), hi: up(prec, v) }
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Interval {
        Interval { lo: down(prec, v), hi: up(prec, v) }
    }

    pub fn from_rational(v: &Rational, prec: u32) -> Interval {
        Interval { lo: down(prec, v), hi: up(prec, v) }
    }

    pub fn entire(prec: u32) -> Interval {
        Interval {
            lo: Float::with_val(prec, rug::float::Special::NegInfinity),
            hi: Float::with_val(prec, rug::float::Special::Infinity),
        }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn mid_f64(&self) -> f64 {
        let p = self.prec();
        Float::with_val(p, &self.lo + &self.hi).to_f64() / 2.0
    }

    pub fn midpoint(&self) -> Float {
        let p = self.prec();
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2;
        m
    }

    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_finite() && self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi.is_finite() && self.hi < 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo.is_finite() && self.lo >= 0
    }

    pub fn contains_zero(&self) -> bool {
        !(self.is_positive() || self.is_negative())
    }

    pub fn contains(&self, x: &Float) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Floor of every point of the enclosure, if they all agree.
    pub fn certified_floor(&self) -> Option<Integer> {
        if !self.is_finite() {
            return None;
        }
        let a = self.lo.to_integer_round(Round::Down)?.0;
        let b = self.hi.to_integer_round(Round::Down)?.0;
        (a == b).then_some(a)
    }

    pub fn certified_ceil(&self) -> Option<Integer> {
        if !self.is_finite() {
            return None;
        }
        let a = self.lo.to_integer_round(Round::Up)?.0;
        let b = self.hi.to_integer_round(Round::Up)?.0;
        (a == b).then_some(a)
    }

    pub fn sqrt(&self) -> Interval {
        let p = self.prec();
        let lo = if self.lo > 0 { down(p, self.lo.sqrt_ref()) } else { Float::new(p) };
        let hi = if self.hi > 0 { up(p, self.hi.sqrt_ref()) } else { Float::new(p) };
        Interval { lo, hi }
    }

    pub fn square(&self) -> Interval {
        let p = self.prec();
        if self.is_nonnegative() {
            Interval { lo: down(p, self.lo.square_ref()), hi: up(p, self.hi.square_ref()) }
        } else if self.is_negative() {
            Interval { lo: down(p, self.hi.square_ref()), hi: up(p, self.lo.square_ref()) }
        } else {
            let a = up(p, self.lo.square_ref());
            let b = up(p, self.hi.square_ref());
            Interval { lo: Float::new(p), hi: if a > b { a } else { b } }
        }
    }

    pub fn powu(&self, n: u32) -> Interval {
        let mut acc = Interval::from_i64(1, self.prec());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn max(&self, other: &Interval) -> Interval {
        let lo = if self.lo > other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi > other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval { lo, hi }
    }

    pub fn min(&self, other: &Interval) -> Interval {
        let lo = if self.lo < other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi < other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval { lo, hi }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = if self.lo < other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi > other.hi { self.hi.clone() } else { other.hi.clone() };
        Interval { lo, hi }
    }

    pub fn with_prec(&self, prec: u32) -> Interval {
        Interval { lo: down(prec, &self.lo), hi: up(prec, &self.hi) }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo.to_string_radix(10, Some(25)), self.hi.to_string_radix(10, Some(25)))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(
            f,
            "[{}, {}]",
            self.lo.to_string_radix(10, Some(digits)),
            self.hi.to_string_radix(10, Some(digits))
        )
    }
}

impl<'a, 'b> Add<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn add(self, r: &'b Interval) -> Interval {
        let p = self.prec().max(r.prec());
        Interval { lo: down(p, &self.lo + &r.lo), hi: up(p, &self.hi + &r.hi) }
    }
}

impl<'a, 'b> Sub<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn sub(self, r: &'b Interval) -> Interval {
        let p = self.prec().max(r.prec());
        Interval { lo: down(p, &self.lo - &r.hi), hi: up(p, &self.hi - &r.lo) }
    }
}

impl<'a, 'b> Mul<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn mul(self, r: &'b Interval) -> Interval {
        let p = self.prec().max(r.prec());
        let pairs = [(&self.lo, &r.lo), (&self.lo, &r.hi), (&self.hi, &r.lo), (&self.hi, &r.hi)];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down(p, a * b);
            let h = up(p, a * b);
            if lo.as_ref().map_or(true, |x| l < *x) {
                lo = Some(l);
            }
            if hi.as_ref().map_or(true, |x| h > *x) {
                hi = Some(h);
            }
        }
        Interval { lo: lo.unwrap(), hi: hi.unwrap() }
    }
}

impl<'a, 'b> Div<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn div(self, r: &'b Interval) -> Interval {
        let p = self.prec().max(r.prec());
        if r.contains_zero() {
            return Interval::entire(p);
        }
        let pairs = [(&self.lo, &r.lo), (&self.lo, &r.hi), (&self.hi, &r.lo), (&self.hi, &r.hi)];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let l = down(p, a / b);
            let h = up(p, a / b);
            if lo.as_ref().map_or(true, |x| l < *x) {
                lo = Some(l);
            }
            if hi.as_ref().map_or(true, |x| h > *x) {
                hi = Some(h);
            }
        }
        Interval { lo: lo.unwrap(), hi: hi.unwrap() }
    }
}

macro_rules! owned_variants {
    ($Tr:ident, $m:ident) => {
        impl $Tr<Interval> for Interval {
            type Output = Interval;
            fn $m(self, r: Interval) -> Interval {
                (&self).$m(&r)
            }
        }
        impl<'b> $Tr<&'b Interval> for Interval {
            type Output = Interval;
            fn $m(self, r: &'b Interval) -> Interval {
                (&self).$m(r)
            }
        }
        impl<'a> $Tr<Interval> for &'a Interval {
            type Output = Interval;
            fn $m(self, r: Interval) -> Interval {
                self.$m(&r)
            }
        }
    };
}

owned_variants!(Add, add);
owned_variants!(Sub, sub);
owned_variants!(Mul, mul);
owned_variants!(Div, div);

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_encloses() {
        let two = Interval::from_i64(2, 128);
        let r = two.sqrt();
        let sq = r.square();
        assert!(sq.contains(&Float::with_val(128, 2)));
        assert!(r.width() < Float::with_val(128, 1e-35));
    }

    #[test]
    fn floor_decisions() {
        let x = Interval::from_i64(7, 64) / Interval::from_i64(2, 64);
        assert_eq!(x.certified_floor(), Some(Integer::from(3)));
        let third = Interval::from_i64(1, 64) / Interval::from_i64(3, 64);
        let one = &third * &Interval::from_i64(3, 64);
        // 1 sits inside the enclosure, so the floor is undecidable
        assert_eq!(one.certified_floor(), None);
    }

    #[test]
    fn division_by_zero_straddle_is_entire() {
        let x = Interval::from_i64(1, 64);
        let z = &Interval::from_i64(1, 64) - &Interval::from_i64(1, 64);
        assert!(!(&x / &z).is_finite());
    }
}
