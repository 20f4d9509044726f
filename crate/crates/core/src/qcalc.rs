//! Exact q-analog arithmetic and the closed-form subspace counts.
//!
//! Everything here is integer arithmetic on [`rug::Integer`]. Parameter
//! combinations that describe an empty family of subspaces evaluate to 0
//! instead of failing, because they show up naturally inside the summations.

use std::cell::RefCell;
use std::collections::HashMap;

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts are always nonnegative integers, so they are stored as such.
pub type ExactScalar = Integer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QParams {
    pub q: u32,
    pub prime_power_checked: bool,
}

impl QParams {
    pub fn new(q: u32) -> Result<QParams> {
        if q < 2 {
            return Err(Error::Domain(format!("field order q = {q} must be at least 2")));
        }
        Ok(QParams { q, prime_power_checked: false })
    }

    /// Like [`QParams::new`] but also rejects q that are not prime powers.
    pub fn checked(q: u32) -> Result<QParams> {
        let mut p = QParams::new(q)?;
        if !is_prime_power(q) {
            return Err(Error::Domain(format!("q = {q} is not a prime power")));
        }
        p.prime_power_checked = true;
        Ok(p)
    }

    pub fn pow(&self, e: u32) -> Integer {
        Integer::from(self.q).pow(e)
    }
}

pub fn is_prime_power(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        return true;
    }
    let mut r = q;
    while r % p == 0 {
        r /= p;
    }
    r == 1
}

/// phi = q^2 + 1 and psi = q^2 - q + 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotationConstants {
    pub phi: ExactScalar,
    pub psi_const: ExactScalar,
}

pub fn notation(q: QParams) -> NotationConstants {
    let q2 = q.pow(2);
    NotationConstants { phi: q2.clone() + 1, psi_const: q2 - q.q + 1 }
}

fn q_minus_one_pow(q: QParams, e: i64) -> Integer {
    // q^e - 1 for e >= 0
    q.pow(e as u32) - 1u32
}

/// [n] = (q^n - 1)/(q - 1).
pub fn gauss_number(n: i64, q: QParams) -> Result<ExactScalar> {
    if n < 0 {
        return Err(Error::Domain(format!("gauss_number needs n >= 0, got {n}")));
    }
    Ok(q_minus_one_pow(q, n) / (q.q - 1))
}

thread_local! {
    static BINOM_CACHE: RefCell<HashMap<(u32, i64, i64), Integer>> = RefCell::new(HashMap::new());
}

/// Gaussian binomial [n, k]_q; 0 outside 0 <= k <= n.
pub fn gauss_binomial(n: i64, k: i64, q: QParams) -> ExactScalar {
    if k < 0 || n < 0 || k > n {
        return Integer::new();
    }
    let k = k.min(n - k);
    if k == 0 {
        return Integer::from(1);
    }
    if let Some(v) = BINOM_CACHE.with(|c| c.borrow().get(&(q.q, n, k)).cloned()) {
        return v;
    }
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for i in 1..=k {
        num *= q_minus_one_pow(q, n - k + i);
        den *= q_minus_one_pow(q, i);
    }
    let v = num.div_exact(&den);
    BINOM_CACHE.with(|c| c.borrow_mut().insert((q.q, n, k), v.clone()));
    v
}

/// q-factorial [1][2]...[n].
pub fn q_factorial(n: i64, q: QParams) -> Result<ExactScalar> {
    if n < 0 {
        return Err(Error::Domain(format!("q_factorial needs n >= 0, got {n}")));
    }
    let mut acc = Integer::from(1);
    for i in 1..=n {
        acc *= gauss_number(i, q)?;
    }
    Ok(acc)
}

/// Number of d-subspaces of the (a+b-c)-space A + B meeting both A and B
/// trivially, where dim A = a, dim B = b, dim(A n B) = c.
pub fn psi_count(a: i64, b: i64, c: i64, d: i64, q: QParams) -> Result<ExactScalar> {
    if c > a.min(b) {
        return Err(Error::Domain(format!("psi_count needs c <= min(a,b), got a={a} b={b} c={c}")));
    }
    if c < 0 || d < 0 {
        return Ok(Integer::new());
    }
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for j in 0..d {
        if a - c - j <= 0 || b - c - j <= 0 {
            return Ok(Integer::new());
        }
        num *= q.pow((j + c) as u32);
        num *= q_minus_one_pow(q, a - c - j);
        num *= q_minus_one_pow(q, b - c - j);
        den *= q_minus_one_pow(q, d - j);
    }
    Ok(num.div_exact(&den))
}

/// Number of d-subspaces D of A + B with dim(D n A) = alpha,
/// dim(D n B) = beta and dim(D n A n B) = gamma.
#[allow(clippy::too_many_arguments)]
pub fn varphi_count(a: i64, b: i64, c: i64, d: i64, alpha: i64, beta: i64, gamma: i64, q: QParams) -> ExactScalar {
    let feasible = [a, b, c, d, alpha, beta, gamma].iter().all(|&v| v >= 0)
        && c <= a.min(b)
        && gamma <= alpha.min(beta).min(c)
        && alpha <= a.min(d)
        && beta <= b.min(d)
        && alpha - gamma <= a - c
        && beta - gamma <= b - c
        && d - alpha - beta + gamma >= 0;
    if !feasible {
        return Integer::new();
    }
    let mut v = gauss_binomial(c, gamma, q);
    v *= q.pow(((alpha + beta - 2 * gamma) * (c - gamma)) as u32);
    v *= gauss_binomial(a - c, alpha - gamma, q);
    v *= gauss_binomial(b - c, beta - gamma, q);
    if v == 0 {
        return v;
    }
    v * psi_count(a - alpha, b - beta, c - gamma, d - alpha - beta + gamma, q).unwrap_or_default()
}

/// Number of d-subspaces of F_q^n with dim(D n A) = alpha, dim(D n B) = beta,
/// dim(D n A n B) = gamma, for fixed A, B of dimensions a, b meeting in c.
#[allow(clippy::too_many_arguments)]
pub fn chi_count(a: i64, b: i64, c: i64, d: i64, n: i64, alpha: i64, beta: i64, gamma: i64, q: QParams) -> ExactScalar {
    let span = a + b - c;
    if [a, b, c, d, n, alpha, beta, gamma].iter().any(|&v| v < 0) || span > n || d > n || c > a.min(b) {
        return Integer::new();
    }
    let mut total = Integer::new();
    let lo = alpha + beta - gamma;
    let hi = d.min(span);
    for x in lo..=hi {
        let inner = varphi_count(a, b, c, x, alpha, beta, gamma, q);
        if inner == 0 {
            continue;
        }
        let mut term = q.pow(((d - x) * (span - x)) as u32);
        term *= gauss_binomial(n - span, d - x, q);
        term *= inner;
        total += term;
    }
    total
}

/// Intersection number p^{(a,b,k)}_{(a,d,i),(d,b,j)}: the number of
/// d-subspaces meeting A in codimension i and B in codimension j, where
/// (A, B) is a pair with dim(A n B) = min(a,b) - k.
#[allow(clippy::too_many_arguments)]
pub fn triple_count(a: i64, b: i64, k: i64, d: i64, n: i64, i: i64, j: i64, q: QParams) -> ExactScalar {
    let m = a.min(b);
    if k < 0 || k > m || i < 0 || j < 0 {
        return Integer::new();
    }
    let alpha = a.min(d) - i;
    let beta = b.min(d) - j;
    let mut total = Integer::new();
    for l in 0..=(m - k) {
        total += chi_count(a, b, m - k, d, n, alpha, beta, m - k - l, q);
    }
    total
}

/// Number of b-subspaces meeting a fixed a-space in dimension exactly t.
pub fn count_meeting(a: i64, t: i64, b: i64, n: i64, q: QParams) -> ExactScalar {
    if t < 0 || t > a.min(b) || a > n || b > n || a < 0 || b < 0 {
        return Integer::new();
    }
    let mut v = q.pow(((a - t) * (b - t)) as u32);
    v *= gauss_binomial(a, t, q);
    v *= gauss_binomial(n - a, b - t, q);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: u32) -> QParams {
        QParams::new(v).unwrap()
    }

    #[test]
    fn gauss_numbers() {
        assert_eq!(gauss_number(0, q(2)).unwrap(), 0);
        assert_eq!(gauss_number(7, q(2)).unwrap(), 127);
        assert_eq!(gauss_number(6, q(2)).unwrap(), 63);
        assert!(gauss_number(-1, q(2)).is_err());
    }

    #[test]
    fn gauss_binomials() {
        assert_eq!(gauss_binomial(7, 2, q(2)), 2667);
        assert_eq!(gauss_binomial(3, 2, q(2)), 7);
        assert_eq!(gauss_binomial(7, 3, q(2)), 11811);
        assert_eq!(gauss_binomial(5, 0, q(3)), 1);
        assert_eq!(gauss_binomial(5, 6, q(3)), 0);
        assert_eq!(gauss_binomial(5, -1, q(3)), 0);
    }

    #[test]
    fn q_factorials() {
        assert_eq!(q_factorial(0, q(5)).unwrap(), 1);
        assert_eq!(q_factorial(2, q(2)).unwrap(), 3);
        assert_eq!(q_factorial(3, q(2)).unwrap(), 21);
    }

    #[test]
    fn psi_small() {
        assert_eq!(psi_count(3, 2, 1, 0, q(2)).unwrap(), 1);
        assert_eq!(psi_count(1, 1, 0, 1, q(2)).unwrap(), 1);
        // points of F_2^3 off two planes meeting in a line: 7 - 3 - 3 + 1
        assert_eq!(psi_count(2, 2, 1, 1, q(2)).unwrap(), 2);
        assert!(psi_count(1, 1, 2, 1, q(2)).is_err());
    }

    #[test]
    fn varphi_small() {
        assert_eq!(varphi_count(2, 2, 1, 0, 0, 0, 0, q(2)), 1);
        assert_eq!(varphi_count(2, 2, 1, 1, 1, 1, 1, q(2)), 1);
        assert_eq!(varphi_count(2, 2, 1, 1, 1, 0, 0, q(2)), 2);
        assert_eq!(varphi_count(2, 2, 1, 1, 2, 0, 0, q(2)), 0);
    }

    #[test]
    fn chi_small() {
        assert_eq!(chi_count(2, 1, 0, 0, 4, 0, 0, 0, q(2)), 1);
        // points of F_2^3 other than two fixed points
        assert_eq!(chi_count(1, 1, 0, 1, 3, 0, 0, 0, q(2)), 5);
        let mut total = Integer::new();
        for al in 0..=2 {
            for be in 0..=2 {
                for ga in 0..=2 {
                    total += chi_count(2, 2, 1, 2, 4, al, be, ga, q(2));
                }
            }
        }
        assert_eq!(total, 35);
    }

    #[test]
    fn triple_and_meeting() {
        assert_eq!(triple_count(1, 1, 1, 1, 2, 1, 1, q(2)), 1);
        assert_eq!(count_meeting(1, 0, 2, 7, q(2)), 2604);
        assert_eq!(count_meeting(2, 2, 2, 5, q(3)), 1);
        assert_eq!(count_meeting(2, 1, 2, 4, q(2)), 18);
    }

    #[test]
    fn notation_constants() {
        let c = notation(q(3));
        assert_eq!(c.phi, 10);
        assert_eq!(c.psi_const, 7);
        assert_eq!(Integer::from(&c.phi - &c.psi_const), 3);
    }

    #[test]
    fn prime_powers() {
        assert!(QParams::checked(4).is_ok());
        assert!(QParams::checked(6).is_err());
        assert!(QParams::new(1).is_err());
        assert!(is_prime_power(49) && is_prime_power(2) && !is_prime_power(12));
    }
}
