//! Closed-form bounds for A_q(7,4) from 2x2 determinant arguments on pairs
//! of fibers, checked in exact and outward-rounded interval arithmetic.
//!
//! Fiber sizes x_i are written a = x_2, b = x_3, c = x_4. Every floor taken
//! on an irrational quantity goes through [`Interval::certified_floor`]; if
//! the enclosure straddles an integer the precision is doubled (twice at
//! most) before giving up.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::interval::Interval;

pub const START_PREC: u32 = 256;

fn int_str<S: serde::Serializer>(v: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn opt_int_str<S: serde::Serializer>(v: &Option<Integer>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}
const ESCALATIONS: u32 = 2;

/// [n]_q = (q^n - 1)/(q - 1).
pub fn gauss1(n: u32, q: u32) -> Integer {
    (Integer::from(q).pow(n) - 1u32) / (q - 1)
}

fn qpow(q: u32, e: u32) -> Integer {
    Integer::from(q).pow(e)
}

/// (q^2 - q + 1)[7]_q, the line-counting bound on A_q(7,4;3).
pub fn cdc_bound(q: u32) -> Integer {
    (qpow(q, 2) - q + 1u32) * gauss1(7, q)
}

/// q^5 + q^3 + 1 = A_q(7,4;2).
pub fn line_spread(q: u32) -> Integer {
    qpow(q, 5) + qpow(q, 3) + 1u32
}

#[allow(non_snake_case)]
pub fn F_of_q(q: u32) -> Integer {
    let tail = qpow(q, 4) - 2u32 * qpow(q, 3) + 3u32 * qpow(q, 2) - 4u32 * Integer::from(q);
    cdc_bound(q) + tail + if q <= 3 { 3u32 } else { 4u32 }
}

/// (q^2 - q + 1)[7] + 2(q^5 + q^3 + 1).
pub fn theorem15_bound(q: u32) -> Integer {
    cdc_bound(q) + 2u32 * line_spread(q)
}

/// Interval constants for one q.
struct Consts {
    q: Interval,
    sq: Interval,
    phi: Interval,
    psi: Interval,
    g: Vec<Interval>,
    prec: u32,
}

impl Consts {
    fn new(q: u32, prec: u32) -> Consts {
        let qi = Interval::from_i64(q as i64, prec);
        let g = (0..=7).map(|n| Interval::from_integer(&gauss1(n, q), prec)).collect();
        let q2 = qpow(q, 2);
        Consts {
            sq: qi.sqrt(),
            phi: Interval::from_integer(&(q2.clone() + 1u32), prec),
            psi: Interval::from_integer(&(q2 - q + 1u32), prec),
            q: qi,
            g,
            prec,
        }
    }

    fn int(&self, v: &Integer) -> Interval {
        Interval::from_integer(v, self.prec)
    }

    fn qp(&self, e: u32) -> Interval {
        self.q.powu(e)
    }
}

/// Combination coefficients t_1, t_2 of the x_2 + x_4 argument.
fn lemma48_t(k: &Consts) -> (Interval, Interval) {
    let g = &k.g;
    let sqrt3 = g[3].sqrt();
    let t1 = k.qp(2) * k.phi.sqrt() * &g[7] / (&g[6] * &sqrt3);
    let t2 = g[2].square() * k.phi.sqrt() / (&g[3] * &sqrt3) - k.int(&Integer::from(1));
    (t1, t2)
}

/// The x_2 + x_4 determinant argument. With
///   N_1 = [[q^4 a[4]([7] - [2]a), q^3 sqrt(phi)([7]alpha - [2][4]ac)],
///          [.,  c q^3([3][7] - [3]^2 c + gamma[7])]]
///   N_2 = [[a q^3 [2](psi[3](q^2[4] - 1) + a), q[2]sqrt([3])(ac phi - alpha psi[3])],
///          [.,  c q[2]([3](q^7 + q^5 + c - 1) - gamma[2]^2 psi)]]
/// and N_t = N_1 + t_1 N_2 + t_2 (N_1)_{22}, the coefficients of alpha
/// (off-diagonal) and gamma (lower diagonal) cancel, leaving
///   det N_t = N11(a) c (A0 + A1 c) - (Kc a c)^2 >= 0.
struct Lemma48 {
    n11_lin: Interval,
    n11_quad: Interval,
    a0: Interval,
    a1: Interval,
    kc: Interval,
    alpha_coef: Interval,
    gamma_coef: Interval,
}

fn lemma48(k: &Consts) -> Lemma48 {
    let g = &k.g;
    let (t1, t2) = lemma48_t(k);
    let one = k.int(&Integer::from(1));
    let q3 = k.qp(3);
    let sphi = k.phi.sqrt();
    let s3 = g[3].sqrt();
    let tp = &t2 + &one;
    // N11 = a (n11_lin + n11_quad a)
    let n11_lin = k.qp(4) * &g[4] * &g[7]
        + &t1 * &q3 * &g[2] * (&k.psi * &g[3] * (k.qp(2) * &g[4] - &one));
    let n11_quad = &t1 * &q3 * &g[2] - k.qp(4) * &g[4] * &g[2];
    let a0 = &tp * &q3 * &g[3] * &g[7] + &t1 * &k.q * &g[2] * &g[3] * (k.qp(7) + k.qp(5) - &one);
    let a1 = &t1 * &k.q * &g[2] * &g[3] - &tp * &q3 * g[3].square();
    let kc = &t1 * &k.q * &g[2] * &s3 * &k.phi - &q3 * &sphi * &g[2] * &g[4];
    let alpha_coef = &q3 * &sphi * &g[7] - &t1 * &k.q * &g[2] * &s3 * &k.psi * &g[3];
    let gamma_coef = &tp * &q3 * &g[7] - &t1 * &k.q * g[2].powu(3) * &k.psi;
    Lemma48 { n11_lin, n11_quad, a0, a1, kc, alpha_coef, gamma_coef }
}

/// c(0) = [7]([2]^2 psi + q^7 + q^5 - 1) / ([3][2]^2 psi - [7]), exactly.
fn lemma48_c0(q: u32) -> Rational {
    let g = |n| gauss1(n, q);
    let psi = qpow(q, 2) - q + 1u32;
    let g22psi = g(2).pow(2) * psi;
    let num = g(7) * (g22psi.clone() + qpow(q, 7) + qpow(q, 5) - 1u32);
    let den = g(3) * g22psi - g(7);
    Rational::from((num, den))
}

/// Enclosure of a + c(a) for a >= 1.
fn lemma48_value(l: &Lemma48, a: &Interval) -> Interval {
    let n11 = a * (&l.n11_lin + &l.n11_quad * a);
    let cap = -(&l.a0 / &l.a1);
    let c = &n11 * &l.a0 / (l.kc.square() * a.square() - &n11 * &l.a1);
    a + c.min(&cap)
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma48Scan {
    pub q: u32,
    #[serde(serialize_with = "int_str")]
    pub max: Integer,
    /// Smallest a attaining the maximum floor.
    #[serde(serialize_with = "int_str")]
    pub argmax: Integer,
    /// Enclosure width was below this many bits at the argmax.
    pub precision: u32,
    #[serde(serialize_with = "int_str")]
    pub f_of_q: Integer,
}

impl Lemma48Scan {
    pub fn matches_formula(&self) -> bool {
        self.max == self.f_of_q
    }
}

/// max over 0 <= a <= q^5 + q^3 + 1 of floor(a + c(a)).
pub fn lemma48_scan(q: u32) -> Result<Lemma48Scan> {
    check_q(q)?;
    let top = line_spread(q).to_u64().ok_or_else(|| Error::Domain(format!("q = {q} too large to scan")))?;
    let mut prec = START_PREC;
    for _ in 0..=ESCALATIONS {
        let k = Consts::new(q, prec);
        let l = lemma48(&k);
        if !l.a1.is_negative() {
            return Err(Error::Numerical(format!("q = {q}: lower-right coefficient not certified negative")));
        }
        if !(l.alpha_coef.contains_zero() && l.gamma_coef.contains_zero()) {
            return Err(Error::Numerical(format!("q = {q}: alpha/gamma coefficients do not cancel")));
        }
        let c0 = lemma48_c0(q);
        let (c0_floor, _) = c0.clone().floor().into_numer_denom();
        let mut lo_best = (c0_floor.clone(), Integer::new());
        let mut hi_best = c0_floor;
        let mut ok = true;
        for a in 1..=top {
            let ai = k.int(&Integer::from(a));
            let v = lemma48_value(&l, &ai);
            let (Some(lo), Some(hi)) = (
                Interval::new(v.lo().clone(), v.lo().clone()).certified_floor(),
                Interval::new(v.hi().clone(), v.hi().clone()).certified_floor(),
            ) else {
                ok = false;
                break;
            };
            if lo > lo_best.0 {
                lo_best = (lo, Integer::from(a));
            }
            if hi > hi_best {
                hi_best = hi;
            }
        }
        if ok && lo_best.0 == hi_best {
            return Ok(Lemma48Scan { q, max: lo_best.0, argmax: lo_best.1, precision: prec, f_of_q: F_of_q(q) });
        }
        prec *= 2;
    }
    Err(Error::Numerical(format!("q = {q}: lemma scan undecided at {} bits", prec / 2)))
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::Domain(format!("q = {q} must be at least 2")));
    }
    Ok(())
}

/// x_3 <= ((q^2-q+1)[7] - c) / (1 + c/(q psi [3]^2)) given x_4 = c.
#[derive(Clone, Debug, Serialize)]
pub struct ExactBound {
    pub value: String,
    #[serde(serialize_with = "int_str")]
    pub floor: Integer,
}

pub fn lemma44_bound(q: u32, c: &Integer) -> Result<ExactBound> {
    check_q(q)?;
    if *c < 0 {
        return Err(Error::Domain("c must be nonnegative".into()));
    }
    let w = Integer::from(q) * (qpow(q, 2) - q + 1u32) * gauss1(3, q).pow(2);
    let v = Rational::from(((cdc_bound(q) - c) * &w, w + c));
    let fl = v.clone().floor().into_numer_denom().0;
    Ok(ExactBound { value: v.to_string(), floor: fl })
}

/// f'(x) = floor(294(381 - x)/(294 + x)), the binary case of the bound above.
pub fn f_prime(x: i64) -> i64 {
    (294 * (381 - x)).div_euclid(294 + x)
}

fn lemma46_c(k: &Consts) -> Interval {
    let q = &k.q;
    let poly = k.qp(4) + k.int(&Integer::from(3)) * k.qp(3) + k.int(&Integer::from(3)) * k.qp(2)
        + k.int(&Integer::from(3)) * q
        + k.int(&Integer::from(1));
    poly - k.int(&Integer::from(2)) * &k.g[2] * (q * &k.phi * &k.g[3]).sqrt()
}

fn lemma46_enclosure(q: u32, a: &Integer, prec: u32) -> Interval {
    let k = Consts::new(q, prec);
    let c = lemma46_c(&k);
    let ai = k.int(a);
    let one = k.int(&Integer::from(1));
    let bound = k.int(&cdc_bound(q));
    (&bound - &ai) / (one + &ai * k.g[2].square() * c / (&k.q * k.g[5].powu(3)))
}

/// Enclosure of the x_3 bound given x_2 = a:
/// ((q^2-q+1)[7] - a) / (1 + a [2]^2 C/(q[5]^3)),
/// C = q^4 + 3q^3 + 3q^2 + 3q + 1 - 2[2] sqrt(q phi [3]).
pub fn lemma46_bound(q: u32, a: &Integer) -> Result<Interval> {
    check_q(q)?;
    if *a < 0 || *a > line_spread(q) {
        return Err(Error::Domain(format!("a = {a} outside [0, q^5+q^3+1]")));
    }
    Ok(lemma46_enclosure(q, a, START_PREC))
}

pub fn lemma46_floor(q: u32, a: &Integer) -> Result<Integer> {
    lemma46_bound(q, a)?;
    // ((q^2-q+1)[7] - a) q[5]^3 / (q[5]^3 + a[2]^2 P - 2a[2]^3 sqrt(q phi [3]))
    let q5 = Integer::from(q) * gauss1(5, q).pow(3);
    let g2 = gauss1(2, q);
    let p = qpow(q, 4) + 3u32 * qpow(q, 3) + 3u32 * qpow(q, 2) + 3u32 * q + 1u32;
    let d = Integer::from(q) * (qpow(q, 2) + 1u32) * gauss1(3, q);
    let num = (cdc_bound(q) - a) * &q5;
    let den = q5 + Integer::from(a * g2.clone().pow(2)) * p;
    let e = Integer::from(-2) * a * g2.pow(3);
    surd_floor(&num, &Integer::new(), &den, &e, &d)
}

/// Sign of u + w sqrt(d), d >= 0, exactly.
fn surd_sign(u: &Integer, w: &Integer, d: &Integer) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    let (su, sw) = (u.cmp0(), w.cmp0());
    if sw == Equal || d.cmp0() == Equal {
        return su;
    }
    if su == sw || su == Equal {
        return sw;
    }
    // opposite signs: compare u^2 with w^2 d
    let lhs = Integer::from(u * u);
    let rhs = Integer::from(w * w) * d;
    match lhs.cmp(&rhs) {
        Equal => Equal,
        Greater => su,
        Less => sw,
    }
}

/// floor((a + b sqrt d)/(c + e sqrt d)) in exact integer arithmetic.
pub fn surd_floor(a: &Integer, b: &Integer, c: &Integer, e: &Integer, d: &Integer) -> Result<Integer> {
    use std::cmp::Ordering::*;
    if surd_sign(c, e, d) != Greater {
        return Err(Error::Domain("denominator must be positive".into()));
    }
    let prec = 128 + a.significant_bits().max(b.significant_bits()).max(c.significant_bits()) as u32;
    let sd = Interval::from_integer(d, prec).sqrt();
    let i = |v: &Integer| Interval::from_integer(v, prec);
    let v = (i(a) + i(b) * &sd) / (i(c) + i(e) * &sd);
    let mut k = Interval::new(v.lo().clone(), v.lo().clone())
        .certified_floor()
        .ok_or_else(|| Error::Numerical("non-finite enclosure".into()))?;
    // value >= k  <=>  (a - kc) + (b - ke) sqrt d >= 0
    let at_least = |k: &Integer| surd_sign(&Integer::from(a - k * c), &Integer::from(b - k * e), d) != Less;
    while !at_least(&k) {
        k -= 1;
    }
    while at_least(&Integer::from(&k + 1)) {
        k += 1;
    }
    Ok(k)
}

/// g'(x) = floor(62(6 sqrt70 + 59)(381 - x)/(372 sqrt70 + 3658 + 9x)).
pub fn g_prime(x: i64) -> Result<i64> {
    let i = Integer::from;
    surd_floor(&i(62 * 59 * (381 - x)), &i(62 * 6 * (381 - x)), &i(3658 + 9 * x), &i(372), &i(70))
        .map(|v| v.to_i64().expect("small"))
}

/// h'(x) = floor(((13209651 - 28575x) sqrt35 + 73499853 - 192913x)
///              / (192913 + 34671 sqrt35 - 98x)).
pub fn h_prime(x: i64) -> Result<i64> {
    let i = Integer::from;
    surd_floor(&i(73499853 - 192913 * x), &i(13209651 - 28575 * x), &i(192913 - 98 * x), &i(34671), &i(35))
        .map(|v| v.to_i64().expect("small"))
}

/// The printed maximum of 1 + u(q, x_4) + x_4:
/// 2 sqrt(q)(q([7] + q[4]) - sqrt(q) - q^{3/2} - 5/2 q^{5/2} - q^{7/2} - 2q^{9/2} - q^{11/2} - q^{13/2} + 1).
pub fn corollary45_printed_max(q: u32, prec: u32) -> Interval {
    let k = Consts::new(q, prec);
    let s = &k.sq;
    let i = |v: i64| Interval::from_i64(v, prec);
    let half = |e: u32| k.qp(e) * s;
    let inner = &k.q * (&k.g[7] + &k.q * &k.g[4]) - s - half(1) - i(5) / i(2) * half(2) - half(3) - i(2) * half(4)
        - half(5)
        - half(6)
        + i(1);
    i(2) * s * inner
}

#[derive(Clone, Debug, Serialize)]
pub struct Corollary45 {
    pub q: u32,
    #[serde(serialize_with = "int_str")]
    pub bound: Integer,
    /// The printed maximum is certified to lie below the bound.
    pub printed_max_below: bool,
    pub printed_max: String,
}

/// x_1 + x_3 + x_4 <= (q^2-q+1)[7].
pub fn corollary45_bound(q: u32) -> Result<Corollary45> {
    check_q(q)?;
    let m = corollary45_printed_max(q, START_PREC);
    let b = Interval::from_integer(&cdc_bound(q), START_PREC);
    Ok(Corollary45 {
        q,
        bound: cdc_bound(q),
        printed_max_below: (&b - &m).is_nonnegative(),
        printed_max: format!("{:.12}", m.mid_f64()),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Corollary47 {
    pub admissible: bool,
    /// Largest code size the profile allows, when the argument caps it.
    #[serde(serialize_with = "opt_int_str")]
    pub size_cap: Option<Integer>,
    pub reason: String,
}

/// Apply the x_0, x_1, x_6, x_7 case analysis to a dimension distribution
/// (x_0, ..., x_7) of a code in F_q^7 with minimum distance 4, assuming
/// |C| >= (q^2-q+1)[7] + 3.
pub fn corollary47_check(q: u32, profile: &[Integer; 8]) -> Result<Corollary47> {
    check_q(q)?;
    let threshold = cdc_bound(q) + 3u32;
    let total: Integer = profile.iter().sum();
    let verdict = |cap: Integer, reason: &str| Corollary47 {
        admissible: cap >= threshold && total <= cap,
        size_cap: Some(cap),
        reason: reason.to_string(),
    };
    for i in [0usize, 1, 6, 7] {
        if profile[i] > 1 {
            return Ok(Corollary47 {
                admissible: false,
                size_cap: None,
                reason: format!("x_{i} <= 1 by the minimum distance"),
            });
        }
    }
    let (x0, x1, x6, x7) = (&profile[0], &profile[1], &profile[6], &profile[7]);
    if *x0 == 1 && *x7 == 1 {
        return Ok(verdict(Integer::from(2), "x_0 = x_7 = 1 forces C within {0, F_q^7}"));
    }
    if Integer::from(x0 + x7) == 1 {
        // up to orthogonality x_7 = 1
        let partner = if *x7 == 1 { x1 } else { x6 };
        if *partner == 1 {
            return Ok(verdict(cdc_bound(q) + 2u32, "x_7 = x_1 = 1: |C| <= A_q(7,4;3) + 2"));
        }
        return Ok(verdict(cdc_bound(q) + 1u32, "x_7 = 1: |C| = x_2 + x_3 + 1 <= (q^2-q+1)[7] + 1"));
    }
    if *x1 == 1 && *x6 == 1 {
        return Ok(verdict(cdc_bound(q) + 2u32, "x_1 = x_6 = 1: |C| = x_3 + x_4 + 2"));
    }
    Ok(Corollary47 {
        admissible: total >= threshold,
        size_cap: None,
        reason: if total >= threshold {
            "x_0 = x_7 = 0 and x_1 + x_6 <= 1".into()
        } else {
            format!("profile has {total} codewords, below {threshold}")
        },
    })
}

/// A bound function on an integer range: either a closure or a table.
pub type BoundFn<'a> = &'a dyn Fn(i64) -> Result<i64>;

/// max over 0 <= x_2, x_5 <= cap of
///   x_2 + F(min{g(x_2), h(x_5)}, min{g(x_5), h(x_2)}) + x_5,
///   F(u_3, u_4) = max over 0 <= x_4 <= min{u_3, u_4, x4_cap} of min{u_3, f(x_4)} + x_4.
pub fn honold_strategy_with(f: BoundFn, g: BoundFn, h: BoundFn, cap: i64, x4_cap: i64) -> Result<i64> {
    let mut fv = BTreeMap::new();
    let mut f_at = |x: i64| -> Result<i64> {
        if let Some(v) = fv.get(&x) {
            return Ok(*v);
        }
        let v = f(x)?;
        fv.insert(x, v);
        Ok(v)
    };
    let gs: Vec<i64> = (0..=cap).map(g).collect::<Result<_>>()?;
    let hs: Vec<i64> = (0..=cap).map(h).collect::<Result<_>>()?;
    let mut best = i64::MIN;
    for x2 in 0..=cap {
        for x5 in 0..=cap {
            let u3 = gs[x2 as usize].min(hs[x5 as usize]);
            let u4 = gs[x5 as usize].min(hs[x2 as usize]);
            let top = u3.min(u4).min(x4_cap);
            let mut inner = i64::MIN;
            for x4 in 0..=top.max(-1) {
                inner = inner.max(u3.min(f_at(x4)?) + x4);
            }
            if inner == i64::MIN {
                continue;
            }
            best = best.max(x2 + inner + x5);
        }
    }
    Ok(best)
}

/// The binary run with x_2, x_5 <= 41 and x_4 <= 151.
pub fn honold_strategy(f: BoundFn, g: BoundFn, h: BoundFn) -> Result<i64> {
    honold_strategy_with(f, g, h, 41, 151)
}

/// Largest x with x <= f(x) for nonincreasing f.
pub fn self_bounded_max(f: impl Fn(i64) -> i64, limit: i64) -> i64 {
    (0..=limit).filter(|&x| x <= f(x)).max().unwrap_or(0)
}

/// A bound function given as a JSON array of [x, value] pairs.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TableFunction {
    pub values: BTreeMap<i64, i64>,
}

impl TableFunction {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let pairs: Vec<(i64, i64)> = serde_json::from_str(text)?;
        Ok(TableFunction { values: pairs.into_iter().collect() })
    }

    pub fn eval(&self, x: i64) -> Result<i64> {
        self.values.get(&x).copied().ok_or_else(|| Error::Domain(format!("bound table has no entry for x = {x}")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub q: Option<u32>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AnalyticReport {
    pub checks: Vec<Check>,
}

impl AnalyticReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, q: Option<u32>, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), q, passed, detail });
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "passed": self.passed(), "checks": self.checks })
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| check | q | result | detail |\n|---|---|---|---|\n");
        for c in &self.checks {
            let q = c.q.map(|q| q.to_string()).unwrap_or_default();
            let r = if c.passed { "pass" } else { "FAIL" };
            s.push_str(&format!("| {} | {} | {} | {} |\n", c.name, q, r, c.detail));
        }
        s
    }
}

/// Positivity of every combination coefficient (and of the constant C of
/// the x_2 + x_3 argument), certified by interval arithmetic.
pub fn t_positivity(q: u32) -> Vec<(String, bool)> {
    let k = Consts::new(q, START_PREC);
    let g = &k.g;
    let s = &k.sq;
    let one = k.int(&Integer::from(1));
    let mut out = Vec::new();
    // x_3 + x_4
    let t1 = k.qp(2) * s * &g[7] / (&g[2] * &g[6]);
    let t2 = k.qp(2) * &g[5] * &g[7] / (g[2].square() * &g[6] * (k.qp(2) + &k.q * s + &k.q + s + &one));
    out.push(("x3+x4 t1".to_string(), t1.is_positive()));
    out.push(("x3+x4 t2".to_string(), t2.is_positive()));
    // x_1 + x_3 + x_4
    let t1 = k.qp(2) * s * &g[7] / (&g[3] * &k.psi * g[2].square());
    let t2 = &g[7] * k.qp(2) * (&g[3] - s * &g[2]) / (&g[3] * &k.psi * g[2].powu(3));
    out.push(("x1+x3+x4 t1".to_string(), t1.is_positive()));
    out.push(("x1+x3+x4 t2".to_string(), t2.is_positive()));
    // x_2 + x_3
    let t1 = k.qp(2) * &g[7] / (g[2].square() * &k.psi);
    out.push(("x2+x3 t1".to_string(), t1.is_positive()));
    out.push(("x2+x3 C".to_string(), lemma46_c(&k).is_positive()));
    // x_2 + x_4
    let (t1, t2) = lemma48_t(&k);
    out.push(("x2+x4 t1".to_string(), t1.is_positive()));
    out.push(("x2+x4 t2".to_string(), t2.is_positive()));
    out
}

/// Run the whole suite for q in 2..=q_max (scans) and 2..=t_max (positivity).
pub fn analytic_suite(q_max: u32, t_max: u32) -> AnalyticReport {
    let mut r = AnalyticReport::default();
    for q in 2..=q_max {
        match lemma48_scan(q) {
            Ok(s) => r.push(
                "x2+x4 scan = F(q)",
                Some(q),
                s.matches_formula(),
                format!("scan {} at a = {}, F(q) = {}", s.max, s.argmax, s.f_of_q),
            ),
            Err(e) => r.push("x2+x4 scan = F(q)", Some(q), false, e.to_string()),
        }
        let t = theorem15_bound(q);
        r.push("general bound >= F(q)", Some(q), t >= F_of_q(q), format!("{t}"));
        match corollary45_bound(q) {
            Ok(c) => r.push("x1+x3+x4 printed maximum", Some(q), c.printed_max_below, c.printed_max),
            Err(e) => r.push("x1+x3+x4 printed maximum", Some(q), false, e.to_string()),
        }
    }
    let mut bad = Vec::new();
    let mut count = 0;
    for q in 2..=t_max {
        for (name, ok) in t_positivity(q) {
            count += 1;
            if !ok {
                bad.push(format!("{name} at q = {q}"));
            }
        }
    }
    r.push(
        "t coefficients positive",
        None,
        bad.is_empty(),
        if bad.is_empty() { format!("{count} coefficients, q = 2..={t_max}") } else { bad.join(", ") },
    );
    binary_checks(&mut r);
    r
}

fn binary_checks(r: &mut AnalyticReport) {
    let f = |x: i64| -> Result<i64> { Ok(f_prime(x)) };
    let g = |x: i64| g_prime(x);
    let h = |x: i64| h_prime(x);
    match honold_strategy(&f, &g, &h) {
        Ok(v) => r.push("f', g', h' maximization", Some(2), v == 432, format!("{v}")),
        Err(e) => r.push("f', g', h' maximization", Some(2), false, e.to_string()),
    }
    let x4 = self_bounded_max(f_prime, 381);
    r.push("x4 <= 151 from f'", Some(2), x4 == 151, format!("{x4}"));
    let agree = (0..=381).all(|c| lemma44_bound(2, &Integer::from(c)).map(|b| b.floor == f_prime(c)).unwrap_or(false));
    r.push("x3+x4 bound equals f'", Some(2), agree, "c = 0..=381".into());
    let agree = (0..=41).all(|a| match (lemma46_floor(2, &Integer::from(a)), g_prime(a)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    });
    r.push("x2+x3 bound equals g'", Some(2), agree, "a = 0..=41".into());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_values() {
        let v: Vec<Integer> = (2..=5).map(F_of_q).collect();
        assert_eq!(v, [388, 7696, 71157, 410585]);
    }

    #[test]
    fn exact_c0() {
        for q in 2..=13 {
            assert_eq!(lemma48_c0(q), Rational::from(cdc_bound(q)));
        }
    }

    #[test]
    fn binary_functions() {
        assert_eq!(lemma44_bound(2, &Integer::from(0)).unwrap().floor, 381);
        assert_eq!(lemma44_bound(2, &Integer::from(381)).unwrap().floor, 0);
        assert_eq!(lemma44_bound(2, &Integer::from(87)).unwrap().floor, 226);
        assert_eq!(f_prime(87), 226);
        assert_eq!(lemma46_floor(2, &Integer::from(0)).unwrap(), 381);
        assert_eq!(lemma46_floor(2, &Integer::from(41)).unwrap(), g_prime(41).unwrap());
    }

    #[test]
    fn exact_surd_floors() {
        assert_eq!(g_prime(0).unwrap(), 381);
        let i = Integer::from;
        // (1 + sqrt 4)/1 = 3 exactly, sqrt(2) = 1.41...
        assert_eq!(surd_floor(&i(1), &i(1), &i(1), &i(0), &i(4)).unwrap(), 3);
        assert_eq!(surd_floor(&i(0), &i(1), &i(1), &i(0), &i(2)).unwrap(), 1);
        assert_eq!(surd_floor(&i(0), &i(-1), &i(1), &i(0), &i(2)).unwrap(), -2);
    }

    fn profile(v: [i64; 8]) -> [Integer; 8] {
        v.map(Integer::from)
    }

    #[test]
    fn improper_subspaces() {
        let both = corollary47_check(2, &profile([1, 0, 0, 0, 0, 0, 0, 1])).unwrap();
        assert!(!both.admissible);
        let ends = corollary47_check(2, &profile([0, 1, 0, 190, 191, 0, 1, 0])).unwrap();
        assert!(!ends.admissible);
        assert_eq!(ends.size_cap, Some(Integer::from(383)));
        let ok = corollary47_check(2, &profile([0, 0, 41, 0, 347, 0, 0, 0])).unwrap();
        assert!(ok.admissible);
    }

    #[test]
    fn degenerate_strategy() {
        let z = |_: i64| -> Result<i64> { Ok(0) };
        assert_eq!(honold_strategy(&z, &z, &z).unwrap(), 82);
    }
}
