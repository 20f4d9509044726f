//! Closed forms for the n = 7 representation on the proper fibers 1..=6,
//! as printed for general q: valencies m_{abc}/|X_a| (exact) and the block
//! entries (Δ_s(A_{abc}))_{ab} (outward-rounded intervals).
//!
//! Only rows with a <= b and a + b <= 7 are stored; the rest follow from
//! transposition and the orthogonality map a -> 7 - a.

use rug::ops::Pow;
use rug::Integer;

use crate::coherent::RelationId;
use crate::interval::Interval;
use crate::qcalc::{gauss_binomial, QParams};

pub struct Table1Row {
    pub rel: RelationId,
    pub valency: Integer,
    pub delta: Vec<Option<Interval>>,
}

pub struct Table1 {
    pub q: u32,
    pub rows: Vec<Table1Row>,
    pub f: Vec<Integer>,
    sizes: Vec<Integer>,
}

struct Ctx {
    q: Integer,
    qp: QParams,
    prec: u32,
}

impl Ctx {
    fn p(&self, e: u32) -> Integer {
        self.q.clone().pow(e)
    }
    fn g(&self, k: u32) -> Integer {
        (self.p(k) - 1u32) / (self.q.clone() - 1u32)
    }
    fn gb(&self, n: i64, k: i64) -> Integer {
        gauss_binomial(n, k, self.qp)
    }
    fn i(&self, v: Integer) -> Interval {
        Interval::from_integer(&v, self.prec)
    }
    fn sq(&self, v: Integer) -> Interval {
        self.i(v).sqrt()
    }
    /// q^{e/2}
    fn half(&self, e: u32) -> Interval {
        self.sq(self.p(e))
    }
    fn phi(&self) -> Integer {
        self.p(2) + 1u32
    }
    fn psi(&self) -> Integer {
        self.p(2) - self.q.clone() + 1u32
    }
}

impl Table1 {
    pub fn new(q: u32, prec: u32) -> Table1 {
        let c = Ctx { q: Integer::from(q), qp: QParams { q, prime_power_checked: false }, prec };
        let one = || Some(c.i(Integer::from(1)));
        let q1 = c.q.clone();
        let (phi, psi) = (c.phi(), c.psi());
        let g = |k| c.g(k);
        let p = |e| c.p(e);
        let mut rows = Vec::new();
        let mut push = |a, b, cc, val: Integer, d: Vec<Option<Interval>>| {
            rows.push(Table1Row { rel: RelationId::new(a, b, cc), valency: val, delta: d });
        };
        // fiber pair (1,1)
        push(1, 1, 0, Integer::from(1), vec![one(), one()]);
        push(1, 1, 1, &q1 * g(6), vec![Some(c.i(&q1 * g(6))), Some(c.i(Integer::from(-1)))]);
        // (1,2)
        let s_psi3 = c.sq(&psi * g(3));
        let s_q5 = c.sq(&q1 * g(5));
        push(1, 2, 0, g(6), vec![Some(c.i(g(2)) * &s_psi3), Some(s_q5.clone())]);
        push(1, 2, 1, p(2) * &psi * g(3) * g(5), vec![Some(c.i(p(2) * g(5)) * &s_psi3), Some(-&s_q5)]);
        // (1,3)
        let s_psi5 = c.sq(&psi * g(5));
        let s_phi5 = c.sq(&phi * g(5));
        push(1, 3, 0, c.gb(6, 2), vec![Some(c.i(g(3)) * &s_psi5), Some(c.i(q1.clone()) * &s_phi5)]);
        push(
            1,
            3,
            1,
            p(3) * (p(3) + 1u32) * c.gb(5, 2),
            vec![Some(c.i(p(3) * g(4)) * &s_psi5), Some(-(c.i(q1.clone()) * &s_phi5))],
        );
        // (1,4)
        let s_qphi5 = c.sq(q1.clone() * &phi * g(5));
        push(1, 4, 0, c.gb(6, 3), vec![Some(c.i(g(4)) * &s_psi5), Some(c.i(q1.clone()) * &s_qphi5)]);
        push(
            1,
            4,
            1,
            p(4) * &psi * g(3) * g(5),
            vec![Some(c.i(p(4) * g(3)) * &s_psi5), Some(-(c.i(q1.clone()) * &s_qphi5))],
        );
        // (1,5)
        let s5 = c.sq(g(5));
        push(1, 5, 0, c.gb(6, 4), vec![Some(c.i(g(5)) * &s_psi3), Some(c.i(p(2)) * &s5)]);
        push(1, 5, 1, p(5) * g(6), vec![Some(c.i(p(5) * g(2)) * &s_psi3), Some(-(c.i(p(2)) * &s5))]);
        // (1,6)
        push(1, 6, 0, c.gb(6, 5), vec![Some(c.i(g(6))), Some(c.half(5))]);
        push(1, 6, 1, p(6), vec![Some(c.i(p(6))), Some(-c.half(5))]);
        // (2,2)
        push(2, 2, 0, Integer::from(1), vec![one(), one(), one()]);
        let v = &q1 * g(2) * g(5);
        push(2, 2, 1, v.clone(), vec![Some(c.i(v)), Some(c.i(p(2) * g(4) - 1u32)), Some(c.i(-g(2)))]);
        let v = p(4) * &phi * g(5);
        push(2, 2, 2, v.clone(), vec![Some(c.i(v)), Some(c.i(-(p(2) * g(4)))), Some(c.i(q1.clone()))]);
        // (2,3)
        let s35 = c.sq(g(3) * g(5));
        let s_qphi = c.sq(q1.clone() * &phi);
        let s3 = c.sq(g(3));
        push(2, 3, 0, g(5), vec![Some(s35.clone()), Some(c.i(g(2)) * &s_qphi), Some(c.i(q1.clone()) * &s3)]);
        push(
            2,
            3,
            1,
            p(2) * g(4) * g(5),
            vec![
                Some(c.i(p(2) * g(4)) * &s35),
                Some(c.i(p(3) * g(3) - g(2)) * &s_qphi),
                Some(c.i(-(&q1 * g(2))) * &s3),
            ],
        );
        push(
            2,
            3,
            2,
            p(6) * &phi * g(5),
            vec![Some(c.i(p(6) * &phi) * &s35), Some(c.i(-(p(3) * g(3))) * &s_qphi), Some(c.i(p(2)) * &s3)],
        );
        // (2,4)
        let s_phi = c.sq(phi.clone());
        push(
            2,
            4,
            0,
            &phi * g(5),
            vec![Some(c.i(phi.clone()) * &s35), Some(c.i(&q1 * g(3)) * &s_phi), Some(c.i(p(2)) * &s3)],
        );
        push(
            2,
            4,
            1,
            p(3) * g(4) * g(5),
            vec![
                Some(c.i(p(3) * g(4)) * &s35),
                Some(c.i(&q1 * (p(4) * g(2) - g(3))) * &s_phi),
                Some(c.i(-(p(2) * g(2))) * &s3),
            ],
        );
        push(
            2,
            4,
            2,
            p(8) * g(5),
            vec![Some(c.i(p(8)) * &s35), Some(c.i(-(p(5) * g(2))) * &s_phi), Some(c.i(p(3)) * &s3)],
        );
        // (2,5)
        let v = &phi * g(5);
        push(2, 5, 0, v.clone(), vec![Some(c.i(v)), Some(c.half(3) * c.i(g(4))), Some(c.i(p(3)))]);
        let v = p(4) * g(2) * g(5);
        push(
            2,
            5,
            1,
            v.clone(),
            vec![Some(c.i(v)), Some(c.half(3) * c.i(p(5) - g(4))), Some(c.i(-(g(2) * p(3))))],
        );
        push(2, 5, 2, p(10), vec![Some(c.i(p(10))), Some(-c.half(13)), Some(c.i(p(4)))]);
        // (3,3)
        push(3, 3, 0, Integer::from(1), vec![one(), one(), one(), one()]);
        let v = &q1 * g(3) * g(4);
        push(
            3,
            3,
            1,
            v.clone(),
            vec![
                Some(c.i(v)),
                Some(c.i(p(2) * g(2) * g(3) - 1u32)),
                Some(c.i((p(2) - 1u32) * g(3))),
                Some(c.i(-g(3))),
            ],
        );
        let v = p(4) * &phi * g(3) * g(3);
        push(
            3,
            3,
            2,
            v.clone(),
            vec![
                Some(c.i(v)),
                Some(c.i(p(2) * g(3) * (p(4) - &q1 - 1u32))),
                Some(c.i(-(&q1 * g(3) * (p(2) + &q1 - 1u32)))),
                Some(c.i(&q1 * g(3))),
            ],
        );
        let v = p(9) * g(4);
        push(
            3,
            3,
            3,
            v.clone(),
            vec![Some(c.i(v)), Some(c.i(-(p(6) * g(3)))), Some(c.i(p(4) * g(2))), Some(c.i(-p(3)))],
        );
        // (3,4)
        let sq = c.half(1);
        let sq3 = c.half(3);
        push(
            3,
            4,
            0,
            g(4),
            vec![Some(c.i(g(4))), Some(c.i(g(3)) * &sq), Some(c.i(&q1 * g(2))), Some(sq3.clone())],
        );
        let v = p(2) * &phi * g(3) * g(3);
        push(
            3,
            4,
            1,
            v.clone(),
            vec![
                Some(c.i(v)),
                Some(c.i(g(3) * (p(3) * g(2) - 1u32)) * &sq),
                Some(c.i(&q1 * g(3) * (p(2) - &q1 - 1u32))),
                Some(-(c.i(g(3)) * &sq3)),
            ],
        );
        let v = p(6) * g(3) * g(4);
        push(
            3,
            4,
            2,
            v.clone(),
            vec![
                Some(c.i(v)),
                Some(c.i(p(3) * (p(5) - g(2) * g(3))) * &sq),
                Some(c.i(-(p(2) * (p(3) - 1u32) * g(2)))),
                Some(c.i(&q1 * g(3)) * &sq3),
            ],
        );
        push(
            3,
            4,
            3,
            p(12),
            vec![Some(c.i(p(12))), Some(-(c.i(p(8)) * &sq)), Some(c.i(p(6))), Some(-(c.i(p(3)) * &sq3))],
        );
        let f = vec![
            Integer::from(1),
            c.gb(7, 1) - 1u32,
            c.gb(7, 2) - c.gb(7, 1),
            c.gb(7, 3) - c.gb(7, 2),
        ];
        let sizes = (0..=7).map(|a| c.gb(7, a)).collect();
        Table1 { q, rows, f, sizes }
    }

    /// Stored row and the image of `rel` under transposition/orthogonality.
    fn locate(&self, rel: RelationId) -> Option<&Table1Row> {
        let (x, y) = (rel.a, rel.b);
        if !(1..=6).contains(&x) || !(1..=6).contains(&y) {
            return None;
        }
        let cands = [(x, y), (y, x), (7 - x, 7 - y), (7 - y, 7 - x)];
        cands
            .iter()
            .filter(|(a, b)| a <= b)
            .find_map(|&(a, b)| self.rows.iter().find(|r| r.rel == RelationId::new(a, b, rel.c)))
    }

    /// m_{abc} as an exact integer.
    pub fn m(&self, rel: RelationId) -> Option<Integer> {
        let row = self.locate(rel)?;
        Some(Integer::from(&self.sizes[row.rel.a] * &row.valency))
    }

    /// m_{abc} / |X_a| for the queried orientation.
    pub fn valency(&self, rel: RelationId) -> Option<Integer> {
        Some(self.m(rel)? / &self.sizes[rel.a])
    }

    /// (Δ_s(A_{abc}))_{ab}; `None` where the printed table has an empty cell.
    pub fn delta(&self, s: usize, rel: RelationId) -> Option<Interval> {
        self.locate(rel)?.delta.get(s).cloned().flatten()
    }

    pub fn fiber_size(&self, a: usize) -> &Integer {
        &self.sizes[a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_values_at_q2() {
        let t = Table1::new(2, 128);
        assert_eq!(t.f[1], 126);
        assert_eq!(t.valency(RelationId::new(1, 2, 1)).unwrap(), 2604);
        assert_eq!(t.valency(RelationId::new(1, 6, 1)).unwrap(), 64);
        let d = t.delta(1, RelationId::new(1, 6, 1)).unwrap();
        assert!((d.mid_f64() + 32f64.sqrt()).abs() < 1e-12);
        let d = t.delta(0, RelationId::new(1, 3, 0)).unwrap();
        assert!((d.mid_f64() - 7.0 * 93f64.sqrt()).abs() < 1e-9);
        assert!(t.delta(2, RelationId::new(1, 2, 0)).is_none());
    }

    #[test]
    fn orthogonality_extension() {
        let t = Table1::new(3, 128);
        assert_eq!(t.valency(RelationId::new(2, 4, 2)).unwrap(), Integer::from(6561 * 121));
        assert_eq!(t.m(RelationId::new(5, 3, 2)), t.m(RelationId::new(2, 4, 2)));
        assert!(t.delta(3, RelationId::new(4, 4, 1)).is_some());
    }
}
