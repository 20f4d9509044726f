//! Brute-force subspace enumeration over small prime fields.
//!
//! This is the independent ground truth for the counting formulas in
//! [`crate::qcalc`]. Subspaces are stored by their reduced row-echelon basis,
//! which is canonical, and, when q^n <= 128, additionally by the bitset of
//! their member vectors so intersections reduce to a popcount.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::qcalc::{gauss_binomial, QParams};

pub const DEFAULT_ENUMERATION_CAP: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmbientSpace {
    pub n: usize,
    pub q: u8,
    pub cap: u64,
}

impl AmbientSpace {
    pub fn new(n: usize, q: u8) -> Result<AmbientSpace> {
        if !matches!(q, 2 | 3 | 5) {
            return Err(Error::Domain(format!("oracle supports q in {{2,3,5}}, got {q}")));
        }
        if n > 7 {
            return Err(Error::Domain(format!("oracle ambient dimension capped at 7, got {n}")));
        }
        Ok(AmbientSpace { n, q, cap: DEFAULT_ENUMERATION_CAP })
    }

    pub fn with_cap(mut self, cap: u64) -> AmbientSpace {
        self.cap = cap;
        self
    }

    fn qparams(&self) -> QParams {
        QParams { q: self.q as u32, prime_power_checked: true }
    }

    fn uses_bitsets(&self) -> bool {
        (self.q as u64).pow(self.n as u32) <= 128
    }

    /// Index of a vector in [0, q^n).
    fn vector_index(&self, v: &[u8]) -> usize {
        v.iter().rev().fold(0usize, |acc, &x| acc * self.q as usize + x as usize)
    }
}

#[derive(Clone, Debug)]
pub struct SubspaceRep {
    pub space: AmbientSpace,
    pub basis: Vec<Vec<u8>>,
    members: Option<u128>,
}

impl PartialEq for SubspaceRep {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.basis == other.basis
    }
}

impl Eq for SubspaceRep {}

impl Hash for SubspaceRep {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.space.n.hash(state);
        self.space.q.hash(state);
        self.basis.hash(state);
    }
}

fn inv_mod(a: u8, q: u8) -> u8 {
    (1..q).find(|&x| (x as u16 * a as u16) % q as u16 == 1).expect("nonzero element of a prime field")
}

/// Reduced row-echelon form over F_q with zero rows dropped.
pub fn rref(mut rows: Vec<Vec<u8>>, q: u8) -> Vec<Vec<u8>> {
    let n = rows.first().map_or(0, |r| r.len());
    let qq = q as u16;
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, p);
        let inv = inv_mod(rows[rank][col], q) as u16;
        for x in rows[rank].iter_mut() {
            *x = ((*x as u16 * inv) % qq) as u8;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let f = rows[r][col] as u16;
                for c in 0..n {
                    let sub = (f * rows[rank][c] as u16) % qq;
                    rows[r][c] = ((rows[r][c] as u16 + qq - sub) % qq) as u8;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    rows
}

impl SubspaceRep {
    /// Span of the given vectors.
    pub fn from_vectors(space: AmbientSpace, vectors: Vec<Vec<u8>>) -> Result<SubspaceRep> {
        if vectors.iter().any(|v| v.len() != space.n || v.iter().any(|&x| x >= space.q)) {
            return Err(Error::Domain("vector does not live in the ambient space".into()));
        }
        Ok(SubspaceRep::from_rref(space, rref(vectors, space.q)))
    }

    fn from_rref(space: AmbientSpace, basis: Vec<Vec<u8>>) -> SubspaceRep {
        let mut s = SubspaceRep { space, basis, members: None };
        if space.uses_bitsets() {
            s.members = Some(s.member_bits());
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn members(&self) -> Option<u128> {
        self.members
    }

    fn member_bits(&self) -> u128 {
        let q = self.space.q as usize;
        let k = self.dim();
        let mut bits = 0u128;
        let mut coeffs = vec![0usize; k];
        let total = q.pow(k as u32);
        let mut v = vec![0u8; self.space.n];
        for _ in 0..total {
            for x in v.iter_mut() {
                *x = 0;
            }
            for (c, row) in coeffs.iter().zip(&self.basis) {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = ((*x as usize + c * r as usize) % q) as u8;
                }
            }
            bits |= 1u128 << self.space.vector_index(&v);
            for c in coeffs.iter_mut() {
                *c += 1;
                if *c < q {
                    break;
                }
                *c = 0;
            }
        }
        bits
    }

    /// Re-run the canonicalisation; equal to `self` for every valid value.
    pub fn canonicalize(&self) -> SubspaceRep {
        SubspaceRep::from_rref(self.space, rref(self.basis.clone(), self.space.q))
    }

    pub fn sum(&self, other: &SubspaceRep) -> Result<SubspaceRep> {
        check_same(self, other)?;
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Ok(SubspaceRep::from_rref(self.space, rref(rows, self.space.q)))
    }

    /// Orthogonal complement under the standard bilinear form.
    pub fn orthogonal_complement(&self) -> SubspaceRep {
        let n = self.space.n;
        let q = self.space.q;
        let pivots: Vec<usize> =
            self.basis.iter().map(|r| r.iter().position(|&x| x != 0).expect("rref rows are nonzero")).collect();
        let mut out = Vec::new();
        for free in (0..n).filter(|c| !pivots.contains(c)) {
            let mut v = vec![0u8; n];
            v[free] = 1;
            for (row, &p) in self.basis.iter().zip(&pivots) {
                v[p] = (q - row[free] % q) % q;
            }
            out.push(v);
        }
        SubspaceRep::from_rref(self.space, rref(out, q))
    }
}

fn check_same(u: &SubspaceRep, w: &SubspaceRep) -> Result<()> {
    if u.space.n != w.space.n || u.space.q != w.space.q {
        return Err(Error::Domain(format!(
            "subspaces live in different ambient spaces (n={}, q={} vs n={}, q={})",
            u.space.n, u.space.q, w.space.n, w.space.q
        )));
    }
    Ok(())
}

/// dim(U n W).
pub fn dim_intersection(u: &SubspaceRep, w: &SubspaceRep) -> Result<usize> {
    check_same(u, w)?;
    if let (Some(a), Some(b)) = (u.members, w.members) {
        let common = (a & b).count_ones() as u64;
        return Ok(log_q(common, u.space.q as u64));
    }
    let span = u.sum(w)?;
    Ok(u.dim() + w.dim() - span.dim())
}

fn log_q(mut v: u64, q: u64) -> usize {
    let mut e = 0;
    while v > 1 {
        v /= q;
        e += 1;
    }
    e
}

/// Subspace distance dim U + dim W - 2 dim(U n W).
pub fn subspace_distance(u: &SubspaceRep, w: &SubspaceRep) -> Result<usize> {
    Ok(u.dim() + w.dim() - 2 * dim_intersection(u, w)?)
}

/// All k-subspaces of the ambient space in canonical form.
pub fn enumerate_subspaces(space: AmbientSpace, k: usize) -> Result<Vec<SubspaceRep>> {
    if k > space.n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {}", space.n)));
    }
    let expected = gauss_binomial(space.n as i64, k as i64, space.qparams());
    if expected > space.cap {
        return Err(Error::Resource(format!(
            "{expected} subspaces of dimension {k} in F_{}^{} exceed the cap {}",
            space.q, space.n, space.cap
        )));
    }
    let mut out = Vec::new();
    let n = space.n;
    let q = space.q;
    for pivots in combinations(n, k) {
        // free slots: (row, col) with col > pivot[row] and col not a pivot
        let free: Vec<(usize, usize)> = (0..k)
            .flat_map(|r| ((pivots[r] + 1)..n).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
            .collect();
        let mut vals = vec![0u8; free.len()];
        loop {
            let mut basis = vec![vec![0u8; n]; k];
            for (r, &p) in pivots.iter().enumerate() {
                basis[r][p] = 1;
            }
            for (&(r, c), &v) in free.iter().zip(&vals) {
                basis[r][c] = v;
            }
            out.push(SubspaceRep::from_rref(space, basis));
            let mut idx = 0;
            while idx < vals.len() {
                vals[idx] += 1;
                if vals[idx] < q {
                    break;
                }
                vals[idx] = 0;
                idx += 1;
            }
            if idx == vals.len() {
                break;
            }
        }
    }
    Ok(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Number of d-subspaces D with dim(D n A) = min(a,d) - i and
/// dim(D n B) = min(b,d) - j, found by scanning every d-subspace.
pub fn oracle_triple_count(a: &SubspaceRep, b: &SubspaceRep, d: usize, i: usize, j: usize) -> Result<u64> {
    check_same(a, b)?;
    let da = a.dim().min(d);
    let db = b.dim().min(d);
    if i > da || j > db {
        return Ok(0);
    }
    let mut count = 0;
    for dsp in enumerate_subspaces(a.space, d)? {
        if dim_intersection(&dsp, a)? == da - i && dim_intersection(&dsp, b)? == db - j {
            count += 1;
        }
    }
    Ok(count)
}

/// A pair (A, B) with dim A = a, dim B = b and dim(A n B) = t, built from
/// standard basis vectors.
pub fn standard_pair(space: AmbientSpace, a: usize, b: usize, t: usize) -> Result<(SubspaceRep, SubspaceRep)> {
    if t > a.min(b) || a + b - t > space.n {
        return Err(Error::Domain(format!("no pair with dims {a}, {b} meeting in {t} inside n = {}", space.n)));
    }
    let e = |i: usize| {
        let mut v = vec![0u8; space.n];
        v[i] = 1;
        v
    };
    let av: Vec<_> = (0..a).map(e).collect();
    let bv: Vec<_> = (0..t).chain(a..(a + b - t)).map(e).collect();
    Ok((SubspaceRep::from_vectors(space, av)?, SubspaceRep::from_vectors(space, bv)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_sizes() {
        let s = AmbientSpace::new(2, 2).unwrap();
        assert_eq!(enumerate_subspaces(s, 1).unwrap().len(), 3);
        assert_eq!(enumerate_subspaces(s, 0).unwrap().len(), 1);
        let s7 = AmbientSpace::new(7, 2).unwrap();
        assert_eq!(enumerate_subspaces(s7, 3).unwrap().len(), 11811);
        let s3 = AmbientSpace::new(4, 3).unwrap();
        assert_eq!(enumerate_subspaces(s3, 2).unwrap().len(), 130);
    }

    #[test]
    fn cap_is_enforced() {
        let s = AmbientSpace::new(7, 2).unwrap().with_cap(1000);
        assert!(matches!(enumerate_subspaces(s, 3), Err(Error::Resource(_))));
    }

    #[test]
    fn intersections() {
        let s = AmbientSpace::new(7, 2).unwrap();
        let (a, b) = standard_pair(s, 3, 3, 2).unwrap();
        assert_eq!(dim_intersection(&a, &b).unwrap(), 2);
        assert_eq!(dim_intersection(&a, &a).unwrap(), 3);
        let (p, r) = standard_pair(AmbientSpace::new(2, 2).unwrap(), 1, 1, 0).unwrap();
        assert_eq!(dim_intersection(&p, &r).unwrap(), 0);
        let other = standard_pair(AmbientSpace::new(3, 2).unwrap(), 1, 1, 0).unwrap().0;
        assert!(dim_intersection(&p, &other).is_err());
    }

    #[test]
    fn bitset_and_rank_paths_agree() {
        let s = AmbientSpace::new(3, 5).unwrap();
        let planes = enumerate_subspaces(s, 2).unwrap();
        for x in planes.iter().take(10) {
            for y in planes.iter().skip(20).take(10) {
                let span = x.sum(y).unwrap();
                assert_eq!(dim_intersection(x, y).unwrap(), 4 - span.dim());
            }
        }
    }

    #[test]
    fn small_triple_counts() {
        let s = AmbientSpace::new(2, 2).unwrap();
        let (a, b) = standard_pair(s, 1, 1, 0).unwrap();
        assert_eq!(oracle_triple_count(&a, &b, 1, 1, 1).unwrap(), 1);
        assert_eq!(oracle_triple_count(&a, &a, 1, 0, 0).unwrap(), 1);
    }
}
