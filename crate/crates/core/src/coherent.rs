//! The coherent configuration on subspaces of F_q^n: one fiber per dimension,
//! relations R_{abc} indexed by codimension class c = min(a,b) - dim(x n y).
//!
//! Relation sizes and intersection numbers come from the closed formulas in
//! [`crate::qcalc`]; nothing is enumerated unless the oracle check is asked for.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use rug::Integer;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::oracle::{self, AmbientSpace};
use crate::qcalc::{count_meeting, gauss_binomial, triple_count, QParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl RelationId {
    pub fn new(a: usize, b: usize, c: usize) -> RelationId {
        RelationId { a, b, c }
    }

    pub fn transpose(&self) -> RelationId {
        RelationId { a: self.b, b: self.a, c: self.c }
    }

    pub fn is_identity(&self) -> bool {
        self.a == self.b && self.c == 0
    }

    /// Subspace distance realised by pairs in this relation.
    pub fn distance(&self) -> usize {
        self.a.abs_diff(self.b) + 2 * self.c
    }
}

impl std::fmt::Display for RelationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "R({},{},{})", self.a, self.b, self.c)
    }
}

/// Largest codimension class between an a-space and a b-space in F_q^n.
pub fn max_class(n: usize, a: usize, b: usize) -> usize {
    a.min(b).min(n - a.max(b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    FormulaIdentities,
    Oracle,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }
}

/// Key into the intersection-number tensor: p^{k}_{i,j}.
pub type TripleKey = (RelationId, RelationId, RelationId);

#[derive(Clone, Debug)]
pub struct CoherentConfig {
    pub n: usize,
    pub q: QParams,
    pub fibers: Vec<usize>,
    pub fiber_sizes: BTreeMap<usize, Integer>,
    pub relations: Vec<RelationId>,
    pub m: HashMap<RelationId, Integer>,
    pub p: HashMap<TripleKey, Integer>,
}

pub fn build_config(n: usize, q: QParams, fibers: &[usize]) -> Result<CoherentConfig> {
    let mut fibers: Vec<usize> = fibers.to_vec();
    fibers.sort_unstable();
    fibers.dedup();
    if let Some(&bad) = fibers.iter().find(|&&f| f > n) {
        return Err(Error::Domain(format!("fiber {bad} outside 0..={n}")));
    }
    let ni = n as i64;
    let fiber_sizes: BTreeMap<usize, Integer> =
        fibers.iter().map(|&a| (a, gauss_binomial(ni, a as i64, q))).collect();
    let mut relations = Vec::new();
    let mut m = HashMap::new();
    for &a in &fibers {
        for &b in &fibers {
            for c in 0..=max_class(n, a, b) {
                let r = RelationId::new(a, b, c);
                let t = (a.min(b) - c) as i64;
                let size = Integer::from(&fiber_sizes[&a] * count_meeting(a as i64, t, b as i64, ni, q));
                relations.push(r);
                m.insert(r, size);
            }
        }
    }
    let p: HashMap<TripleKey, Integer> = relations
        .par_iter()
        .flat_map_iter(|&k| {
            let mut out = Vec::new();
            for &d in &fibers {
                for i in 0..=max_class(n, k.a, d) {
                    for j in 0..=max_class(n, d, k.b) {
                        let v = triple_count(k.a as i64, k.b as i64, k.c as i64, d as i64, ni, i as i64, j as i64, q);
                        if v != 0 {
                            out.push(((k, RelationId::new(k.a, d, i), RelationId::new(d, k.b, j)), v));
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(CoherentConfig { n, q, fibers, fiber_sizes, relations, m, p })
}

/// Configuration on all fibers 0..=n.
pub fn build_full(n: usize, q: QParams) -> Result<CoherentConfig> {
    build_config(n, q, &(0..=n).collect::<Vec<_>>())
}

impl CoherentConfig {
    pub fn has_fiber(&self, a: usize) -> bool {
        self.fiber_sizes.contains_key(&a)
    }

    pub fn fiber_size(&self, a: usize) -> &Integer {
        &self.fiber_sizes[&a]
    }

    pub fn max_class(&self, a: usize, b: usize) -> usize {
        max_class(self.n, a, b)
    }

    pub fn m(&self, r: RelationId) -> &Integer {
        &self.m[&r]
    }

    /// m_{abc} / |X_a|: how many b-spaces stand in relation c to a fixed a-space.
    pub fn valency(&self, r: RelationId) -> Integer {
        Integer::from(self.m(r) / self.fiber_size(r.a))
    }

    /// p^{k}_{i,j}, zero when absent.
    pub fn p(&self, k: RelationId, i: RelationId, j: RelationId) -> Integer {
        self.p.get(&(k, i, j)).cloned().unwrap_or_default()
    }

    pub fn relations_between(&self, a: usize, b: usize) -> impl Iterator<Item = RelationId> + '_ {
        (0..=self.max_class(a, b)).map(move |c| RelationId::new(a, b, c))
    }

    pub fn verify_axioms(&self, mode: VerifyMode) -> Result<AxiomReport> {
        let mut rep = self.formula_identities();
        if mode == VerifyMode::Oracle {
            self.oracle_checks(&mut rep)?;
        }
        Ok(rep)
    }

    fn formula_identities(&self) -> AxiomReport {
        let mut rep = AxiomReport::default();
        let n = self.n;
        for &a in &self.fibers {
            for &b in &self.fibers {
                let total: Integer = self.relations_between(a, b).map(|r| self.m(r).clone()).sum();
                let want = Integer::from(self.fiber_size(a) * self.fiber_size(b));
                rep.check(total == want, || format!("partition: sum_c m({a},{b},c) = {total}, expected {want}"));
                for r in self.relations_between(a, b) {
                    rep.check(self.m(r) == self.m(r.transpose()), || format!("transpose: m{r} != m{}", r.transpose()));
                    let o = RelationId::new(n - a, n - b, r.c);
                    if let Some(mo) = self.m.get(&o) {
                        rep.check(self.m(r) == mo, || format!("orthogonality: m{r} != m{o}"));
                    }
                }
            }
        }
        for &k in &self.relations {
            for &d in &self.fibers {
                for i in self.relations_between(k.a, d) {
                    let row: Integer = self.relations_between(d, k.b).map(|j| self.p(k, i, j)).sum();
                    let want = self.valency(i);
                    rep.check(row == want, || format!("row regularity at p^{k}_{{{i},*}}: {row} != {want}"));
                }
                for j in self.relations_between(d, k.b) {
                    let col: Integer = self.relations_between(k.a, d).map(|i| self.p(k, i, j)).sum();
                    let want = self.valency(j.transpose());
                    rep.check(col == want, || format!("column regularity at p^{k}_{{*,{j}}}: {col} != {want}"));
                }
            }
            let id = RelationId::new(k.a, k.a, 0);
            for r in self.relations_between(k.a, k.b) {
                let v = self.p(k, id, r);
                let want = if r == k { 1 } else { 0 };
                rep.check(v == want, || format!("identity: p^{k}_{{{id},{r}}} = {v}, expected {want}"));
            }
        }
        for (&(k, i, j), v) in &self.p {
            let t = self.p(k.transpose(), j.transpose(), i.transpose());
            rep.check(*v == t, || format!("transpose closure: p^{k}_{{{i},{j}}} = {v} but transposed entry is {t}"));
            let lhs = Integer::from(self.m(k) * v);
            let rhs = Integer::from(self.m(i) * self.p(i, k, j.transpose()));
            rep.check(lhs == rhs, || format!("triangle count: m{k} p^{k}_{{{i},{j}}} != m{i} p^{i}_{{{k},{}}}", j.transpose()));
            let flip = |r: RelationId| RelationId::new(n - r.a, n - r.b, r.c);
            if self.has_fiber(n - k.a) && self.has_fiber(n - k.b) && self.has_fiber(n - i.b) {
                let o = self.p(flip(k), flip(i), flip(j));
                rep.check(*v == o, || format!("orthogonality: p^{k}_{{{i},{j}}} = {v} but flipped entry is {o}"));
            }
        }
        rep
    }

    fn oracle_checks(&self, rep: &mut AxiomReport) -> Result<()> {
        let q = u8::try_from(self.q.q).map_err(|_| Error::Domain("oracle needs a small prime q".into()))?;
        let space = AmbientSpace::new(self.n, q)?;
        let mut by_dim = BTreeMap::new();
        for &a in &self.fibers {
            by_dim.insert(a, oracle::enumerate_subspaces(space, a)?);
        }
        for &k in &self.relations {
            let t = k.a.min(k.b) - k.c;
            let xs = &by_dim[&k.a];
            let ys = &by_dim[&k.b];
            let mut pair_count = 0u64;
            let mut bases = Vec::new();
            for (ix, x) in xs.iter().enumerate() {
                for (iy, y) in ys.iter().enumerate() {
                    if oracle::dim_intersection(x, y)? == t {
                        pair_count += 1;
                        if bases.len() < 3 || (ix + iy) % 97 == 0 && bases.len() < 6 {
                            bases.push((x, y));
                        }
                    }
                }
            }
            rep.check(*self.m(k) == pair_count, || format!("oracle m{k}: formula {} vs enumeration {pair_count}", self.m(k)));
            for (x, y) in bases {
                let mut counts: HashMap<(RelationId, RelationId), u64> = HashMap::new();
                for &d in &self.fibers {
                    for z in &by_dim[&d] {
                        let i = k.a.min(d) - oracle::dim_intersection(x, z)?;
                        let j = d.min(k.b) - oracle::dim_intersection(z, y)?;
                        *counts.entry((RelationId::new(k.a, d, i), RelationId::new(d, k.b, j))).or_default() += 1;
                    }
                }
                for &d in &self.fibers {
                    for i in self.relations_between(k.a, d) {
                        for j in self.relations_between(d, k.b) {
                            let seen = counts.get(&(i, j)).copied().unwrap_or(0);
                            let v = self.p(k, i, j);
                            rep.check(v == seen, || format!("oracle p^{k}_{{{i},{j}}}: formula {v} vs enumeration {seen}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// JSON document: fibers, relation sizes and the nonzero intersection numbers.
    pub fn to_json(&self) -> serde_json::Value {
        let rel = |r: &RelationId| json!([r.a, r.b, r.c]);
        let mut p: Vec<_> = self.p.iter().collect();
        p.sort_by(|x, y| x.0.cmp(y.0));
        json!({
            "n": self.n,
            "q": self.q.q,
            "fibers": self.fibers,
            "fiber_sizes": self.fiber_sizes.iter().map(|(a, s)| json!({"fiber": a, "size": s.to_string()})).collect::<Vec<_>>(),
            "relations": self.relations.iter().map(|r| json!({"relation": rel(r), "m": self.m(*r).to_string()})).collect::<Vec<_>>(),
            "p": p.iter().map(|((k, i, j), v)| json!({"k": rel(k), "i": rel(i), "j": rel(j), "value": v.to_string()})).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q2() -> QParams {
        QParams::new(2).unwrap()
    }

    #[test]
    fn proper_fibers_of_seven() {
        let cfg = build_config(7, q2(), &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(cfg.fibers.len(), 6);
        assert_eq!(cfg.valency(RelationId::new(1, 6, 1)), 64);
        assert_eq!(cfg.valency(RelationId::new(1, 2, 1)), 2604);
    }

    #[test]
    fn single_fiber_scheme() {
        let cfg = build_config(5, q2(), &[2]).unwrap();
        assert_eq!(*cfg.m(RelationId::new(2, 2, 0)), *cfg.fiber_size(2));
        assert_eq!(cfg.valency(RelationId::new(2, 2, 0)), 1);
        assert!(cfg.verify_axioms(VerifyMode::FormulaIdentities).unwrap().passed());
    }

    #[test]
    fn oracle_agrees_small() {
        let cfg = build_full(2, q2()).unwrap();
        let rep = cfg.verify_axioms(VerifyMode::Oracle).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn corrupted_entry_is_named() {
        let mut cfg = build_full(3, q2()).unwrap();
        let key = (RelationId::new(1, 1, 1), RelationId::new(1, 1, 1), RelationId::new(1, 1, 1));
        *cfg.p.get_mut(&key).unwrap() += 1;
        let rep = cfg.verify_axioms(VerifyMode::FormulaIdentities).unwrap();
        assert!(!rep.passed());
        assert!(rep.failures.iter().any(|f| f.contains("R(1,1,1)")));
    }
}
