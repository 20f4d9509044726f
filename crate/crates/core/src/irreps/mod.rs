//! Irreducible blocks Δ_s of the subspace configuration.
//!
//! Normalisation: for fibers i, j in the support of s there are matrices
//! 𝓔^s_{ij} with 𝓔^s_{ij} 𝓔^s_{jk} = 𝓔^s_{ik}, (𝓔^s_{ij})^T = 𝓔^s_{ji} and
//! 𝓔^s_{ii} the primitive idempotent of the Grassmann scheme on fiber i.
//! Then A_{ijk} = Σ_s Δ_s(A_{ijk}) 𝓔^s_{ij} and, dually,
//! 𝓔^s_{ij} = Σ_k f_s Δ_s(A_{ijk}) / m_{ijk} · A_{ijk}.
//! With this choice Δ_0(A_{ijk}) = m_{ijk} / sqrt(|X_i| |X_j|).
//!
//! Signs: on the lowest support fiber l of s, 𝓔^s_{lj} is oriented so that
//! Δ_s(A_{lj0}) > 0; every other pair is then forced by 𝓔_{il} 𝓔_{lj} = 𝓔_{ij}.

pub mod table1;

use std::collections::HashMap;

use rug::Integer;
use serde_json::json;

use crate::coherent::{CoherentConfig, RelationId};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, sym_eigen, Mat};
use crate::qcalc::gauss_binomial;
use crate::real::Real;

/// Spectral data of the association scheme on one fiber.
#[derive(Clone, Debug)]
pub struct FiberEigensystem {
    pub fiber: usize,
    /// p_matrix[s][k]: eigenvalue of A_{aak} on eigenspace s.
    pub p_matrix: Vec<Vec<Real>>,
    pub multiplicities: Vec<Integer>,
    /// idempotent[s][k]: coefficient of A_{aak} in the primitive idempotent E_s.
    pub idempotent: Vec<Vec<Real>>,
}

#[derive(Clone, Debug)]
pub struct IrrepTable {
    pub n: usize,
    pub q: u32,
    pub precision: u32,
    pub s_count: usize,
    /// Fibers of the configuration on which Δ_s lives, ascending.
    pub support: Vec<Vec<usize>>,
    pub delta: HashMap<(usize, RelationId), Real>,
    pub f: Vec<Integer>,
}

/// Multiplicity [n, s] - [n, s-1] of the s-th eigenspace.
pub fn multiplicity(n: usize, s: usize, q: crate::qcalc::QParams) -> Integer {
    gauss_binomial(n as i64, s as i64, q) - gauss_binomial(n as i64, s as i64 - 1, q)
}

fn cluster_tol(prec: u32, scale: &Real) -> Real {
    Real::pow2(-(prec as i32) / 2, prec) * (scale.clone() + Real::one(prec))
}

pub fn fiber_eigensystem(cfg: &CoherentConfig, a: usize, prec: u32) -> Result<FiberEigensystem> {
    if !cfg.has_fiber(a) {
        return Err(Error::Domain(format!("fiber {a} is not part of the configuration")));
    }
    let dmax = cfg.max_class(a, a);
    let size = Real::from_integer(cfg.fiber_size(a), prec);
    let val: Vec<Real> = (0..=dmax).map(|k| Real::from_integer(&cfg.valency(RelationId::new(a, a, k)), prec)).collect();
    if dmax == 0 {
        let one = Real::one(prec);
        return Ok(FiberEigensystem {
            fiber: a,
            p_matrix: vec![vec![one.clone()]],
            multiplicities: vec![Integer::from(1)],
            idempotent: vec![vec![one / &size]],
        });
    }
    let r1 = RelationId::new(a, a, 1);
    let lt = Mat::from_fn(dmax + 1, dmax + 1, |k, j| {
        let p = cfg.p(RelationId::new(a, a, k), r1, RelationId::new(a, a, j));
        if p == 0 {
            Real::zero(prec)
        } else {
            Real::from_integer(&p, prec) * (&val[k] / &val[j]).sqrt()
        }
    });
    let (evals, evecs) = sym_eigen(&lt);
    let tol = cluster_tol(prec, &val[1]);
    for w in evals.windows(2) {
        if &w[1] - &w[0] <= tol {
            return Err(Error::Numerical(format!("fiber {a}: eigenvalues {} and {} cannot be separated", w[0], w[1])));
        }
    }
    let mut p_matrix = vec![Vec::new(); dmax + 1];
    let mut found = vec![false; dmax + 1];
    for col in 0..=dmax {
        let u = evecs.column(col);
        if u[0].is_zero() {
            return Err(Error::Numerical(format!("fiber {a}: eigenvector with vanishing identity component")));
        }
        let row: Vec<Real> = (0..=dmax).map(|k| &u[k] * &val[k].sqrt() / &u[0]).collect();
        let mut norm = Real::zero(prec);
        for k in 0..=dmax {
            norm += row[k].square() / &val[k];
        }
        let mu = &size / &norm;
        let s = (0..=dmax)
            .find(|&s| {
                let want = Real::from_integer(&multiplicity(cfg.n, s, cfg.q), prec);
                (&mu - &want).abs() <= cluster_tol(prec, &want)
            })
            .ok_or_else(|| Error::Structural(format!("fiber {a}: eigenspace multiplicity {mu} matches no Grassmann label")))?;
        if found[s] {
            return Err(Error::Structural(format!("fiber {a}: label {s} assigned twice")));
        }
        found[s] = true;
        p_matrix[s] = row;
    }
    for s in 1..=dmax {
        if p_matrix[s][1] >= p_matrix[s - 1][1] {
            return Err(Error::Structural(format!("fiber {a}: eigenvalues not descending in s")));
        }
    }
    let multiplicities: Vec<Integer> = (0..=dmax).map(|s| multiplicity(cfg.n, s, cfg.q)).collect();
    let idempotent = (0..=dmax)
        .map(|s| {
            let fs = Real::from_integer(&multiplicities[s], prec);
            (0..=dmax).map(|k| &fs * &p_matrix[s][k] / (&size * &val[k])).collect()
        })
        .collect();
    Ok(FiberEigensystem { fiber: a, p_matrix, multiplicities, idempotent })
}

/// Δ_s(A_{ijk}) up to a common sign, for i != j both in the support of s.
fn cross_entries(cfg: &CoherentConfig, eig: &FiberEigensystem, s: usize, i: usize, j: usize, prec: u32) -> Result<Vec<Real>> {
    let cmax = cfg.max_class(i, j);
    let lmax = cfg.max_class(i, i);
    let c = Mat::from_fn(cmax + 1, cmax + 1, |k, m| {
        let rm = RelationId::new(i, j, m);
        let mut acc = Real::zero(prec);
        for l in 0..=lmax {
            let ril = RelationId::new(i, i, l);
            let p = cfg.p(rm, ril, RelationId::new(i, j, k));
            if p != 0 {
                acc += &eig.p_matrix[s][l] / Real::from_integer(cfg.m(ril), prec) * Real::from_integer(&p, prec);
            }
        }
        acc * Real::from_integer(cfg.m(rm), prec)
    });
    let pivot = (0..=cmax)
        .max_by(|&x, &y| c.get(x, x).partial_cmp(c.get(y, y)).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let scale = c.max_abs();
    if !c.get(pivot, pivot).is_positive() || c.get(pivot, pivot) <= &cluster_tol(prec, &scale) {
        return Err(Error::Structural(format!("irreducible {s}: no connecting entry between fibers {i} and {j}")));
    }
    let root = c.get(pivot, pivot).sqrt();
    let d: Vec<Real> = (0..=cmax).map(|k| c.get(k, pivot) / &root).collect();
    for k in 0..=cmax {
        for m in 0..=cmax {
            let r = (c.get(k, m) - &d[k] * &d[m]).abs();
            if r > cluster_tol(prec, &scale) {
                return Err(Error::Structural(format!(
                    "irreducible {s}: fibers {i},{j} cross matrix is not rank one (residual {r})"
                )));
            }
        }
    }
    Ok(d)
}

fn sign_of_first_nonzero(v: &[Real], tol: &Real) -> i32 {
    v.iter().find(|x| &x.abs() > tol).map_or(0, |x| x.signum_i32())
}

pub fn compute_irreps(cfg: &CoherentConfig, precision: u32) -> Result<IrrepTable> {
    match compute_at(cfg, precision) {
        Err(Error::Numerical(_)) => compute_at(cfg, precision * 2),
        other => other,
    }
}

fn compute_at(cfg: &CoherentConfig, prec: u32) -> Result<IrrepTable> {
    let n = cfg.n;
    let mut eig = HashMap::new();
    for &a in &cfg.fibers {
        eig.insert(a, fiber_eigensystem(cfg, a, prec)?);
    }
    let s_count = cfg.fibers.iter().map(|&a| a.min(n - a)).max().map_or(0, |m| m + 1);
    let mut support = Vec::with_capacity(s_count);
    let mut delta = HashMap::new();
    let mut f = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let sup: Vec<usize> = cfg.fibers.iter().copied().filter(|&a| s <= a && a <= n - s).collect();
        f.push(multiplicity(n, s, cfg.q));
        for &a in &sup {
            for k in 0..=cfg.max_class(a, a) {
                delta.insert((s, RelationId::new(a, a, k)), eig[&a].p_matrix[s][k].clone());
            }
        }
        let Some(&low) = sup.first() else {
            support.push(sup);
            continue;
        };
        let mut raw: HashMap<(usize, usize), Vec<Real>> = HashMap::new();
        for (x, &i) in sup.iter().enumerate() {
            for &j in &sup[x + 1..] {
                raw.insert((i, j), cross_entries(cfg, &eig[&i], s, i, j, prec)?);
            }
        }
        let tiny = Real::pow2(-(prec as i32) / 2, prec);
        // orient pairs through the lowest fiber
        for &j in &sup[1..] {
            let v = raw.get_mut(&(low, j)).expect("pair computed");
            if sign_of_first_nonzero(v, &tiny) < 0 {
                for x in v.iter_mut() {
                    *x = -x.clone();
                }
            }
        }
        for (x, &i) in sup.iter().enumerate().skip(1) {
            for &j in &sup[x + 1..] {
                let mut acc = Real::zero(prec);
                let ri = RelationId::new(i, low, 0);
                let rj = RelationId::new(low, j, 0);
                for r in 0..=cfg.max_class(i, j) {
                    let p = cfg.p(RelationId::new(i, j, r), ri, rj);
                    if p != 0 {
                        acc += Real::from_integer(&p, prec) * &raw[&(i, j)][r];
                    }
                }
                let target = raw[&(low, i)][0].signum_i32() * raw[&(low, j)][0].signum_i32();
                if acc.is_zero() {
                    return Err(Error::Structural(format!("irreducible {s}: cannot orient fibers {i},{j}")));
                }
                if acc.signum_i32() != target {
                    let v = raw.get_mut(&(i, j)).expect("pair computed");
                    for x in v.iter_mut() {
                        *x = -x.clone();
                    }
                }
            }
        }
        for ((i, j), v) in raw {
            for (k, x) in v.into_iter().enumerate() {
                delta.insert((s, RelationId::new(j, i, k)), x.clone());
                delta.insert((s, RelationId::new(i, j, k)), x);
            }
        }
        support.push(sup);
    }
    Ok(IrrepTable { n, q: cfg.q.q, precision: prec, s_count, support, delta, f })
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub checks: usize,
    pub max_residual: Real,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, residual: Real, tol: &Real, what: impl FnOnce() -> String) {
        self.checks += 1;
        if &residual > tol {
            self.failures.push(format!("{} (residual {:.6})", what(), residual));
        }
        if residual > self.max_residual {
            self.max_residual = residual;
        }
    }
}

impl IrrepTable {
    /// (Δ_s(A_r))_{ab}, zero outside the support.
    pub fn get(&self, s: usize, r: RelationId) -> Real {
        self.delta.get(&(s, r)).cloned().unwrap_or_else(|| Real::zero(self.precision))
    }

    pub fn in_support(&self, s: usize, a: usize) -> bool {
        self.support.get(s).is_some_and(|v| v.contains(&a))
    }

    /// Coefficient of A_r in 𝓔^s_{ab}.
    fn e_coeff(&self, cfg: &CoherentConfig, s: usize, r: RelationId) -> Real {
        let fs = Real::from_integer(&self.f[s], self.precision);
        fs * self.get(s, r) / Real::from_integer(cfg.m(r), self.precision)
    }

    pub fn verify_identities(&self, cfg: &CoherentConfig, tol: &Real) -> IdentityReport {
        let prec = self.precision;
        let mut rep = IdentityReport { checks: 0, max_residual: Real::zero(prec), failures: Vec::new() };
        let one = Real::one(prec);
        let rel = |a, b| (0..=cfg.max_class(a, b)).map(move |c| RelationId::new(a, b, c));
        // identity entries and adjoint symmetry
        for s in 0..self.s_count {
            for &a in &self.support[s] {
                rep.record((self.get(s, RelationId::new(a, a, 0)) - &one).abs(), tol, || {
                    format!("Δ_{s}(A_({a},{a},0)) != 1")
                });
                for &b in &self.support[s] {
                    for r in rel(a, b) {
                        rep.record((self.get(s, r) - self.get(s, r.transpose())).abs(), tol, || {
                            format!("adjoint symmetry Δ_{s}{r}")
                        });
                    }
                }
            }
        }
        // 𝓔^s_{ij} 𝓔^t_{jl} = δ_st 𝓔^s_{il}
        for s in 0..self.s_count {
            for t in 0..self.s_count {
                for &i in &self.support[s] {
                    for &j in self.support[s].iter().filter(|j| self.in_support(t, **j)) {
                        for &l in &self.support[t] {
                            let target: Vec<Real> = rel(i, l)
                                .map(|r| if s == t { self.e_coeff(cfg, s, r) } else { Real::zero(prec) })
                                .collect();
                            let mut got = vec![Real::zero(prec); target.len()];
                            let mut mass = vec![Real::zero(prec); target.len()];
                            for k in rel(i, j) {
                                let ek = self.e_coeff(cfg, s, k);
                                for k2 in rel(j, l) {
                                    let ek2 = self.e_coeff(cfg, t, k2);
                                    let w = &ek * &ek2;
                                    for (idx, r) in rel(i, l).enumerate() {
                                        let p = cfg.p(r, k, k2);
                                        if p != 0 {
                                            let term = &w * Real::from_integer(&p, prec);
                                            mass[idx] += term.abs();
                                            got[idx] += term;
                                        }
                                    }
                                }
                            }
                            let mut res = Real::zero(prec);
                            for ((g, w), m) in got.iter().zip(&target).zip(&mass) {
                                let denom = m + &w.abs();
                                if denom.is_positive() {
                                    res = res.max((g - w).abs() / denom);
                                }
                            }
                            rep.record(res, tol, || format!("𝓔^{s}_({i},{j}) 𝓔^{t}_({j},{l}) product"));
                        }
                    }
                }
            }
        }
        // inversion pair
        for &i in &cfg.fibers {
            for &j in &cfg.fibers {
                let ss: Vec<usize> = (0..self.s_count).filter(|&s| self.in_support(s, i) && self.in_support(s, j)).collect();
                for &s in &ss {
                    for &t in &ss {
                        let ft = Real::from_integer(&self.f[t], prec);
                        let mut acc = Real::zero(prec);
                        for r in rel(i, j) {
                            acc += self.get(s, r) * self.get(t, r) * &ft / Real::from_integer(cfg.m(r), prec);
                        }
                        let want = if s == t { one.clone() } else { Real::zero(prec) };
                        rep.record((acc - want).abs(), tol, || format!("row orthogonality s={s} t={t} fibers ({i},{j})"));
                    }
                }
                for k in rel(i, j) {
                    for l in rel(i, j) {
                        let mut acc = Real::zero(prec);
                        for &s in &ss {
                            acc += Real::from_integer(&self.f[s], prec) * self.get(s, k) * self.get(s, l);
                        }
                        let mk = Real::from_integer(cfg.m(k), prec);
                        let want = if k == l { mk.clone() } else { Real::zero(prec) };
                        rep.record((acc - want).abs() / mk, tol, || format!("column orthogonality {k} {l}"));
                    }
                }
            }
        }
        // algebra dimension and the trivial code
        let blocks: usize = self.support.iter().map(|v| v.len() * v.len()).sum();
        rep.checks += 1;
        if blocks != cfg.relations.len() {
            rep.failures.push(format!("dimension count {blocks} != {} relations", cfg.relations.len()));
        }
        for s in 0..self.s_count {
            let sup = &self.support[s];
            if sup.is_empty() {
                continue;
            }
            let m = Mat::from_fn(sup.len(), sup.len(), |x, y| {
                let mut acc = Real::zero(prec);
                for r in rel(sup[x], sup[y]) {
                    acc += self.get(s, r);
                }
                acc
            });
            let scale = m.max_abs() + Real::one(prec);
            let lam = min_eigenvalue(&m) / scale;
            rep.record(if lam.is_negative() { lam.abs() } else { Real::zero(prec) }, tol, || {
                format!("Δ_{s}(J) not positive semidefinite")
            });
        }
        rep
    }

    pub fn to_json(&self) -> serde_json::Value {
        let digits = (self.precision as f64 * std::f64::consts::LOG10_2) as usize;
        let mut keys: Vec<_> = self.delta.keys().copied().collect();
        keys.sort();
        json!({
            "q": self.q,
            "n": self.n,
            "precision_bits": self.precision,
            "f": self.f.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "support": self.support,
            "entries": keys.iter().map(|&(s, r)| json!({
                "s": s,
                "relation": [r.a, r.b, r.c],
                "value": self.delta[&(s, r)].to_decimal(digits),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Table1Report {
    pub cells: usize,
    pub max_residual: Real,
    pub failures: Vec<String>,
}

impl Table1Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compare a computed table for n = 7 on fibers 1..=6 against the printed
/// closed forms, cell by cell.
pub fn compare_table1(tab: &IrrepTable, cfg: &CoherentConfig, tol: &Real) -> Result<Table1Report> {
    if cfg.n != 7 || cfg.fibers != vec![1, 2, 3, 4, 5, 6] {
        return Err(Error::Domain("closed-form comparison needs n = 7 on fibers 1..=6".into()));
    }
    let prec = tab.precision;
    let t1 = table1::Table1::new(cfg.q.q, prec + 64);
    let mut rep = Table1Report { cells: 0, max_residual: Real::zero(prec), failures: Vec::new() };
    for (s, f) in t1.f.iter().enumerate() {
        rep.cells += 1;
        if tab.f.get(s) != Some(f) {
            rep.failures.push(format!("f_{s}: printed {f}, computed {:?}", tab.f.get(s)));
        }
    }
    for &r in &cfg.relations {
        rep.cells += 1;
        let printed = t1.valency(r).ok_or_else(|| Error::Structural(format!("no printed row for {r}")))?;
        if printed != cfg.valency(r) {
            rep.failures.push(format!("m{r}/|X_a|: printed {printed}, computed {}", cfg.valency(r)));
        }
        for s in 0..4 {
            rep.cells += 1;
            match (t1.delta(s, r), tab.delta.get(&(s, r))) {
                (None, None) => {}
                (Some(p), Some(v)) => {
                    let pm = Real::from_float(p.midpoint()).with_prec(prec);
                    let res = (v - &pm).abs() / (pm.abs() + Real::one(prec));
                    if &res > tol {
                        rep.failures.push(format!("Δ_{s}{r}: printed {pm:.25}, computed {v:.25}"));
                    }
                    rep.max_residual = rep.max_residual.clone().max(res);
                }
                (p, v) => rep.failures.push(format!(
                    "Δ_{s}{r}: printed cell {}, computed cell {}",
                    if p.is_some() { "filled" } else { "empty" },
                    if v.is_some() { "filled" } else { "empty" }
                )),
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::build_config;
    use crate::qcalc::QParams;

    #[test]
    fn fiber_one_eigenvalues() {
        let cfg = build_config(7, QParams::new(2).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
        let e = fiber_eigensystem(&cfg, 1, 256).unwrap();
        assert!((e.p_matrix[0][1].to_f64() - 126.0).abs() < 1e-20);
        assert!((e.p_matrix[1][1].to_f64() + 1.0).abs() < 1e-20);
        let e3 = fiber_eigensystem(&cfg, 3, 256).unwrap();
        let mult: Vec<u64> = e3.multiplicities.iter().map(|m| m.to_u64().unwrap()).collect();
        assert_eq!(mult, vec![1, 126, 2540, 9144]);
    }

    #[test]
    fn printed_entries_at_q2() {
        let cfg = build_config(7, QParams::new(2).unwrap(), &[1, 2, 3, 4, 5, 6]).unwrap();
        let tab = compute_irreps(&cfg, 256).unwrap();
        let d = tab.get(1, RelationId::new(1, 6, 1)).to_f64();
        assert!((d + 32f64.sqrt()).abs() < 1e-12, "{d}");
        let d = tab.get(3, RelationId::new(3, 4, 3)).to_f64();
        assert!((d + 8.0 * 8f64.sqrt()).abs() < 1e-12, "{d}");
    }
}
