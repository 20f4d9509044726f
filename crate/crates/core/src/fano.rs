//! Planes of F_2^7 seen from a fixed plane π: the coherent configuration of
//! pair types, its intersection numbers counted by brute force, a numerical
//! block diagonalization of the relation algebra, and SDP brackets on pair
//! counts of a putative binary q-Fano plane (a (7, 381, 4; 3)_2 code)
//! containing π.
//!
//! Two planes x, y are in relation (a,b;α,β,γ) when
//! (codim x∩π, codim y∩π; codim x∩y, codim x∩y∩π, codim ⟨x,y⟩∩π) = (a,b;α,β,γ),
//! all codimensions taken inside a plane.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use serde_json::json;

use crate::analytic::gauss1;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, sym_eigen, Mat};
use crate::oracle::{enumerate_subspaces, AmbientSpace};
use crate::real::Real;
use crate::solver::{self, BlockSpec, Entry, SdpData, SolveStatus, SolverSettings};

pub const PLANE_COUNT: usize = 11811;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlaneRelation {
    pub a: u8,
    pub b: u8,
    pub alpha: u8,
    pub beta: u8,
    pub gamma: u8,
}

impl PlaneRelation {
    pub const fn new(a: u8, b: u8, alpha: u8, beta: u8, gamma: u8) -> PlaneRelation {
        PlaneRelation { a, b, alpha, beta, gamma }
    }

    pub fn transpose(&self) -> PlaneRelation {
        PlaneRelation { a: self.b, b: self.a, ..*self }
    }

    /// The representative of {R, R^T} with a <= b.
    pub fn canonical(&self) -> PlaneRelation {
        if self.a > self.b {
            self.transpose()
        } else {
            *self
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.alpha == 0
    }

    /// Accepts "22231" or "2,2;2,3,1".
    pub fn parse(s: &str) -> Result<PlaneRelation> {
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ';' | '(' | ')' | ' '))
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse(format!("bad relation {s:?}")))?;
        match digits[..] {
            [a, b, al, be, ga] if digits.iter().all(|&d| d <= 3) => Ok(PlaneRelation::new(a, b, al, be, ga)),
            _ => Err(Error::Parse(format!("relation {s:?} needs five digits in 0..=3"))),
        }
    }

    fn code(&self) -> usize {
        (((self.a as usize * 4 + self.b as usize) * 4 + self.alpha as usize) * 4 + self.beta as usize) * 4
            + self.gamma as usize
    }

    fn from_code(c: usize) -> PlaneRelation {
        PlaneRelation::new((c >> 8) as u8 & 3, (c >> 6) as u8 & 3, (c >> 4) as u8 & 3, (c >> 2) as u8 & 3, c as u8 & 3)
    }
}

impl fmt::Display for PlaneRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}{}{}", self.a, self.b, self.alpha, self.beta, self.gamma)
    }
}

/// Relation classes up to transposition. When x = π the entry is (0,b;b,b,0).
pub const FEASIBLE_LIST: [(u8, u8, u8, u8, u8); 41] = [
    (0, 0, 0, 0, 0),
    (0, 1, 1, 1, 0),
    (0, 2, 2, 2, 0),
    (0, 3, 3, 3, 0),
    (1, 1, 0, 1, 1),
    (1, 1, 1, 1, 0),
    (1, 1, 1, 1, 1),
    (1, 1, 1, 2, 0),
    (1, 1, 2, 2, 0),
    (1, 2, 1, 2, 0),
    (1, 2, 1, 2, 1),
    (1, 2, 2, 2, 0),
    (1, 2, 2, 2, 1),
    (1, 2, 2, 3, 0),
    (1, 2, 3, 3, 0),
    (1, 3, 2, 3, 1),
    (1, 3, 3, 3, 0),
    (1, 3, 3, 3, 1),
    (2, 2, 0, 2, 2),
    (2, 2, 1, 2, 2),
    (2, 2, 1, 2, 1),
    (2, 2, 2, 2, 0),
    (2, 2, 2, 2, 1),
    (2, 2, 2, 2, 2),
    (2, 2, 1, 3, 1),
    (2, 2, 2, 3, 1),
    (2, 2, 2, 3, 0),
    (2, 2, 3, 3, 0),
    (2, 2, 3, 3, 1),
    (2, 3, 1, 3, 2),
    (2, 3, 2, 3, 2),
    (2, 3, 2, 3, 1),
    (2, 3, 3, 3, 0),
    (2, 3, 3, 3, 1),
    (3, 3, 0, 3, 3),
    (3, 3, 1, 3, 3),
    (3, 3, 1, 3, 2),
    (3, 3, 2, 3, 2),
    (3, 3, 2, 3, 1),
    (3, 3, 3, 3, 0),
    (3, 3, 3, 3, 1),
];

pub fn feasible_list() -> BTreeSet<PlaneRelation> {
    FEASIBLE_LIST.iter().map(|&(a, b, al, be, ga)| PlaneRelation::new(a, b, al, be, ga)).collect()
}

/// A plane of F_2^7: three basis vectors (bit i = coordinate i) and the set
/// of its eight vectors as a bitmask over [0, 128).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Plane {
    pub basis: [u8; 3],
    pub points: u128,
}

impl Plane {
    pub fn from_basis(basis: [u8; 3]) -> Plane {
        let mut points = 0u128;
        for c in 0..8u8 {
            let v = (0..3).filter(|&i| c >> i & 1 == 1).fold(0u8, |acc, i| acc ^ basis[i]);
            points |= 1u128 << v;
        }
        Plane { basis, points }
    }
}

fn dim_of(mask: u128) -> u8 {
    mask.count_ones().trailing_zeros() as u8
}

fn rank(vectors: &[u8]) -> u8 {
    let mut pivots = [0u8; 8];
    let mut r = 0;
    for &v in vectors {
        let mut v = v;
        while v != 0 {
            let top = 7 - v.leading_zeros() as usize;
            if pivots[top] == 0 {
                pivots[top] = v;
                r += 1;
                break;
            }
            v ^= pivots[top];
        }
    }
    r
}

pub fn classify(pi: &Plane, x: &Plane, y: &Plane) -> PlaneRelation {
    let dxy = dim_of(x.points & y.points);
    let all = [x.basis[0], x.basis[1], x.basis[2], y.basis[0], y.basis[1], y.basis[2], pi.basis[0], pi.basis[1], pi.basis[2]];
    // dim(<x,y> ∩ π) = dim<x,y> + 3 - dim<x,y,π>
    let span_cap_pi = (6 - dxy) + 3 - rank(&all);
    PlaneRelation::new(
        3 - dim_of(x.points & pi.points),
        3 - dim_of(y.points & pi.points),
        3 - dxy,
        3 - dim_of(x.points & y.points & pi.points),
        3 - span_cap_pi,
    )
}

pub fn enumerate_planes() -> Result<Vec<Plane>> {
    let space = AmbientSpace::new(7, 2)?;
    let reps = enumerate_subspaces(space, 3)?;
    Ok(reps
        .iter()
        .map(|s| {
            let mut basis = [0u8; 3];
            for (slot, row) in basis.iter_mut().zip(&s.basis) {
                *slot = row.iter().enumerate().fold(0u8, |acc, (i, &c)| acc | (c << i));
            }
            Plane::from_basis(basis)
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct PlaneConfiguration {
    pub planes: Vec<Plane>,
    pub pi: usize,
    pub fiber: Vec<u8>,
    pub fiber_sizes: [u64; 4],
    /// Observed relations, sorted.
    pub relations: Vec<PlaneRelation>,
    /// Ordered pairs per relation.
    pub sizes: Vec<u64>,
    pub transpose: Vec<usize>,
    /// p[k][i][j] = #{z : (x,z) ∈ R_i, (z,y) ∈ R_j} for any (x,y) ∈ R_k.
    pub p: Vec<Vec<Vec<u32>>>,
    /// Base pairs per relation whose triple counts were compared.
    pub base_pairs: usize,
    lookup: Vec<u16>,
}

impl PlaneConfiguration {
    pub fn rank(&self) -> usize {
        self.relations.len()
    }

    pub fn index(&self, r: &PlaneRelation) -> Option<usize> {
        match self.lookup[r.code()] {
            u16::MAX => None,
            i => Some(i as usize),
        }
    }

    fn rel_index(&self, x: usize, y: usize) -> usize {
        let r = classify(&self.planes[self.pi], &self.planes[x], &self.planes[y]);
        self.lookup[r.code()] as usize
    }

    /// Observed classes up to transposition against the feasible list:
    /// (missing from the census, not in the list).
    pub fn census_difference(&self) -> (Vec<PlaneRelation>, Vec<PlaneRelation>) {
        let seen: BTreeSet<PlaneRelation> = self.relations.iter().map(|r| r.canonical()).collect();
        let listed = feasible_list();
        (listed.difference(&seen).copied().collect(), seen.difference(&listed).copied().collect())
    }

    pub fn census_matches(&self) -> bool {
        let (missing, extra) = self.census_difference();
        missing.is_empty() && extra.is_empty()
    }
}

const CHUNK: usize = 64;

/// Classify all ordered pairs of planes and count triples over sampled base
/// pairs. `base_pairs` pairs per relation are drawn with a seeded generator;
/// differing counts mean the partition is not coherent.
pub fn build_plane_configuration_with(base_pairs: usize, seed: u64) -> Result<PlaneConfiguration> {
    let planes = enumerate_planes()?;
    if planes.len() != PLANE_COUNT {
        return Err(Error::Structural(format!("expected {PLANE_COUNT} planes, found {}", planes.len())));
    }
    let pi_plane = Plane::from_basis([1, 2, 4]);
    let pi = planes
        .iter()
        .position(|p| p.points == pi_plane.points)
        .ok_or_else(|| Error::Structural("the coordinate plane is missing from the enumeration".into()))?;
    let pi_plane = planes[pi];
    let fiber: Vec<u8> = planes.iter().map(|x| 3 - dim_of(x.points & pi_plane.points)).collect();
    let mut fiber_sizes = [0u64; 4];
    for &f in &fiber {
        fiber_sizes[f as usize] += 1;
    }

    let idx: Vec<usize> = (0..planes.len()).collect();
    let counts = idx
        .par_chunks(CHUNK)
        .map(|xs| {
            let mut c = vec![0u64; 1024];
            for &x in xs {
                for y in &planes {
                    c[classify(&pi_plane, &planes[x], y).code()] += 1;
                }
            }
            c
        })
        .reduce(
            || vec![0u64; 1024],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(s, t)| *s += t);
                a
            },
        );
    let relations: Vec<PlaneRelation> =
        (0..1024).filter(|&c| counts[c] > 0).map(PlaneRelation::from_code).collect::<BTreeSet<_>>().into_iter().collect();
    let mut lookup = vec![u16::MAX; 1024];
    for (i, r) in relations.iter().enumerate() {
        lookup[r.code()] = i as u16;
    }
    let sizes: Vec<u64> = relations.iter().map(|r| counts[r.code()]).collect();
    let transpose = relations
        .iter()
        .map(|r| {
            let t = lookup[r.transpose().code()];
            if t == u16::MAX {
                Err(Error::Structural(format!("relation {r} has no transpose")))
            } else {
                Ok(t as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = PlaneConfiguration {
        planes,
        pi,
        fiber,
        fiber_sizes,
        relations,
        sizes,
        transpose,
        p: Vec::new(),
        base_pairs: base_pairs.max(1),
        lookup,
    };
    let by_fiber: Vec<Vec<usize>> = (0..4).map(|f| (0..cfg.planes.len()).filter(|&x| cfg.fiber[x] == f).collect()).collect();
    let r = cfg.rank();
    let tables = (0..r)
        .into_par_iter()
        .map(|k| {
            let rel = cfg.relations[k];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut first: Option<Vec<Vec<u32>>> = None;
            for _ in 0..cfg.base_pairs {
                let (x, y) = sample_pair(&cfg, &by_fiber, k, &mut rng)
                    .ok_or_else(|| Error::Structural(format!("a plane in fiber {} has no partner in relation {rel}", rel.a)))?;
                let mut t = vec![vec![0u32; r]; r];
                for z in 0..cfg.planes.len() {
                    t[cfg.rel_index(x, z)][cfg.rel_index(z, y)] += 1;
                }
                match &first {
                    None => first = Some(t),
                    Some(f) if *f != t => {
                        return Err(Error::Structural(format!("triple counts over relation {rel} depend on the base pair")))
                    }
                    _ => {}
                }
            }
            Ok(first.expect("at least one base pair"))
        })
        .collect::<Result<Vec<_>>>()?;
    cfg.p = tables;
    Ok(cfg)
}

pub fn build_plane_configuration() -> Result<PlaneConfiguration> {
    build_plane_configuration_with(3, 7)
}

fn sample_pair(cfg: &PlaneConfiguration, by_fiber: &[Vec<usize>], k: usize, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
    let rel = cfg.relations[k];
    let xs = &by_fiber[rel.a as usize];
    let ys = &by_fiber[rel.b as usize];
    let x = xs[rng.gen_range(0..xs.len())];
    let start = rng.gen_range(0..ys.len());
    (0..ys.len()).map(|o| ys[(start + o) % ys.len()]).find(|&y| cfg.rel_index(x, y) == k).map(|y| (x, y))
}

/// One irreducible representation of the relation algebra: `images[k]` is
/// the image of the relation matrix A_k.
#[derive(Clone, Debug)]
pub struct IrrepBlock {
    pub dim: usize,
    pub images: Vec<Mat>,
}

#[derive(Clone, Debug)]
pub struct BlockDiagonalization {
    pub blocks: Vec<IrrepBlock>,
    /// max_k ||L(A_k) Q - Q Δ(A_k)|| relative to max_k ||L(A_k)||.
    pub residual: Real,
    pub precision: u32,
    pub seed: u64,
}

impl BlockDiagonalization {
    /// Σ d_s², to be compared with the number of relations.
    pub fn dimension_count(&self) -> usize {
        self.blocks.iter().map(|b| b.dim * b.dim).sum()
    }

    /// Largest deviation of Σ_{diagonal k} Δ_s(A_k) from the identity.
    pub fn identity_defect(&self, cfg: &PlaneConfiguration) -> Real {
        let mut worst = Real::zero(self.precision);
        for b in &self.blocks {
            let mut m = Mat::scaled_identity(b.dim, &Real::from_i64(-1, self.precision));
            for (k, r) in cfg.relations.iter().enumerate() {
                if r.is_diagonal() {
                    m = m.add(&b.images[k]);
                }
            }
            worst = worst.max(m.max_abs());
        }
        worst
    }

    /// Smallest eigenvalue over the blocks of Σ_k Δ_s(A_k), the image of the
    /// all-ones matrix (every plane in Y, so every ratio equals one).
    pub fn all_planes_min_eigenvalue(&self) -> Real {
        let mut worst: Option<Real> = None;
        for b in &self.blocks {
            let mut m = Mat::zeros(b.dim, b.dim, self.precision);
            for img in &b.images {
                m = m.add(img);
            }
            let lam = min_eigenvalue(&m.symmetrize());
            worst = Some(match worst {
                Some(w) => w.min(lam),
                None => lam,
            });
        }
        worst.unwrap_or_else(|| Real::zero(self.precision))
    }
}

/// Decompose the regular representation of the relation algebra. Left
/// multiplications are written in the orthonormal basis A_k/√|R_k|; the
/// eigenspaces of a random symmetric right multiplication are irreducible
/// left modules, and one module per character class is kept. A failed
/// attempt is retried at doubled precision with a fresh seed.
pub fn block_diagonalize(cfg: &PlaneConfiguration, prec: u32, seed: u64) -> Result<BlockDiagonalization> {
    match block_diagonalize_once(cfg, prec, seed) {
        Ok(b) => Ok(b),
        Err(_) => block_diagonalize_once(cfg, prec * 2, seed.wrapping_add(1)),
    }
}

fn block_diagonalize_once(cfg: &PlaneConfiguration, prec: u32, seed: u64) -> Result<BlockDiagonalization> {
    let r = cfg.rank();
    let sq: Vec<Real> = cfg.sizes.iter().map(|&s| Real::from_i64(s as i64, prec).sqrt()).collect();
    let left: Vec<Mat> = (0..r)
        .map(|i| Mat::from_fn(r, r, |k, j| Real::from_i64(cfg.p[k][i][j] as i64, prec) * &sq[k] / &sq[j]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![0f64; r];
    for i in 0..r {
        let t = cfg.transpose[i];
        if t >= i {
            let v = 1.0 + rng.gen::<f64>();
            c[i] = v;
            c[t] = v;
        }
    }
    let cr: Vec<Real> = c.iter().map(|&v| Real::from_f64(v, prec)).collect();
    let right = Mat::from_fn(r, r, |k, j| {
        let mut acc = Real::zero(prec);
        for (i, ci) in cr.iter().enumerate() {
            let p = cfg.p[k][j][i];
            if p != 0 {
                acc += ci * Real::from_i64(p as i64, prec);
            }
        }
        acc * &sq[k] / &sq[j]
    });
    if right.asymmetry() > right.max_abs() * Real::pow2(-(prec as i32) / 2, prec) {
        return Err(Error::Numerical("right multiplication by a symmetric element is not symmetric".into()));
    }
    let (vals, vecs) = sym_eigen(&right);
    let scale = vals.iter().fold(Real::one(prec), |m, v| m.max(v.abs()));
    let tol = &scale * Real::pow2(-(prec as i32) / 3, prec);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..r {
        match clusters.last_mut() {
            Some(cl) if (&vals[i] - &vals[*cl.last().unwrap()]).abs() <= tol => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let basis = |cl: &[usize]| Mat::from_fn(r, cl.len(), |row, c| vecs.get(row, cl[c]).clone());
    let char_scale = left.iter().fold(Real::one(prec), |m, l| m.max(l.max_abs()));
    let char_tol = &char_scale * Real::pow2(-(prec as i32) / 3, prec);
    let mut classes: Vec<(Vec<Real>, Mat, usize)> = Vec::new();
    for cl in &clusters {
        let q = basis(cl);
        let qt = q.transpose();
        let chi: Vec<Real> = left.iter().map(|l| qt.mul(&l.mul(&q)).trace()).collect();
        match classes
            .iter_mut()
            .find(|(x, m, _)| m.cols() == cl.len() && x.iter().zip(&chi).all(|(a, b)| (a - b).abs() <= char_tol))
        {
            Some(entry) => entry.2 += 1,
            None => classes.push((chi, q, 1)),
        }
    }
    let mut blocks = Vec::new();
    let mut residual = Real::zero(prec);
    for (_, q, count) in &classes {
        let d = q.cols();
        if *count != d {
            return Err(Error::Numerical(format!(
                "an irreducible module of dimension {d} occurs {count} times in the regular representation"
            )));
        }
        let qt = q.transpose();
        let images: Vec<Mat> = left.iter().map(|l| qt.mul(&l.mul(q))).collect();
        for (l, img) in left.iter().zip(&images) {
            residual = residual.max(l.mul(q).sub(&q.mul(img)).max_abs());
        }
        blocks.push(IrrepBlock { dim: d, images });
    }
    let residual = residual / char_scale;
    let out = BlockDiagonalization { blocks, residual, precision: prec, seed };
    if out.dimension_count() != r {
        return Err(Error::Numerical(format!("block dimensions square-sum to {} instead of {r}", out.dimension_count())));
    }
    if out.residual > Real::pow2(-(prec as i32) / 3, prec) {
        return Err(Error::Numerical(format!("block residual {} above tolerance", out.residual.to_decimal(6))));
    }
    Ok(out)
}

/// Pair counts of a (7, N, 4; 3)_q code meeting the line-counting bound,
/// seen from one codeword π. `t_abc` is the number of ordered pairs (x,y)
/// with x in fiber a, y in fiber b and codim x∩y = c.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyTotals {
    pub q: u32,
    #[serde(serialize_with = "int_str")]
    pub size: Integer,
    /// Codewords through a point.
    #[serde(serialize_with = "int_str")]
    pub replication: Integer,
    #[serde(serialize_with = "int_str")]
    pub fiber2: Integer,
    #[serde(serialize_with = "int_str")]
    pub fiber3: Integer,
    #[serde(serialize_with = "int_str")]
    pub t222: Integer,
    #[serde(serialize_with = "int_str")]
    pub t223: Integer,
    #[serde(serialize_with = "int_str")]
    pub t232: Integer,
    #[serde(serialize_with = "int_str")]
    pub t233: Integer,
    #[serde(serialize_with = "int_str")]
    pub t332: Integer,
    #[serde(serialize_with = "int_str")]
    pub t333: Integer,
}

fn int_str<S: serde::Serializer>(v: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Every line lies in exactly one codeword, so a plane meets [3](r-1) others
/// in a point; a plane in fiber 2 (meeting π in P) meets (r-2) + ([3]-1)²
/// of them inside fiber 2, and a plane in fiber 3 meets [3]² codewords of
/// fiber 2.
pub fn family_totals(q: u32) -> FamilyTotals {
    let g = |n| gauss1(n, q);
    let size = Integer::from(g(7) * g(6)) / Integer::from(g(3) * g(2));
    let replication = Integer::from(g(6) / g(2));
    let meets = Integer::from(g(3) * (replication.clone() - 1u32));
    let fiber2 = meets.clone();
    let fiber3 = Integer::from(&size - 1u32) - &fiber2;
    let in_fiber2 = Integer::from(&replication - 2u32) + Integer::from(g(3) - 1u32).square();
    let t222 = Integer::from(&fiber2 * &in_fiber2);
    let t223 = Integer::from(&fiber2 * Integer::from(&fiber2 - 1u32)) - &t222;
    let t232 = Integer::from(&fiber2 * (Integer::from(&meets - 1u32) - &in_fiber2));
    let t233 = Integer::from(&fiber2 * &fiber3) - &t232;
    let t332 = Integer::from(&fiber3 * (Integer::from(&meets - g(3).square())));
    let t333 = Integer::from(&fiber3 * Integer::from(&fiber3 - 1u32)) - &t332;
    FamilyTotals { q, size, replication, fiber2, fiber3, t222, t223, t232, t233, t332, t333 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    /// Σ over a family equals its total.
    Exact,
    /// Σ over a family is at most its total.
    Cap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Min,
    Max,
}

/// Constraint inventory for the pair-count SDP.
#[derive(Clone, Debug, Serialize)]
pub struct FanoSdpSpec {
    pub totals: FamilyTotals,
    pub mode: FamilyMode,
    /// Impose Σ over all ordered pairs = N².
    pub total_pairs: bool,
}

impl FanoSdpSpec {
    pub fn binary(mode: FamilyMode) -> FanoSdpSpec {
        FanoSdpSpec { totals: family_totals(2), mode, total_pairs: true }
    }

    /// Fixed counts plus family totals reach N², so every cap is attained.
    pub fn caps_are_tight(&self) -> bool {
        let fixed: Integer = self.fixed().into_iter().map(|(r, v)| if r.a == r.b { v } else { v * 2u32 }).sum();
        let fam: Integer = self.families().into_iter().map(|((a, b, _), v)| if a == b { v } else { v * 2u32 }).sum();
        fixed + fam == Integer::from(self.totals.size.clone().square())
    }

    fn fixed(&self) -> Vec<(PlaneRelation, Integer)> {
        let t = &self.totals;
        vec![
            (PlaneRelation::new(0, 0, 0, 0, 0), Integer::from(1)),
            (PlaneRelation::new(0, 2, 2, 2, 0), t.fiber2.clone()),
            (PlaneRelation::new(0, 3, 3, 3, 0), t.fiber3.clone()),
            (PlaneRelation::new(2, 2, 0, 2, 2), t.fiber2.clone()),
            (PlaneRelation::new(3, 3, 0, 3, 3), t.fiber3.clone()),
        ]
    }

    fn families(&self) -> Vec<((u8, u8, u8), Integer)> {
        let t = &self.totals;
        vec![
            ((2, 2, 2), t.t222.clone()),
            ((2, 2, 3), t.t223.clone()),
            ((2, 3, 2), t.t232.clone()),
            ((2, 3, 3), t.t233.clone()),
            ((3, 3, 2), t.t332.clone()),
            ((3, 3, 3), t.t333.clone()),
        ]
    }
}

/// Relations that can hold between two codewords when π is a codeword:
/// nothing meets π in a line, and distinct codewords meet in at most a point.
pub fn admissible(r: &PlaneRelation) -> bool {
    r.a != 1 && r.b != 1 && (r.alpha >= 2 || (r.alpha == 0 && r.a == r.b))
}

/// The SDP over orbit counts u_o (o = {R, R^T}), written as u = u0 + T x
/// after eliminating the equalities.
#[derive(Clone, Debug)]
pub struct FanoModel {
    pub orbits: Vec<PlaneRelation>,
    members: Vec<Vec<usize>>,
    u0: Vec<Rational>,
    t: Vec<Vec<Rational>>,
    data: SdpData,
    precision: u32,
}

impl FanoModel {
    pub fn build(cfg: &PlaneConfiguration, blocks: &BlockDiagonalization, spec: &FanoSdpSpec) -> Result<FanoModel> {
        let prec = blocks.precision;
        let orbits: Vec<PlaneRelation> =
            cfg.relations.iter().filter(|r| admissible(r)).map(|r| r.canonical()).collect::<BTreeSet<_>>().into_iter().collect();
        let members: Vec<Vec<usize>> = orbits
            .iter()
            .map(|o| {
                let k = cfg.index(o).expect("orbit from observed relations");
                if cfg.transpose[k] == k {
                    vec![k]
                } else {
                    vec![k, cfg.transpose[k]]
                }
            })
            .collect();
        let n = orbits.len();
        let pos: HashMap<PlaneRelation, usize> = orbits.iter().enumerate().map(|(i, o)| (*o, i)).collect();
        let mut eqs: Vec<(Vec<Rational>, Rational)> = Vec::new();
        let mut caps: Vec<(Vec<Rational>, Rational)> = Vec::new();
        for (r, v) in spec.fixed() {
            let i = *pos.get(&r).ok_or_else(|| Error::Structural(format!("fixed relation {r} is not admissible")))?;
            let mut row = vec![Rational::new(); n];
            row[i] = Rational::from(1);
            eqs.push((row, Rational::from(v)));
        }
        let mut family_cap = vec![None::<Integer>; n];
        for ((a, b, al), tot) in spec.families() {
            let mut row = vec![Rational::new(); n];
            for (i, o) in orbits.iter().enumerate() {
                if o.a == a && o.b == b && o.alpha == al {
                    row[i] = Rational::from(1);
                    family_cap[i] = Some(tot.clone());
                }
            }
            match spec.mode {
                FamilyMode::Exact => eqs.push((row, Rational::from(tot))),
                FamilyMode::Cap => caps.push((row, Rational::from(tot))),
            }
        }
        // with the pair total imposed, caps that add up to it are all tight
        if spec.total_pairs && !caps.is_empty() && spec.caps_are_tight() {
            eqs.append(&mut caps);
        }
        if spec.total_pairs {
            let row: Vec<Rational> = members.iter().map(|m| Rational::from(m.len() as u32)).collect();
            eqs.push((row, Rational::from(spec.totals.size.clone().square())));
        }
        let (u0, t) = solve_affine(n, eqs)?;
        let m = t.first().map_or(0, |r| r.len());
        let total = Integer::from(spec.totals.size.clone().square());

        // diagonal block rows: c0 + Σ c_f x_f >= 0
        let mut rows: Vec<(Rational, Vec<Rational>)> = Vec::new();
        for i in 0..n {
            rows.push((u0[i].clone(), t[i].clone()));
        }
        for (row, tot) in &caps {
            let c0 = tot.clone() - dot_q(row, &u0);
            let cs: Vec<Rational> = (0..m).map(|f| -(0..n).map(|i| row[i].clone() * &t[i][f]).sum::<Rational>()).collect();
            rows.push((c0, cs));
        }
        // box for the free coordinates
        let mut var_scale = Vec::with_capacity(m);
        for f in 0..m {
            let i = (0..n)
                .find(|&i| t[i][f] == 1 && (0..m).all(|g| g == f || t[i][g] == 0) && u0[i] == 0)
                .ok_or_else(|| Error::Structural("elimination left a free coordinate that is not an orbit count".into()))?;
            let cap = family_cap[i].clone().unwrap_or_else(|| total.clone());
            let mut cs = vec![Rational::new(); m];
            cs[f] = Rational::from(-1);
            var_scale.push(Real::from_integer(&cap, prec).max(Real::one(prec)));
            rows.push((Rational::from(cap), cs));
        }
        for (c0, cs) in &rows {
            if cs.iter().all(|c| *c == 0) && *c0 < 0 {
                return Err(Error::Structural(format!("constant row {c0} < 0")));
            }
        }
        let rows: Vec<_> = rows.into_iter().filter(|(_, cs)| cs.iter().any(|c| *c != 0)).collect();

        // PSD parts: G_{s,o} = Σ_{R ∈ o} Δ_s(A_R)/|R|
        let mut specs = vec![BlockSpec { size: 0, diagonal: true }];
        let mut constraints: Vec<Vec<Entry>> = vec![Vec::new(); m + 1];
        let mut diag_len = 0;
        for (c0, cs) in &rows {
            push(&mut constraints[0], 0, diag_len, diag_len, -Real::from_rational(c0, prec));
            for (f, c) in cs.iter().enumerate() {
                if *c != 0 {
                    push(&mut constraints[f + 1], 0, diag_len, diag_len, Real::from_rational(c, prec));
                }
            }
            diag_len += 1;
        }
        let u0r: Vec<Real> = u0.iter().map(|v| Real::from_rational(v, prec)).collect();
        let tr: Vec<Vec<Real>> = t.iter().map(|row| row.iter().map(|v| Real::from_rational(v, prec)).collect()).collect();
        for blk in &blocks.blocks {
            let d = blk.dim;
            let g: Vec<Mat> = members
                .iter()
                .map(|mem| {
                    let mut acc = Mat::zeros(d, d, prec);
                    for &k in mem {
                        acc.add_scaled(&blk.images[k], &Real::from_i64(cfg.sizes[k] as i64, prec).recip());
                    }
                    acc.symmetrize()
                })
                .collect();
            let mut f0 = Mat::zeros(d, d, prec);
            for (i, gi) in g.iter().enumerate() {
                f0.add_scaled(gi, &u0r[i]);
            }
            let mut fs: Vec<Mat> = vec![Mat::zeros(d, d, prec); m];
            for (i, gi) in g.iter().enumerate() {
                for (f, fm) in fs.iter_mut().enumerate() {
                    if !tr[i][f].is_zero() {
                        fm.add_scaled(gi, &tr[i][f]);
                    }
                }
            }
            let norm = fs.iter().fold(f0.max_abs(), |acc, x| acc.max(x.max_abs()));
            if norm.is_zero() {
                continue;
            }
            let s = norm.recip();
            let (bi, offset) = if d == 1 {
                diag_len += 1;
                (0, diag_len - 1)
            } else {
                specs.push(BlockSpec { size: d, diagonal: false });
                (specs.len() - 1, 0)
            };
            for rr in 0..d {
                for cc in rr..d {
                    if bi == 0 && rr != cc {
                        continue;
                    }
                    let (er, ec) = (offset + rr, offset + cc);
                    push(&mut constraints[0], bi, er, ec, -(f0.get(rr, cc) * &s));
                    for (f, fm) in fs.iter().enumerate() {
                        push(&mut constraints[f + 1], bi, er, ec, fm.get(rr, cc) * &s);
                    }
                }
            }
        }
        specs[0].size = diag_len;
        let data = SdpData { blocks: specs, objective: vec![Real::zero(prec); m], constraints, var_scale };
        data.validate()?;
        Ok(FanoModel { orbits, members, u0, t, data, precision: prec })
    }

    pub fn num_free(&self) -> usize {
        self.data.num_vars()
    }

    pub fn data(&self) -> &SdpData {
        &self.data
    }

    /// Integer bound on the count of ordered pairs in `rel` (ceil of the
    /// minimum or floor of the maximum), with the two real values.
    pub fn bound(&self, rel: &PlaneRelation, sense: Sense, settings: &SolverSettings) -> Result<RelationBound> {
        let prec = self.precision;
        let Some(i) = self.orbits.iter().position(|o| *o == rel.canonical()) else {
            return Ok(RelationBound::exact(*rel, Integer::new(), "not admissible"));
        };
        if self.t[i].iter().all(|c| *c == 0) {
            let v = self.u0[i].clone();
            if !v.denom().eq(&1) {
                return Err(Error::Structural(format!("fixed count for {rel} is not integral")));
            }
            return Ok(RelationBound::exact(*rel, v.numer().clone(), "fixed"));
        }
        let sign: i64 = if sense == Sense::Max { 1 } else { -1 };
        let mut data = self.data.clone();
        data.objective = self.t[i].iter().map(|c| Real::from_rational(c, prec) * Real::from_i64(sign, prec)).collect();
        let offset = Real::from_rational(&self.u0[i], prec) * Real::from_i64(sign, prec);
        let sol = solver::solve(&data, settings)?;
        let _ = &self.members;
        if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::NearOptimal) {
            return Ok(RelationBound {
                relation: *rel,
                sense: Some(sense),
                status: sol.status.to_string(),
                value: None,
                primal: None,
                bound: None,
            });
        }
        let hi = &sol.dual_objective + sol.gap().abs() + &offset;
        let lo = &sol.primal_objective + &offset;
        let slack = hi.abs().max(Real::one(prec)) * Real::from_f64(1e-12, prec);
        let (value, primal, bound) = if sense == Sense::Max {
            let b = (&hi + &slack).floor();
            (hi, lo, b)
        } else {
            let b = (-(&hi + &slack)).ceil();
            (-hi, -lo, b)
        };
        Ok(RelationBound {
            relation: *rel,
            sense: Some(sense),
            status: sol.status.to_string(),
            value: Some(value.to_f64()),
            primal: Some(primal.to_f64()),
            bound: Some(bound),
        })
    }
}

fn push(list: &mut Vec<Entry>, block: usize, row: usize, col: usize, value: Real) {
    if !value.is_zero() {
        list.push(Entry { block, row, col, value });
    }
}

fn dot_q(row: &[Rational], u: &[Rational]) -> Rational {
    row.iter().zip(u).map(|(a, b)| Rational::from(a * b)).sum()
}

/// Reduce the equalities and write every unknown as u0 + T x over the free
/// columns.
fn solve_affine(n: usize, eqs: Vec<(Vec<Rational>, Rational)>) -> Result<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let mut rows = eqs;
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i].0[col] != 0) else { continue };
        rows.swap(r, p);
        let inv = Rational::from(rows[r].0[col].recip_ref());
        for v in rows[r].0.iter_mut() {
            *v *= &inv;
        }
        rows[r].1 *= &inv;
        for i in 0..rows.len() {
            if i != r && rows[i].0[col] != 0 {
                let f = rows[i].0[col].clone();
                let (src_c, src_rhs) = (rows[r].0.clone(), rows[r].1.clone());
                for (v, s) in rows[i].0.iter_mut().zip(&src_c) {
                    *v -= Rational::from(&f * s);
                }
                rows[i].1 -= f * src_rhs;
            }
        }
        pivots.push((r, col));
        r += 1;
    }
    if rows[r..].iter().any(|(_, rhs)| *rhs != 0) {
        return Err(Error::Structural("the count equalities are inconsistent".into()));
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|p| p.1).collect();
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut u0 = vec![Rational::new(); n];
    let mut t = vec![vec![Rational::new(); free.len()]; n];
    for (f, &c) in free.iter().enumerate() {
        t[c][f] = Rational::from(1);
    }
    for &(row, col) in &pivots {
        u0[col] = rows[row].1.clone();
        for (f, &c) in free.iter().enumerate() {
            t[col][f] = -rows[row].0[c].clone();
        }
    }
    Ok((u0, t))
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationBound {
    pub relation: PlaneRelation,
    pub sense: Option<Sense>,
    pub status: String,
    /// Optimum read off the dual side, widened by the gap.
    pub value: Option<f64>,
    pub primal: Option<f64>,
    #[serde(serialize_with = "opt_int_str")]
    pub bound: Option<Integer>,
}

fn opt_int_str<S: serde::Serializer>(v: &Option<Integer>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

impl RelationBound {
    fn exact(relation: PlaneRelation, v: Integer, status: &str) -> RelationBound {
        let f = v.to_f64();
        RelationBound { relation, sense: None, status: status.into(), value: Some(f), primal: Some(f), bound: Some(v) }
    }
}

/// Printed brackets: (relation, lower, upper).
pub const PRINTED_BRACKETS: [(&str, i64, i64); 18] = [
    ("00000", 1, 1),
    ("02220", 140, 140),
    ("03330", 240, 240),
    ("22220", 0, 420),
    ("22221", 0, 1260),
    ("22222", 1400, 2240),
    ("22231", 4620, 5040),
    ("22230", 0, 420),
    ("22330", 4200, 5040),
    ("22331", 6720, 7560),
    ("23232", 6720, 7560),
    ("23231", 4200, 5040),
    ("23330", 1680, 2520),
    ("23331", 19320, 20160),
    ("33232", 19320, 20160),
    ("33231", 1680, 2520),
    ("33330", 1080, 1920),
    ("33331", 33600, 34440),
];

#[derive(Clone, Debug, Serialize)]
pub struct Table7Row {
    pub relation: PlaneRelation,
    #[serde(serialize_with = "opt_int_str")]
    pub min: Option<Integer>,
    #[serde(serialize_with = "opt_int_str")]
    pub max: Option<Integer>,
    pub min_value: Option<f64>,
    pub max_value: Option<f64>,
    pub printed: (i64, i64),
    pub verdict: String,
}

impl Table7Row {
    /// Computed bracket lies inside the printed one.
    pub fn within_printed(&self) -> bool {
        match (&self.min, &self.max) {
            (Some(lo), Some(hi)) => *lo >= self.printed.0 && *hi <= self.printed.1 && lo <= hi,
            _ => false,
        }
    }
}

fn verdict(min: &Option<Integer>, max: &Option<Integer>, printed: (i64, i64)) -> String {
    let (Some(lo), Some(hi)) = (min, max) else { return "unsolved".into() };
    if *lo == printed.0 && *hi == printed.1 {
        "equal".into()
    } else if *lo >= printed.0 && *hi <= printed.1 {
        "tighter".into()
    } else if *lo <= printed.0 && *hi >= printed.1 {
        "looser".into()
    } else {
        "shifted".into()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table7Report {
    pub fiber_sizes: [u64; 4],
    pub relation_count: usize,
    pub census_matches: bool,
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    pub block_dims: Vec<usize>,
    pub block_residual: f64,
    pub all_planes_min_eigenvalue: f64,
    pub totals: FamilyTotals,
    pub mode: FamilyMode,
    pub free_variables: usize,
    pub rows: Vec<Table7Row>,
}

impl Table7Report {
    pub fn row(&self, rel: &str) -> Option<&Table7Row> {
        let r = PlaneRelation::parse(rel).ok()?;
        self.rows.iter().find(|row| row.relation == r)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_else(|e| json!({ "error": e.to_string() }))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("relation,min,max,min_value,max_value,printed_min,printed_max,verdict\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{},{},{},{}\n",
                r.relation,
                opt(&r.min),
                opt(&r.max),
                r.min_value.map_or(String::new(), |v| format!("{v:.6}")),
                r.max_value.map_or(String::new(), |v| format!("{v:.6}")),
                r.printed.0,
                r.printed.1,
                r.verdict
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let census = if self.census_matches {
            "census matches the list".to_string()
        } else {
            format!("census vs list: listed but absent {:?}, present but unlisted {:?}", self.missing, self.extra)
        };
        let mut s = format!(
            "fibers {:?}, {} relations, {census}; blocks {:?}; family totals {:?}\n\n",
            self.fiber_sizes, self.relation_count, self.block_dims, self.mode
        );
        s += "| relation | min | max | printed | verdict |\n|---|---|---|---|---|\n";
        for r in &self.rows {
            s += &format!(
                "| {} | {} | {} | [{}, {}] | {} |\n",
                r.relation,
                opt(&r.min),
                opt(&r.max),
                r.printed.0,
                r.printed.1,
                r.verdict
            );
        }
        s
    }
}

fn opt(v: &Option<Integer>) -> String {
    v.as_ref().map_or_else(|| "-".into(), |v| v.to_string())
}

/// Every printed row, minimised and maximised in parallel.
pub fn table7_report(
    cfg: &PlaneConfiguration,
    blocks: &BlockDiagonalization,
    spec: &FanoSdpSpec,
    settings: &SolverSettings,
) -> Result<Table7Report> {
    let model = FanoModel::build(cfg, blocks, spec)?;
    let jobs: Vec<(PlaneRelation, Sense, (i64, i64))> = PRINTED_BRACKETS
        .iter()
        .flat_map(|&(r, lo, hi)| {
            let rel = PlaneRelation::parse(r).expect("printed relation");
            [(rel, Sense::Min, (lo, hi)), (rel, Sense::Max, (lo, hi))]
        })
        .collect();
    let results = jobs.par_iter().map(|(r, s, _)| model.bound(r, *s, settings)).collect::<Result<Vec<_>>>()?;
    let rows = results
        .chunks(2)
        .zip(jobs.chunks(2))
        .map(|(res, job)| {
            let (min, max) = (res[0].bound.clone(), res[1].bound.clone());
            Table7Row {
                relation: job[0].0,
                verdict: verdict(&min, &max, job[0].2),
                min,
                max,
                min_value: res[0].value,
                max_value: res[1].value,
                printed: job[0].2,
            }
        })
        .collect();
    let (missing, extra) = cfg.census_difference();
    Ok(Table7Report {
        fiber_sizes: cfg.fiber_sizes,
        relation_count: cfg.rank(),
        census_matches: missing.is_empty() && extra.is_empty(),
        missing: missing.iter().map(|r| r.to_string()).collect(),
        extra: extra.iter().map(|r| r.to_string()).collect(),
        block_dims: blocks.blocks.iter().map(|b| b.dim).collect(),
        block_residual: blocks.residual.to_f64(),
        all_planes_min_eigenvalue: blocks.all_planes_min_eigenvalue().to_f64(),
        totals: spec.totals.clone(),
        mode: spec.mode,
        free_variables: model.num_free(),
        rows,
    })
}

/// Build, decompose and solve with default settings.
pub fn table7(mode: FamilyMode, settings: &SolverSettings) -> Result<Table7Report> {
    let cfg = build_plane_configuration()?;
    let blocks = block_diagonalize(&cfg, settings.precision, 11)?;
    table7_report(&cfg, &blocks, &FanoSdpSpec::binary(mode), settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_family_totals() {
        let t = family_totals(2);
        assert_eq!(t.size, 381);
        assert_eq!(t.replication, 21);
        assert_eq!((t.fiber2.to_i64(), t.fiber3.to_i64()), (Some(140), Some(240)));
        let v: Vec<i64> = [&t.t222, &t.t223, &t.t232, &t.t233, &t.t332, &t.t333].iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(v, [7700, 11760, 11760, 21840, 21840, 35520]);
    }

    #[test]
    fn relation_parsing_and_codes() {
        let r = PlaneRelation::parse("2,3;2,3,1").unwrap();
        assert_eq!(r.to_string(), "23231");
        assert_eq!(PlaneRelation::from_code(r.code()), r);
        assert_eq!(r.transpose().canonical(), r);
        assert!(PlaneRelation::parse("2224").is_err());
        assert_eq!(feasible_list().len(), 41);
    }

    #[test]
    fn classify_small_cases() {
        let pi = Plane::from_basis([1, 2, 4]);
        assert_eq!(classify(&pi, &pi, &pi), PlaneRelation::new(0, 0, 0, 0, 0));
        let x = Plane::from_basis([1, 8, 16]);
        let r = classify(&pi, &pi, &x);
        assert_eq!(r, PlaneRelation::new(0, 2, 2, 2, 0));
        let y = Plane::from_basis([8, 32, 64]);
        assert_eq!(classify(&pi, &y, &y), PlaneRelation::new(3, 3, 0, 3, 3));
    }

    #[test]
    fn affine_elimination() {
        let q = |v: i32| Rational::from(v);
        let (u0, t) = solve_affine(3, vec![(vec![q(1), q(1), q(0)], q(5)), (vec![q(0), q(0), q(1)], q(2))]).unwrap();
        assert_eq!(u0, vec![q(5), q(0), q(2)]);
        assert_eq!(t, vec![vec![q(-1)], vec![q(1)], vec![q(0)]]);
        assert!(solve_affine(1, vec![(vec![q(1)], q(1)), (vec![q(2)], q(3))]).is_err());
    }
}
