//! The semidefinite program for A_q(n,d;K): variables b_{ijl} (i <= j) count
//! ordered codeword pairs in R_{ijl}; objective Σ_i b_{ii0}.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rug::Integer;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coherent::{CoherentConfig, RelationId};
use crate::error::{Error, Result};
use crate::irreps::IrrepTable;
use crate::linalg::Mat;
use crate::qcalc::{gauss_binomial, QParams};
use crate::real::Real;
use crate::solver::{self, BlockSpec, Entry, Feasibility, SdpData, SolveStatus, Solution, SolverSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairVariable {
    pub i: usize,
    pub j: usize,
    pub l: usize,
}

impl PairVariable {
    pub fn new(i: usize, j: usize, l: usize) -> PairVariable {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        PairVariable { i, j, l }
    }

    pub fn is_count(&self) -> bool {
        self.i == self.j && self.l == 0
    }

    pub fn relation(&self) -> RelationId {
        RelationId::new(self.i, self.j, self.l)
    }
}

impl std::fmt::Display for PairVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "b{},{},{}", self.i, self.j, self.l)
    }
}

/// b_{ijl} is forced to zero by the minimum distance.
pub fn is_zeroed(i: usize, j: usize, l: usize, d: usize) -> bool {
    (i != j || l >= 1) && i.abs_diff(j) + 2 * l < d
}

/// The same rule written as l < min(i,j) + (d - i - j)/2.
pub fn is_zeroed_min_form(i: usize, j: usize, l: usize, d: usize) -> bool {
    let lhs = 2 * (l as i64);
    let rhs = 2 * i.min(j) as i64 + d as i64 - i as i64 - j as i64;
    (i != j || l >= 1) && lhs < rhs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    BuiltinLemma,
    BuiltinCounting,
    UserFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundRecord {
    pub q: u32,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub bound: u64,
    #[serde(rename = "source-note", default)]
    pub source_note: String,
}

/// Upper bounds on A_q(n,d;k) supplied by the user; keys use the even d.
#[derive(Clone, Debug, Default)]
pub struct DimensionBoundTable {
    entries: BTreeMap<(u32, usize, usize, usize), (Integer, String)>,
}

impl DimensionBoundTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: u32, n: usize, d: usize, k: usize, bound: Integer, note: &str) {
        let d = evenize(d);
        let key = (q, n, d, k.min(n - k));
        let keep = match self.entries.get(&key) {
            Some((old, _)) => bound < *old,
            None => true,
        };
        if keep {
            self.entries.insert(key, (bound, note.to_string()));
        }
    }

    pub fn from_records(records: &[BoundRecord]) -> Result<Self> {
        let mut t = Self::new();
        for r in records {
            if r.k > r.n {
                return Err(Error::Config(format!("bound record with k={} > n={}", r.k, r.n)));
            }
            t.insert(r.q, r.n, r.d, r.k, Integer::from(r.bound), &r.source_note);
        }
        Ok(t)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let records: Vec<BoundRecord> = serde_json::from_str(text)?;
        Self::from_records(&records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// The bound file shipped with the crate (data/cdc_bounds.json): values
    /// from the literature that the builtin formulas do not reach.
    pub fn literature() -> Self {
        Self::from_json_str(include_str!("../data/cdc_bounds.json")).expect("shipped bound file parses")
    }

    pub fn get(&self, q: u32, n: usize, d: usize, k: usize) -> Option<&Integer> {
        self.entries.get(&(q, n, evenize(d), k.min(n - k))).map(|(b, _)| b)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn evenize(d: usize) -> usize {
    d + d % 2
}

/// Upper bound on A_q(n,d;k) for even d with its provenance: the minimum of
/// the user entry, the partial spread bound for n = 1 mod k and d = 2k, the
/// improved Johnson recursion, the counting bound [n,t]/[k,t] with
/// t = k - d/2 + 1, and [n,k].
pub fn dimension_bound_with_source(
    q: QParams,
    n: usize,
    d: usize,
    k: usize,
    table: &DimensionBoundTable,
) -> (Integer, BoundSource) {
    let d = evenize(d);
    if k > n {
        return (Integer::new(), BoundSource::BuiltinCounting);
    }
    let k = k.min(n - k);
    if k == 0 || 2 * k < d {
        return (Integer::from(1), BoundSource::BuiltinCounting);
    }
    let mut best = (counting_bound(q, n, d, k), BoundSource::BuiltinCounting);
    let mut offer = |v: Integer, s: BoundSource| {
        if v < best.0 {
            best = (v, s);
        }
    };
    if d == 2 * k {
        if let Some(v) = partial_spread_bound(q, n, k) {
            offer(v, BoundSource::BuiltinLemma);
        }
    }
    offer(johnson(q, n, d, k, &mut BTreeMap::new()), BoundSource::BuiltinCounting);
    if let Some(v) = table.get(q.q, n, d, k) {
        offer(v.clone(), BoundSource::UserFile);
    }
    best
}

pub fn dimension_bound(q: QParams, n: usize, d: usize, k: usize, table: &DimensionBoundTable) -> Integer {
    dimension_bound_with_source(q, n, d, k, table).0
}

fn counting_bound(q: QParams, n: usize, d: usize, k: usize) -> Integer {
    let t = (k + 1 - d / 2) as i64;
    let trivial = gauss_binomial(n as i64, k as i64, q);
    let c = gauss_binomial(n as i64, t, q) / gauss_binomial(k as i64, t, q);
    c.min(trivial)
}

/// Partial spreads of k-spaces in F_q^n, n = tk + r: spreads for r = 0,
/// (q^n - q^{k+r})/(q^k - 1) + 1 when k > [r]_q (for r = 1 this is
/// Beutelspacher's value), and (2^n - 32)/7 + 2 for q = 2, k = 3, r = 2.
pub fn partial_spread_bound(q: QParams, n: usize, k: usize) -> Option<Integer> {
    if k == 0 || n < k {
        return None;
    }
    let r = n % k;
    let qn = q.pow(n as u32);
    let qk1 = q.pow(k as u32) - 1u32;
    if r == 0 {
        return Some((qn - 1u32) / qk1);
    }
    if n < 2 * k {
        return Some(Integer::from(1));
    }
    let theta_r = (q.pow(r as u32) - 1u32) / (q.q - 1);
    if Integer::from(k) > theta_r {
        return Some((qn - q.pow((k + r) as u32)) / qk1 + 1u32);
    }
    if q.q == 2 && k == 3 && r == 2 {
        return Some((qn - 32u32) / 7u32 + 2u32);
    }
    None
}

/// A(n,d;k) <= floor([n,1]/[k,1] A(n-1,d;k-1)), also applied to the dual.
fn johnson(q: QParams, n: usize, d: usize, k: usize, memo: &mut BTreeMap<(usize, usize), Integer>) -> Integer {
    let k = k.min(n - k);
    if k == 0 || 2 * k < d {
        return Integer::from(1);
    }
    if let Some(v) = memo.get(&(n, k)) {
        return v.clone();
    }
    let mut best = counting_bound(q, n, d, k);
    if d == 2 * k {
        if let Some(v) = partial_spread_bound(q, n, k) {
            best = best.min(v);
        }
    }
    let gn = gauss_binomial(n as i64, 1, q);
    for kk in [k, n - k] {
        if kk == 0 || n == 0 {
            continue;
        }
        let sub = johnson(q, n - 1, d, kk - 1, memo);
        let v = Integer::from(&gn * &sub) / gauss_binomial(kk as i64, 1, q);
        best = best.min(v);
    }
    memo.insert((n, k), best.clone());
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockLabel {
    Irrep(usize),
    Fiber(usize),
    FiberPair(usize, usize),
    PairLower(usize, usize),
    Subset(u32),
    ProductBound(usize, usize),
    WholeCode,
}

/// One coefficient of a matrix-valued affine form; `var == None` is the
/// constant term. Entries with row != col stand for both symmetric positions.
#[derive(Clone, Debug)]
pub struct Term {
    pub var: Option<usize>,
    pub row: usize,
    pub col: usize,
    pub coef: Real,
}

#[derive(Clone, Debug)]
pub struct PsdBlock {
    pub label: BlockLabel,
    pub size: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BuildOptions {
    /// Add the (implied) blocks ((Σb_iil, Σb_ijl), (Σb_ijl, Σb_jjl)) ⪰ 0.
    pub pair_lower_blocks: bool,
    /// Add ((1, Σ b_ii0), (Σ b_ii0, Σ b_ijl over all ordered pairs)) ⪰ 0.
    pub whole_code_block: bool,
    /// Schur blocks ((1, Σ_S b_ii0), (., Σ_{S×S} b)) for every fiber subset S
    /// with at least three fibers.
    pub subset_blocks: bool,
    /// Σ_l b_ijl <= A(j) b_ii0 for all fibers i, j (from x_j <= A(j)).
    pub product_bounds: bool,
}

impl Default for BuildOptions {
    /// Without the whole-code block the pair blocks can be met with all cross
    /// counts at zero, and the fibers decouple. The product bounds are the
    /// linear form of x_i x_j <= x_i A(j). Both are on by default.
    fn default() -> Self {
        BuildOptions { pair_lower_blocks: false, whole_code_block: true, subset_blocks: false, product_bounds: true }
    }
}

/// How a variable enters the lowered problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Free,
    Fixed(Integer),
    /// constant + Σ coef · (free variable)
    Affine(Integer, Vec<(usize, Integer)>),
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub q: u32,
    pub n: usize,
    pub d: usize,
    pub fibers: Vec<usize>,
    pub variables: Vec<PairVariable>,
    /// Box upper bounds; the lower bound is always 0.
    pub upper: Vec<Integer>,
    pub bindings: Vec<Binding>,
    /// Objective coefficient of every variable (maximised).
    pub objective: Vec<i64>,
    pub blocks: Vec<PsdBlock>,
    pub fiber_bounds: BTreeMap<usize, (Integer, BoundSource)>,
    pub precision: u32,
}

pub fn build_sdp(
    cfg: &CoherentConfig,
    tab: &IrrepTable,
    d: usize,
    fibers: &[usize],
    bounds: &DimensionBoundTable,
) -> Result<SdpProblem> {
    build_sdp_with(cfg, tab, d, fibers, bounds, BuildOptions::default())
}

pub fn build_sdp_with(
    cfg: &CoherentConfig,
    tab: &IrrepTable,
    d: usize,
    fibers: &[usize],
    bounds: &DimensionBoundTable,
    opts: BuildOptions,
) -> Result<SdpProblem> {
    let k: BTreeSet<usize> = fibers.iter().copied().collect();
    if let Some(bad) = k.iter().find(|a| !cfg.has_fiber(**a)) {
        return Err(Error::Domain(format!("fiber {bad} is not part of the configuration")));
    }
    if k.is_empty() {
        return Err(Error::Domain("empty fiber set".into()));
    }
    let prec = tab.precision;
    let k: Vec<usize> = k.into_iter().collect();
    let mut fiber_bounds = BTreeMap::new();
    for &a in &k {
        fiber_bounds.insert(a, dimension_bound_with_source(cfg.q, cfg.n, d, a, bounds));
    }
    let mut variables = Vec::new();
    let mut upper = Vec::new();
    for (ai, &a) in k.iter().enumerate() {
        for &b in &k[ai..] {
            for l in 0..=cfg.max_class(a, b) {
                if is_zeroed(a, b, l, d) {
                    continue;
                }
                let v = PairVariable::new(a, b, l);
                let u = if v.is_count() {
                    fiber_bounds[&a].0.clone()
                } else {
                    Integer::from(&fiber_bounds[&a].0 * &fiber_bounds[&b].0)
                };
                variables.push(v);
                upper.push(u);
            }
        }
    }
    let index: BTreeMap<PairVariable, usize> = variables.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let count = |a: usize| index.get(&PairVariable::new(a, a, 0)).copied();
    let mut blocks = Vec::new();
    // irreducible blocks
    for s in 0..tab.s_count {
        let support: Vec<usize> = tab.support[s].iter().copied().filter(|a| k.contains(a)).collect();
        if support.is_empty() {
            continue;
        }
        let mut terms = Vec::new();
        for (ri, &a) in support.iter().enumerate() {
            for (ci, &b) in support.iter().enumerate().skip(ri) {
                for l in 0..=cfg.max_class(a, b) {
                    let Some(&v) = index.get(&PairVariable::new(a, b, l)) else { continue };
                    let rel = RelationId::new(a, b, l);
                    let delta = tab.get(s, rel);
                    if delta.is_zero() {
                        continue;
                    }
                    let coef = delta / Real::from_integer(cfg.m(rel), prec);
                    terms.push(Term { var: Some(v), row: ri, col: ci, coef });
                }
            }
        }
        blocks.push(PsdBlock { label: BlockLabel::Irrep(s), size: support.len(), terms });
    }
    let one = Real::one(prec);
    let row_sum = |terms: &mut Vec<Term>, a: usize, b: usize, row: usize, col: usize, w: &Real| {
        for l in 0..=cfg.max_class(a, b) {
            if let Some(&v) = index.get(&PairVariable::new(a, b, l)) {
                terms.push(Term { var: Some(v), row, col, coef: w.clone() });
            }
        }
    };
    for &a in &k {
        let mut terms = vec![Term { var: None, row: 0, col: 0, coef: one.clone() }];
        if let Some(v) = count(a) {
            terms.push(Term { var: Some(v), row: 0, col: 1, coef: one.clone() });
        }
        row_sum(&mut terms, a, a, 1, 1, &one);
        blocks.push(PsdBlock { label: BlockLabel::Fiber(a), size: 2, terms });
    }
    let two = Real::from_i64(2, prec);
    for (ai, &a) in k.iter().enumerate() {
        for &b in &k[ai + 1..] {
            let mut terms = vec![Term { var: None, row: 0, col: 0, coef: one.clone() }];
            for f in [a, b] {
                if let Some(v) = count(f) {
                    terms.push(Term { var: Some(v), row: 0, col: 1, coef: one.clone() });
                }
            }
            row_sum(&mut terms, a, a, 1, 1, &one);
            row_sum(&mut terms, a, b, 1, 1, &two);
            row_sum(&mut terms, b, b, 1, 1, &one);
            blocks.push(PsdBlock { label: BlockLabel::FiberPair(a, b), size: 2, terms });
            if opts.pair_lower_blocks {
                let mut terms = Vec::new();
                row_sum(&mut terms, a, a, 0, 0, &one);
                row_sum(&mut terms, a, b, 0, 1, &one);
                row_sum(&mut terms, b, b, 1, 1, &one);
                blocks.push(PsdBlock { label: BlockLabel::PairLower(a, b), size: 2, terms });
            }
        }
    }
    if opts.subset_blocks && k.len() >= 3 && k.len() <= 12 {
        for mask in 1u32..(1 << k.len()) {
            if mask.count_ones() < 3 || mask.count_ones() as usize == k.len() {
                continue;
            }
            let inside = |f: usize| mask >> k.iter().position(|&x| x == f).unwrap() & 1 == 1;
            let mut terms = vec![Term { var: None, row: 0, col: 0, coef: one.clone() }];
            for (v, var) in variables.iter().enumerate() {
                if !(inside(var.i) && inside(var.j)) {
                    continue;
                }
                if var.is_count() {
                    terms.push(Term { var: Some(v), row: 0, col: 1, coef: one.clone() });
                }
                let w = if var.i == var.j { one.clone() } else { two.clone() };
                terms.push(Term { var: Some(v), row: 1, col: 1, coef: w });
            }
            blocks.push(PsdBlock { label: BlockLabel::Subset(mask), size: 2, terms });
        }
    }
    if opts.product_bounds {
        for &a in &k {
            let Some(xa) = count(a) else { continue };
            for &b in &k {
                // A(b) x_a - Σ_l b_abl >= 0 as a 1x1 block
                let ub = Real::from_integer(&fiber_bounds[&b].0, prec);
                let mut terms = vec![Term { var: Some(xa), row: 0, col: 0, coef: ub }];
                row_sum(&mut terms, a, b, 0, 0, &-one.clone());
                blocks.push(PsdBlock { label: BlockLabel::ProductBound(a, b), size: 1, terms });
            }
        }
    }
    if opts.whole_code_block {
        let mut terms = vec![Term { var: None, row: 0, col: 0, coef: one.clone() }];
        for (v, var) in variables.iter().enumerate() {
            if var.is_count() {
                terms.push(Term { var: Some(v), row: 0, col: 1, coef: one.clone() });
            }
            let w = if var.i == var.j { one.clone() } else { two.clone() };
            terms.push(Term { var: Some(v), row: 1, col: 1, coef: w });
        }
        blocks.push(PsdBlock { label: BlockLabel::WholeCode, size: 2, terms });
    }
    let nvars = variables.len();
    let variables_objective = variables.iter().map(|v| i64::from(v.is_count())).collect();
    Ok(SdpProblem {
        q: cfg.q.q,
        n: cfg.n,
        d,
        fibers: k,
        variables,
        upper,
        bindings: vec![Binding::Free; nvars],
        objective: variables_objective,
        blocks,
        fiber_bounds,
        precision: prec,
    })
}

impl SdpProblem {
    pub fn variable_index(&self, v: PairVariable) -> Option<usize> {
        self.variables.iter().position(|w| *w == v)
    }

    pub fn free_variables(&self) -> Vec<usize> {
        (0..self.variables.len()).filter(|&i| self.bindings[i] == Binding::Free).collect()
    }

    pub fn is_pinned(&self, i: usize) -> bool {
        matches!(self.bindings[i], Binding::Fixed(_))
    }

    /// Objective contribution of pinned variables and affine constants.
    pub fn objective_offset(&self) -> Integer {
        let mut s = Integer::new();
        for (b, c) in self.bindings.iter().zip(&self.objective) {
            match b {
                Binding::Fixed(v) | Binding::Affine(v, _) => s += Integer::from(v * *c),
                Binding::Free => {}
            }
        }
        s
    }

    /// Maximise a single variable (sign +1) or minimise it (sign -1).
    pub fn with_objective(&self, v: PairVariable, sign: i64) -> Result<SdpProblem> {
        let idx = self.variable_index(v).ok_or_else(|| Error::Domain(format!("{v} is not a variable")))?;
        let mut out = self.clone();
        out.objective = vec![0; self.variables.len()];
        out.objective[idx] = sign;
        Ok(out)
    }

    /// Value of every block at a full assignment (one value per variable).
    pub fn evaluate_blocks(&self, values: &[Real]) -> Vec<Mat> {
        let prec = self.precision;
        self.blocks
            .iter()
            .map(|b| {
                let mut m = Mat::zeros(b.size, b.size, prec);
                for t in &b.terms {
                    let v = match t.var {
                        Some(i) => &t.coef * &values[i],
                        None => t.coef.clone(),
                    };
                    *m.get_mut(t.row, t.col) += &v;
                    if t.row != t.col {
                        *m.get_mut(t.col, t.row) += &v;
                    }
                }
                m
            })
            .collect()
    }

    /// Smallest eigenvalue over all blocks at b = 0.
    pub fn zero_assignment_margin(&self) -> Real {
        let zeros = vec![Real::zero(self.precision); self.variables.len()];
        self.evaluate_blocks(&zeros)
            .iter()
            .map(|m| if m.rows() == 0 { Real::zero(self.precision) } else { crate::linalg::min_eigenvalue(m) })
            .fold(Real::zero(self.precision), |a, b| a.min(b))
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "q": self.q, "n": self.n, "d": self.d, "fibers": self.fibers,
            "variables": self.variables.len(),
            "free_variables": self.free_variables().len(),
            "psd_blocks": self.blocks.len(),
            "fiber_bounds": self.fiber_bounds.iter().map(|(k, (b, s))| json!({"k": k, "bound": b.to_string(), "source": s})).collect::<Vec<_>>(),
        })
    }
}

/// Pin variables to exact values. Pinning a count b_ii0 to zero also pins
/// every variable touching fiber i (no codeword of that dimension exists).
pub fn fix_variables(p: &SdpProblem, assignments: &BTreeMap<PairVariable, Integer>) -> Result<SdpProblem> {
    let mut out = p.clone();
    for (v, val) in assignments {
        let Some(idx) = p.variable_index(*v) else {
            if is_zeroed(v.i, v.j, v.l, p.d) && *val == 0 {
                continue;
            }
            return Err(Error::Domain(format!("{v} is not a variable of this problem")));
        };
        if *val < 0 || *val > p.upper[idx] {
            return Err(Error::Domain(format!("{v} = {val} lies outside [0, {}]", p.upper[idx])));
        }
        match &out.bindings[idx] {
            Binding::Fixed(old) if old != val => {
                return Err(Error::Domain(format!("{v} pinned to both {old} and {val}")));
            }
            Binding::Affine(..) => return Err(Error::Domain(format!("{v} is already determined by other variables"))),
            _ => {}
        }
        out.bindings[idx] = Binding::Fixed(val.clone());
    }
    let empty: Vec<usize> = out
        .variables
        .iter()
        .zip(&out.bindings)
        .filter(|(v, b)| v.is_count() && matches!(b, Binding::Fixed(x) if *x == 0))
        .map(|(v, _)| v.i)
        .collect();
    for (v, b) in out.variables.iter().zip(out.bindings.iter_mut()) {
        if empty.contains(&v.i) || empty.contains(&v.j) {
            if let Binding::Fixed(x) = b {
                if *x != 0 {
                    return Err(Error::Domain(format!("{v} = {x} but fiber has no codewords")));
                }
            }
            *b = Binding::Fixed(Integer::new());
        }
    }
    Ok(out)
}

/// Impose Σ_l b_ijl = x_i x_j for every fiber pair whose counts are pinned,
/// by expressing the last free variable of the pair through the others.
/// Pairs without free variables must already satisfy the identity.
pub fn fix_pair_totals(p: &SdpProblem) -> Result<SdpProblem> {
    let mut out = p.clone();
    let count = |a: usize| -> Option<Integer> {
        let i = p.variable_index(PairVariable::new(a, a, 0))?;
        match &p.bindings[i] {
            Binding::Fixed(v) => Some(v.clone()),
            _ => None,
        }
    };
    for (ai, &a) in p.fibers.iter().enumerate() {
        for &b in &p.fibers[ai..] {
            let (Some(xa), Some(xb)) = (count(a), count(b)) else { continue };
            let total = Integer::from(&xa * &xb);
            let members: Vec<usize> =
                (0..p.variables.len()).filter(|&i| p.variables[i].i == a && p.variables[i].j == b).collect();
            let mut rest = total.clone();
            let mut free = Vec::new();
            for &i in &members {
                match &out.bindings[i] {
                    Binding::Fixed(v) => rest -= v,
                    Binding::Free => free.push(i),
                    Binding::Affine(..) => return Err(Error::Domain("pair totals already imposed".into())),
                }
            }
            match free.split_last() {
                None => {
                    if rest != 0 {
                        return Err(Error::Domain(format!("pinned counts between fibers {a} and {b} do not sum to {total}")));
                    }
                }
                Some((&last, others)) => {
                    if others.is_empty() {
                        if rest < 0 || rest > p.upper[last] {
                            return Err(Error::Domain(format!(
                                "{} would be {rest}, outside [0, {}]",
                                p.variables[last], p.upper[last]
                            )));
                        }
                        out.bindings[last] = Binding::Fixed(rest);
                    } else {
                        out.bindings[last] = Binding::Affine(rest, others.iter().map(|&i| (i, Integer::from(-1))).collect());
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Pin the dimension distribution: counts not listed are pinned to zero.
pub fn fix_distribution(p: &SdpProblem, counts: &BTreeMap<usize, Integer>) -> Result<SdpProblem> {
    let mut a = BTreeMap::new();
    for &f in &p.fibers {
        a.insert(PairVariable::new(f, f, 0), counts.get(&f).cloned().unwrap_or_default());
    }
    fix_variables(p, &a)
}

/// Pin the distribution and the pair totals that follow from it.
pub fn fix_distribution_exact(p: &SdpProblem, counts: &BTreeMap<usize, Integer>) -> Result<SdpProblem> {
    fix_pair_totals(&fix_distribution(p, counts)?)
}

/// Map from solver variables to problem variables after lowering.
#[derive(Clone, Debug)]
pub struct Lowered {
    pub data: SdpData,
    /// data variable -> problem variable
    pub var_map: Vec<usize>,
    pub offset: Integer,
    pub labels: Vec<String>,
    /// A block without free variables that is not PSD (or a negative scalar
    /// row): the problem is infeasible as posed.
    pub constant_violation: Option<String>,
}

/// Lower to block form: pinned values go into F_0, affine bindings are
/// substituted, rows that vanish identically are dropped, blocks without
/// free variables are checked directly, box rows and scalar blocks form one
/// diagonal block, and every dense block is rescaled by a diagonal
/// congruence to unit-order entries.
pub fn lower(p: &SdpProblem) -> Lowered {
    let prec = p.precision;
    let free = p.free_variables();
    let mut pos = vec![usize::MAX; p.variables.len()];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let one = Real::one(prec);
    let magnitude: Vec<Real> = p.upper.iter().map(|u| Real::from_integer(u, prec).max(one.clone())).collect();
    // every problem variable as constant + Σ coef x_free
    let expr: Vec<(Real, Vec<(usize, Real)>)> = p
        .bindings
        .iter()
        .enumerate()
        .map(|(i, b)| match b {
            Binding::Free => (Real::zero(prec), vec![(pos[i], one.clone())]),
            Binding::Fixed(v) => (Real::from_integer(v, prec), Vec::new()),
            Binding::Affine(c, l) => {
                (Real::from_integer(c, prec), l.iter().map(|(j, a)| (pos[*j], Real::from_integer(a, prec))).collect())
            }
        })
        .collect();
    let tol = Real::pow2(-(prec as i32) / 2, prec);
    let mut violation = None;
    let mut blocks = Vec::new();
    let mut constraints: Vec<Vec<Entry>> = vec![Vec::new(); free.len() + 1];
    let mut labels = Vec::new();
    let mut diag_rows: Vec<(Real, Vec<(usize, Real)>)> = Vec::new();
    for blk in &p.blocks {
        let mut consts: BTreeMap<(usize, usize), Real> = BTreeMap::new();
        let mut lin: BTreeMap<(usize, usize, usize), Real> = BTreeMap::new();
        for t in &blk.terms {
            let (c, l) = match t.var {
                Some(i) => (&t.coef * &expr[i].0, expr[i].1.iter().map(|(k, a)| (*k, &t.coef * a)).collect()),
                None => (t.coef.clone(), Vec::new()),
            };
            *consts.entry((t.row, t.col)).or_insert_with(|| Real::zero(prec)) += &c;
            for (k, a) in l {
                *lin.entry((k, t.row, t.col)).or_insert_with(|| Real::zero(prec)) += &a;
            }
        }
        consts.retain(|_, v| !v.is_zero());
        lin.retain(|_, v| !v.is_zero());
        let mut live: BTreeSet<usize> = BTreeSet::new();
        for &(r, c) in consts.keys() {
            live.insert(r);
            live.insert(c);
        }
        for &(_, r, c) in lin.keys() {
            live.insert(r);
            live.insert(c);
        }
        if live.is_empty() {
            continue;
        }
        let live: Vec<usize> = live.into_iter().collect();
        let renum = |r: usize| live.iter().position(|&x| x == r).unwrap();
        if lin.is_empty() {
            let mut m = Mat::zeros(live.len(), live.len(), prec);
            let mut scale = Real::zero(prec);
            for (&(r, c), v) in &consts {
                scale = scale.max(v.abs());
                m.set(renum(r), renum(c), v.clone());
                m.set(renum(c), renum(r), v.clone());
            }
            let lam = crate::linalg::min_eigenvalue(&m);
            if lam < -(tol.clone() * scale) && violation.is_none() {
                violation = Some(format!("{:?} has smallest eigenvalue {}", blk.label, lam.to_decimal(8)));
            }
            continue;
        }
        if live.len() == 1 {
            let c = consts.get(&(live[0], live[0])).cloned().unwrap_or_else(|| Real::zero(prec));
            let l: Vec<(usize, Real)> = lin.into_iter().map(|((k, _, _), v)| (k, v)).collect();
            diag_rows.push((c, l));
            continue;
        }
        let mut rowmax = vec![Real::zero(prec); live.len()];
        for (&(r, c), v) in &consts {
            let a = v.abs();
            for x in [renum(r), renum(c)] {
                rowmax[x] = rowmax[x].clone().max(a.clone());
            }
        }
        for (&(k, r, c), v) in &lin {
            let a = v.abs() * &magnitude[free[k]];
            for x in [renum(r), renum(c)] {
                rowmax[x] = rowmax[x].clone().max(a.clone());
            }
        }
        let scale: Vec<Real> =
            rowmax.iter().map(|m| if m.is_zero() { one.clone() } else { m.sqrt().recip() }).collect();
        let b = blocks.len();
        blocks.push(BlockSpec { size: live.len(), diagonal: false });
        labels.push(format!("{:?}", blk.label));
        for ((r, c), v) in consts {
            let (r, c) = (renum(r), renum(c));
            let (r, c) = (r.min(c), r.max(c));
            constraints[0].push(Entry { block: b, row: r, col: c, value: -(v * &scale[r] * &scale[c]) });
        }
        for ((k, r, c), v) in lin {
            let (r, c) = (renum(r), renum(c));
            let (r, c) = (r.min(c), r.max(c));
            constraints[k + 1].push(Entry { block: b, row: r, col: c, value: v * &scale[r] * &scale[c] });
        }
    }
    // affine variables keep their box: 0 <= expr <= U
    for (i, b) in p.bindings.iter().enumerate() {
        if let Binding::Affine(..) = b {
            let (c, l) = &expr[i];
            diag_rows.push((c.clone(), l.clone()));
            let u = Real::from_integer(&p.upper[i], prec);
            diag_rows.push((u - c, l.iter().map(|(k, a)| (*k, -a.clone())).collect()));
        }
    }
    // box rows x >= 0 and U - x >= 0 scaled by 1/U, then the scalar rows
    let b = blocks.len();
    for (k, &i) in free.iter().enumerate() {
        let u = &magnitude[i];
        let inv = u.recip();
        constraints[k + 1].push(Entry { block: b, row: 2 * k, col: 2 * k, value: inv.clone() });
        constraints[k + 1].push(Entry { block: b, row: 2 * k + 1, col: 2 * k + 1, value: -inv.clone() });
        let ub = Real::from_integer(&p.upper[i], prec) * &inv;
        constraints[0].push(Entry { block: b, row: 2 * k + 1, col: 2 * k + 1, value: -ub });
    }
    let mut row = 2 * free.len();
    for (c, l) in diag_rows {
        let l: Vec<(usize, Real)> = l.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        if l.is_empty() {
            if c.is_negative() && violation.is_none() {
                violation = Some(format!("scalar constraint reduces to {} >= 0", c.to_decimal(8)));
            }
            continue;
        }
        let mut m = c.abs();
        for (k, v) in &l {
            m = m.max(v.abs() * &magnitude[free[*k]]);
        }
        let inv = m.recip();
        if !c.is_zero() {
            constraints[0].push(Entry { block: b, row, col: row, value: -(c * &inv) });
        }
        for (k, v) in l {
            constraints[k + 1].push(Entry { block: b, row, col: row, value: v * &inv });
        }
        row += 1;
    }
    if row > 0 {
        blocks.push(BlockSpec { size: row, diagonal: true });
        labels.push("Diagonal".into());
    }
    let mut objective = vec![Real::zero(prec); free.len()];
    let mut offset = Integer::new();
    for (i, c) in p.objective.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let cr = Real::from_i64(*c, prec);
        for (k, a) in &expr[i].1 {
            objective[*k] += &cr * a;
        }
        match &p.bindings[i] {
            Binding::Fixed(v) | Binding::Affine(v, _) => offset += Integer::from(v * *c),
            Binding::Free => {}
        }
    }
    let var_scale = free.iter().map(|&i| magnitude[i].clone()).collect();
    Lowered {
        data: SdpData { blocks, objective, constraints, var_scale },
        var_map: free,
        offset,
        labels,
        constant_violation: violation,
    }
}

pub fn export_sdpa(p: &SdpProblem, path: impl AsRef<Path>) -> Result<()> {
    crate::sdpa::write_sdpa(&lower(p).data, path)
}

/// Read the result log of an external solver run on the `export_sdpa` file
/// of `p` and check that it matches the problem's shape.
pub fn solve_via_export(p: &SdpProblem, external_log: impl AsRef<Path>, certified: bool) -> Result<Solution> {
    let sol = crate::sdpa::read_log(external_log, p.precision, certified)?;
    check_external(p, sol)
}

fn check_external(p: &SdpProblem, sol: Solution) -> Result<Solution> {
    let data = lower(p).data;
    if !sol.x.is_empty() && sol.x.len() != data.num_vars() {
        return Err(Error::Structural(format!("log has {} variables, problem has {}", sol.x.len(), data.num_vars())));
    }
    if let Some(y) = &sol.y {
        if y.len() != data.blocks.len() || y.iter().zip(&data.blocks).any(|(b, s)| b.size() != s.size) {
            return Err(Error::Structural("log yMat does not match the problem's block structure".into()));
        }
    }
    Ok(sol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    Fast,
    Certified,
}

impl std::str::FromStr for BoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(BoundMode::Fast),
            "certified" => Ok(BoundMode::Certified),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundResult {
    pub status: SolveStatus,
    pub mode: BoundMode,
    /// Objectives including pinned contributions.
    pub primal_objective: Real,
    pub dual_objective: Real,
    /// Upper bound on the optimum used for the floor.
    pub bound_value: Option<Real>,
    /// Σ_i U_i |F_i•Y - c_i| over the box.
    pub residual_term: Real,
    /// Σ_b max(0, -λ_min(Y_b)) tr-bound(S_b).
    pub eigen_term: Real,
    pub rounding_term: Real,
    pub bound: Option<Integer>,
    pub iterations: usize,
    pub note: String,
}

impl BoundResult {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "status": self.status.to_string(),
            "mode": self.mode,
            "bound": self.bound.as_ref().map(|b| b.to_string()),
            "primal_objective": self.primal_objective.to_decimal(40),
            "dual_objective": self.dual_objective.to_decimal(40),
            "bound_value": self.bound_value.as_ref().map(|v| v.to_decimal(40)),
            "residual_term": self.residual_term.to_decimal(6),
            "eigen_term": self.eigen_term.to_decimal(6),
            "rounding_term": self.rounding_term.to_decimal(6),
            "iterations": self.iterations,
            "note": self.note,
        })
    }
}

/// Turn a solution of `lower(p)` into an integer bound.
pub fn extract_bound(sol: &Solution, p: &SdpProblem, mode: BoundMode) -> Result<BoundResult> {
    let prec = p.precision;
    let low = lower(p);
    let offset = Real::from_integer(&low.offset, prec);
    let zero = Real::zero(prec);
    let mut res = BoundResult {
        status: sol.status,
        mode,
        primal_objective: &sol.primal_objective + &offset,
        dual_objective: &sol.dual_objective + &offset,
        bound_value: None,
        residual_term: zero.clone(),
        eigen_term: zero.clone(),
        rounding_term: zero.clone(),
        bound: None,
        iterations: sol.iterations,
        note: sol.note.clone(),
    };
    if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::NearOptimal) {
        return Ok(res);
    }
    match mode {
        BoundMode::Fast => {
            let v = &res.primal_objective + sol.gap().abs();
            res.bound = Some(v.floor());
            res.bound_value = Some(v);
        }
        BoundMode::Certified => {
            let Some(y) = &sol.y else {
                return Err(Error::Numerical("certified mode needs the dual matrix".into()));
            };
            let data = &low.data;
            if y.len() != data.blocks.len() || y.iter().zip(&data.blocks).any(|(b, s)| b.size() != s.size) {
                return Err(Error::Structural("dual matrix does not match the problem's block structure".into()));
            }
            let wide = prec * 2;
            let w = |r: &Real| r.with_prec(wide);
            let yw: Vec<solver::BlockMat> = y.iter().map(|b| widen_block(b, wide)).collect();
            let mut dual = -dot_wide(&data.constraints[0], &yw, wide);
            let mut residual = Real::zero(wide);
            for (k, &i) in low.var_map.iter().enumerate() {
                let r = dot_wide(&data.constraints[k + 1], &yw, wide) + w(&data.objective[k]);
                // b.x = -F0•Y + Σ x_k r_k - S•Y and x_k in [0, U]
                let u = Real::from_integer(&p.upper[i], wide);
                if r.is_positive() {
                    residual += r * u;
                }
            }
            let bounds: Vec<(Real, Real)> = low
                .var_map
                .iter()
                .map(|&i| (Real::zero(prec), Real::from_integer(&p.upper[i], prec)))
                .collect();
            let mut eig = Real::zero(wide);
            for (b, yb) in yw.iter().enumerate() {
                let lam = yb.min_eigenvalue();
                if lam.is_negative() {
                    eig += lam.abs() * solver::trace_bound(data, b, &bounds).with_prec(wide);
                }
            }
            let mag = dual.abs().max(Real::one(wide));
            let rounding = mag * Real::pow2(-(prec as i32) + 40, wide);
            dual += &residual;
            dual += &eig;
            dual += &rounding;
            let v = dual + offset.with_prec(wide);
            res.residual_term = residual;
            res.eigen_term = eig;
            res.rounding_term = rounding;
            res.bound = Some(v.floor());
            res.bound_value = Some(v);
        }
    }
    Ok(res)
}

fn widen_block(b: &solver::BlockMat, prec: u32) -> solver::BlockMat {
    match b {
        solver::BlockMat::Dense(m) => solver::BlockMat::Dense(m.with_prec(prec)),
        solver::BlockMat::Diag(d) => solver::BlockMat::Diag(d.iter().map(|x| x.with_prec(prec)).collect()),
    }
}

fn dot_wide(entries: &[Entry], y: &[solver::BlockMat], prec: u32) -> Real {
    let mut acc = Real::zero(prec);
    for e in entries {
        let v = y[e.block].get(e.row, e.col).with_prec(prec) * e.value.with_prec(prec);
        if e.row == e.col {
            acc += v;
        } else {
            acc += v * 2;
        }
    }
    acc
}

/// Solve and extract in one step.
pub fn solve_bound(p: &SdpProblem, settings: &SolverSettings, mode: BoundMode) -> Result<(Solution, BoundResult)> {
    let low = lower(p);
    if let Some(why) = &low.constant_violation {
        let zero = Real::zero(p.precision);
        let sol = Solution {
            status: SolveStatus::Infeasible,
            primal_objective: zero.clone(),
            dual_objective: zero.clone(),
            x: Vec::new(),
            y: None,
            primal_residual: zero.clone(),
            dual_residual: zero,
            iterations: 0,
            provenance: solver::Provenance::Internal,
            note: why.clone(),
        };
        let res = extract_bound(&sol, p, mode)?;
        return Ok((sol, res));
    }
    let sol = solver::solve(&low.data, settings)?;
    let res = extract_bound(&sol, p, mode)?;
    Ok((sol, res))
}

#[derive(Clone, Debug)]
pub enum PinOutcome {
    Feasible { margin: Real },
    Infeasible { margin: Real },
    Undecided,
}

/// Decide feasibility of a pinned problem.
pub fn pinned_feasibility(p: &SdpProblem, settings: &SolverSettings) -> Result<PinOutcome> {
    let low = lower(p);
    if low.constant_violation.is_some() {
        return Ok(PinOutcome::Infeasible { margin: Real::zero(p.precision) });
    }
    if low.data.num_vars() == 0 {
        let m = p.evaluate_blocks(&assignment(p, &[]));
        let lam = m
            .iter()
            .filter(|m| m.rows() > 0)
            .map(crate::linalg::min_eigenvalue)
            .fold(Real::one(p.precision), |a, b| a.min(b));
        let tol = Real::from_f64(settings.feas_tol, p.precision);
        return Ok(if lam >= -tol { PinOutcome::Feasible { margin: lam } } else { PinOutcome::Infeasible { margin: -lam } });
    }
    Ok(match solver::check_feasibility(&low.data, settings)? {
        Feasibility::Feasible { margin, .. } => PinOutcome::Feasible { margin },
        Feasibility::Infeasible { margin, .. } => PinOutcome::Infeasible { margin },
        Feasibility::Undecided { .. } => PinOutcome::Undecided,
    })
}

/// Range of a variable over the feasible set, from two solves.
pub fn variable_range(p: &SdpProblem, v: PairVariable, settings: &SolverSettings) -> Result<Option<(Real, Real)>> {
    let (_, hi) = solve_bound(&p.with_objective(v, 1)?, settings, BoundMode::Fast)?;
    let (_, lo) = solve_bound(&p.with_objective(v, -1)?, settings, BoundMode::Fast)?;
    match (hi.bound_value, lo.bound_value) {
        (Some(h), Some(l)) => Ok(Some((-l, h))),
        _ => Ok(None),
    }
}

/// Integer cells (a, b) of two variables for which the pinned problem
/// (with pair totals imposed) is not shown infeasible, in lexicographic order.
/// `p` should have its distribution pinned but pair totals not yet imposed.
pub fn feasible_cells(
    p: &SdpProblem,
    a: PairVariable,
    b: PairVariable,
    settings: &SolverSettings,
) -> Result<Vec<(Integer, Integer, PinOutcome)>> {
    use rayon::prelude::*;
    let exact = fix_pair_totals(p)?;
    let (Some((alo, ahi)), Some((blo, bhi))) = (variable_range(&exact, a, settings)?, variable_range(&exact, b, settings)?)
    else {
        return Ok(Vec::new());
    };
    let (alo, ahi) = (alo.ceil(), ahi.floor());
    let (blo, bhi) = (blo.ceil(), bhi.floor());
    let mut grid = Vec::new();
    let mut x = alo;
    while x <= ahi {
        let mut y = blo.clone();
        while y <= bhi {
            grid.push((x.clone(), y.clone()));
            y += 1;
        }
        x += 1;
    }
    let results: Vec<Result<Option<(Integer, Integer, PinOutcome)>>> = grid
        .into_par_iter()
        .map(|(x, y)| {
            let cell = BTreeMap::from([(a, x.clone()), (b, y.clone())]);
            let pinned = match fix_variables(p, &cell).and_then(|q| fix_pair_totals(&q)) {
                Ok(q) => q,
                Err(Error::Domain(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            Ok(match pinned_feasibility(&pinned, settings)? {
                PinOutcome::Infeasible { .. } => None,
                o => Some((x, y, o)),
            })
        })
        .collect();
    let mut out = Vec::new();
    for r in results {
        if let Some(c) = r? {
            out.push(c);
        }
    }
    Ok(out)
}

/// Full assignment from values of the free variables.
pub fn assignment(p: &SdpProblem, free_values: &[Real]) -> Vec<Real> {
    let prec = p.precision;
    let free = p.free_variables();
    let mut out = vec![Real::zero(prec); p.variables.len()];
    for (k, &i) in free.iter().enumerate() {
        if let Some(v) = free_values.get(k) {
            out[i] = v.clone();
        }
    }
    for (i, b) in p.bindings.iter().enumerate() {
        match b {
            Binding::Fixed(v) => out[i] = Real::from_integer(v, prec),
            Binding::Affine(c, l) => {
                let mut v = Real::from_integer(c, prec);
                for (j, a) in l {
                    v += &out[*j] * Real::from_integer(a, prec);
                }
                out[i] = v;
            }
            Binding::Free => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroing_forms_agree() {
        for n in 0..=16 {
            for d in 1..=2 * n + 2 {
                for i in 0..=n {
                    for j in i..=n {
                        for l in 0..=i.min(n - j) {
                            assert_eq!(is_zeroed(i, j, l, d), is_zeroed_min_form(i, j, l, d), "{i} {j} {l} {d}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn printed_dimension_bounds() {
        let t = DimensionBoundTable::new();
        let q2 = QParams::new(2).unwrap();
        assert_eq!(dimension_bound(q2, 7, 4, 2, &t), 41);
        assert_eq!(dimension_bound(q2, 7, 4, 3, &t), 381);
        assert_eq!(dimension_bound(q2, 7, 4, 4, &t), 381);
        assert_eq!(dimension_bound(q2, 9, 4, 2, &t), 169);
        assert_eq!(dimension_bound(q2, 7, 4, 0, &t), 1);
        assert_eq!(dimension_bound(q2, 7, 6, 2, &t), 1);
    }

    #[test]
    fn user_file_overrides() {
        let t = DimensionBoundTable::from_json_str(
            r#"[{"q":2,"n":7,"d":3,"k":3,"bound":333,"source-note":"test"}]"#,
        )
        .unwrap();
        let q2 = QParams::new(2).unwrap();
        let (b, s) = dimension_bound_with_source(q2, 7, 4, 4, &t);
        assert_eq!(b, 333);
        assert_eq!(s, BoundSource::UserFile);
    }
}
