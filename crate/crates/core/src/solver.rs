//! Primal-dual interior-point solver for block-diagonal SDPs in the form
//!
//!   maximize  b.x   subject to  X = Σ_i x_i F_i - F_0 ⪰ 0,
//!
//! with dual  minimize -F_0•Y  subject to  F_i•Y = -b_i, Y ⪰ 0.
//! (This is SDPA's primal with c = -b.)
//!
//! Direction: HKM, X dY + dX Y = σμI - XY with dY symmetrised, in Mehrotra
//! predictor-corrector form. Infeasible start from multiples of the identity.
//! Every arithmetic operation runs at the configured MPFR precision with round
//! to nearest; there is no threading inside a solve, so runs are reproducible.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, lower_inverse, min_eigenvalue, spd_inverse, Mat};
use crate::real::{default_precision, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockSpec {
    pub size: usize,
    pub diagonal: bool,
}

/// One upper-triangle coefficient (row <= col, zero based).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: Real,
}

#[derive(Clone, Debug)]
pub struct SdpData {
    pub blocks: Vec<BlockSpec>,
    /// Maximisation objective b.
    pub objective: Vec<Real>,
    /// constraints[0] is F_0, constraints[i] is F_i for variable i-1.
    pub constraints: Vec<Vec<Entry>>,
    /// Typical magnitude of each variable; the solver works in x / scale.
    pub var_scale: Vec<Real>,
}

impl SdpData {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn precision(&self) -> u32 {
        self.objective
            .first()
            .map(|r| r.prec())
            .or_else(|| self.constraints.iter().flatten().next().map(|e| e.value.prec()))
            .unwrap_or_else(default_precision)
    }

    /// Σ x_i F_i - F_0 as dense blocks.
    pub fn slack(&self, x: &[Real]) -> Vec<BlockMat> {
        let prec = self.precision();
        let mut out: Vec<BlockMat> = self.blocks.iter().map(|b| BlockMat::zeros(b, prec)).collect();
        for e in &self.constraints[0] {
            out[e.block].add_sym(e.row, e.col, &(-&e.value));
        }
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for e in &self.constraints[i + 1] {
                out[e.block].add_sym(e.row, e.col, &(&e.value * xi));
            }
        }
        out
    }

    /// Smallest eigenvalue of each block of Σ x_i F_i - F_0.
    pub fn slack_min_eigenvalues(&self, x: &[Real]) -> Vec<Real> {
        self.slack(x).iter().map(|b| b.min_eigenvalue()).collect()
    }

    /// F_idx • Y.
    pub fn dot(&self, idx: usize, y: &[BlockMat]) -> Real {
        dot_entries(&self.constraints[idx], y, self.precision())
    }

    /// Multiply every coefficient of one block (all F_i) by `factor`.
    pub fn scale_block(&mut self, block: usize, factor: &Real) {
        for list in self.constraints.iter_mut() {
            for e in list.iter_mut().filter(|e| e.block == block) {
                e.value = &e.value * factor;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.len() != self.objective.len() + 1 || self.var_scale.len() != self.objective.len() {
            return Err(Error::Structural("objective, scale and constraint lists disagree in length".into()));
        }
        for e in self.constraints.iter().flatten() {
            let Some(b) = self.blocks.get(e.block) else {
                return Err(Error::Structural(format!("entry refers to missing block {}", e.block)));
            };
            if e.row > e.col || e.col >= b.size || (b.diagonal && e.row != e.col) {
                return Err(Error::Structural(format!("bad entry ({}, {}) in block {}", e.row, e.col, e.block)));
            }
        }
        Ok(())
    }
}

fn dot_entries(entries: &[Entry], y: &[BlockMat], prec: u32) -> Real {
    let mut acc = Real::zero(prec);
    for e in entries {
        let v = y[e.block].get(e.row, e.col);
        if e.row == e.col {
            acc += &e.value * v;
        } else {
            acc += &e.value * v * 2;
        }
    }
    acc
}

/// A dense symmetric block or a diagonal block.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockMat {
    Dense(Mat),
    Diag(Vec<Real>),
}

impl BlockMat {
    pub fn zeros(spec: &BlockSpec, prec: u32) -> BlockMat {
        if spec.diagonal {
            BlockMat::Diag(vec![Real::zero(prec); spec.size])
        } else {
            BlockMat::Dense(Mat::zeros(spec.size, spec.size, prec))
        }
    }

    pub fn identity(spec: &BlockSpec, v: &Real) -> BlockMat {
        if spec.diagonal {
            BlockMat::Diag(vec![v.clone(); spec.size])
        } else {
            BlockMat::Dense(Mat::scaled_identity(spec.size, v))
        }
    }

    pub fn size(&self) -> usize {
        match self {
            BlockMat::Dense(m) => m.rows(),
            BlockMat::Diag(d) => d.len(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Real {
        match self {
            BlockMat::Dense(m) => m.get(r, c).clone(),
            BlockMat::Diag(d) => {
                if r == c {
                    d[r].clone()
                } else {
                    Real::zero(d[r].prec())
                }
            }
        }
    }

    /// Add v at (r,c) and (c,r).
    pub fn add_sym(&mut self, r: usize, c: usize, v: &Real) {
        match self {
            BlockMat::Dense(m) => {
                *m.get_mut(r, c) += v;
                if r != c {
                    *m.get_mut(c, r) += v;
                }
            }
            BlockMat::Diag(d) => d[r] += v,
        }
    }

    pub fn dot(&self, other: &BlockMat) -> Real {
        match (self, other) {
            (BlockMat::Dense(a), BlockMat::Dense(b)) => a.dot(b),
            (BlockMat::Diag(a), BlockMat::Diag(b)) => {
                let mut acc = Real::zero(a.first().map_or(64, |x| x.prec()));
                for (x, y) in a.iter().zip(b) {
                    acc += x * y;
                }
                acc
            }
            _ => panic!("block kinds differ"),
        }
    }

    pub fn trace(&self) -> Real {
        match self {
            BlockMat::Dense(m) => m.trace(),
            BlockMat::Diag(d) => {
                let mut acc = Real::zero(d.first().map_or(64, |x| x.prec()));
                for x in d {
                    acc += x;
                }
                acc
            }
        }
    }

    pub fn axpy(&mut self, alpha: &Real, other: &BlockMat) {
        match (self, other) {
            (BlockMat::Dense(a), BlockMat::Dense(b)) => a.add_scaled(b, alpha),
            (BlockMat::Diag(a), BlockMat::Diag(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y * alpha;
                }
            }
            _ => panic!("block kinds differ"),
        }
    }

    pub fn max_abs(&self) -> Real {
        match self {
            BlockMat::Dense(m) => m.max_abs(),
            BlockMat::Diag(d) => d.iter().fold(Real::zero(d.first().map_or(64, |x| x.prec())), |m, x| m.max(x.abs())),
        }
    }

    pub fn min_eigenvalue(&self) -> Real {
        match self {
            BlockMat::Dense(m) => {
                if m.rows() == 0 {
                    Real::zero(64)
                } else {
                    min_eigenvalue(m)
                }
            }
            BlockMat::Diag(d) => d.iter().cloned().reduce(|a, b| a.min(b)).unwrap_or_else(|| Real::zero(64)),
        }
    }

    pub fn as_dense(&self) -> Mat {
        match self {
            BlockMat::Dense(m) => m.clone(),
            BlockMat::Diag(d) => {
                let prec = d.first().map_or(64, |x| x.prec());
                Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { Real::zero(prec) })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSettings {
    pub precision: u32,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iters: usize,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
    /// Initial X = lambda_primal I, Y = lambda_dual I (in scaled units).
    pub lambda_primal: f64,
    pub lambda_dual: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            precision: default_precision(),
            gap_tol: 1e-25,
            feas_tol: 1e-25,
            max_iters: 200,
            step_fraction: 0.9,
            lambda_primal: 10.0,
            lambda_dual: 10.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.precision < 128 {
            return Err(Error::Config(format!("precision {} below the 128-bit minimum", self.precision)));
        }
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::Config("step fraction must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    Stalled,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Stalled => "stalled",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Internal,
    External { digits: usize },
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    /// b.x at the returned primal point.
    pub primal_objective: Real,
    /// -F_0•Y at the returned dual point (an upper bound when Y is feasible).
    pub dual_objective: Real,
    pub x: Vec<Real>,
    pub y: Option<Vec<BlockMat>>,
    pub primal_residual: Real,
    pub dual_residual: Real,
    pub iterations: usize,
    pub provenance: Provenance,
    pub note: String,
}

impl Solution {
    pub fn gap(&self) -> Real {
        &self.dual_objective - &self.primal_objective
    }

    pub fn to_json(&self) -> serde_json::Value {
        let digits = self.primal_objective.decimal_digits().max(10);
        json!({
            "status": self.status.to_string(),
            "primal_objective": self.primal_objective.to_decimal(digits),
            "dual_objective": self.dual_objective.to_decimal(digits),
            "gap": self.gap().to_decimal(12),
            "primal_residual": self.primal_residual.to_decimal(6),
            "dual_residual": self.dual_residual.to_decimal(6),
            "iterations": self.iterations,
            "provenance": self.provenance,
            "note": self.note,
        })
    }
}

/// Working copy with variables divided by their scale.
struct Scaled {
    blocks: Vec<BlockSpec>,
    c: Vec<Real>,
    f0: Vec<Entry>,
    fi: Vec<Vec<Entry>>,
    /// variables touching each block
    block_vars: Vec<Vec<usize>>,
    scale: Vec<Real>,
    prec: u32,
}

impl Scaled {
    fn new(data: &SdpData, prec: u32) -> Scaled {
        let scale: Vec<Real> = data.var_scale.iter().map(|s| s.with_prec(prec)).collect();
        let c = data.objective.iter().zip(&scale).map(|(b, s)| -(b.with_prec(prec) * s)).collect();
        let conv = |e: &Entry, s: &Real| Entry { value: e.value.with_prec(prec) * s, ..e.clone() };
        let one = Real::one(prec);
        let f0 = data.constraints[0].iter().map(|e| conv(e, &one)).collect();
        let fi: Vec<Vec<Entry>> =
            data.constraints[1..].iter().zip(&scale).map(|(l, s)| l.iter().map(|e| conv(e, s)).collect()).collect();
        let mut block_vars = vec![Vec::new(); data.blocks.len()];
        for (i, l) in fi.iter().enumerate() {
            for e in l {
                if block_vars[e.block].last() != Some(&i) {
                    block_vars[e.block].push(i);
                }
            }
        }
        for v in block_vars.iter_mut() {
            v.dedup();
        }
        Scaled { blocks: data.blocks.clone(), c, f0, fi, block_vars, scale, prec }
    }

    fn m(&self) -> usize {
        self.c.len()
    }

    fn combine(&self, x: &[Real]) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(|b| BlockMat::zeros(b, self.prec)).collect();
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for e in &self.fi[i] {
                out[e.block].add_sym(e.row, e.col, &(&e.value * xi));
            }
        }
        out
    }

    fn f0_blocks(&self) -> Vec<BlockMat> {
        let mut out: Vec<BlockMat> = self.blocks.iter().map(|b| BlockMat::zeros(b, self.prec)).collect();
        for e in &self.f0 {
            out[e.block].add_sym(e.row, e.col, &e.value);
        }
        out
    }
}

struct Iterate {
    x: Vec<Real>,
    xm: Vec<BlockMat>,
    ym: Vec<BlockMat>,
}

fn block_inverse(b: &BlockMat) -> Option<BlockMat> {
    match b {
        BlockMat::Dense(m) => spd_inverse(m).map(BlockMat::Dense),
        BlockMat::Diag(d) => {
            if d.iter().all(|x| x.is_positive()) {
                Some(BlockMat::Diag(d.iter().map(|x| x.recip()).collect()))
            } else {
                None
            }
        }
    }
}

fn mul(a: &BlockMat, b: &BlockMat) -> BlockMat {
    match (a, b) {
        (BlockMat::Dense(x), BlockMat::Dense(y)) => BlockMat::Dense(x.mul(y)),
        (BlockMat::Diag(x), BlockMat::Diag(y)) => BlockMat::Diag(x.iter().zip(y).map(|(p, q)| p * q).collect()),
        _ => panic!("block kinds differ"),
    }
}

fn symmetrize(a: BlockMat) -> BlockMat {
    match a {
        BlockMat::Dense(m) => BlockMat::Dense(m.symmetrize()),
        d => d,
    }
}

/// Largest alpha with X + alpha dX ⪰ 0 (infinite when dX ⪰ 0).
fn max_step(x: &BlockMat, dx: &BlockMat, prec: u32) -> Option<Real> {
    match (x, dx) {
        (BlockMat::Dense(xm), BlockMat::Dense(dm)) => {
            if xm.rows() == 0 {
                return None;
            }
            let l = cholesky(xm)?;
            let li = lower_inverse(&l);
            let m = li.mul(dm).mul(&li.transpose());
            let lam = min_eigenvalue(&m);
            if lam.is_negative() {
                Some(-(Real::one(prec) / lam))
            } else {
                None
            }
        }
        (BlockMat::Diag(xd), BlockMat::Diag(dd)) => {
            let mut best: Option<Real> = None;
            for (a, b) in xd.iter().zip(dd) {
                if b.is_negative() {
                    let s = -(a / b);
                    best = Some(match best {
                        Some(v) => v.min(s),
                        None => s,
                    });
                }
            }
            best
        }
        _ => panic!("block kinds differ"),
    }
}

fn step_length(xs: &[BlockMat], dxs: &[BlockMat], fraction: &Real, prec: u32) -> Real {
    let mut alpha = Real::one(prec);
    for (x, dx) in xs.iter().zip(dxs) {
        if let Some(s) = max_step(x, dx, prec) {
            let a = s * fraction;
            if a < alpha {
                alpha = a;
            }
        }
    }
    alpha
}

struct Direction {
    dx: Vec<Real>,
    dxm: Vec<BlockMat>,
    dym: Vec<BlockMat>,
}

/// Schur complement B_ij = tr(F_i X^{-1} F_j Y).
fn schur_matrix(p: &Scaled, xinv: &[BlockMat], y: &[BlockMat]) -> Mat {
    let m = p.m();
    let prec = p.prec;
    let mut b = Mat::zeros(m, m, prec);
    for (blk, vars) in p.block_vars.iter().enumerate() {
        match (&xinv[blk], &y[blk]) {
            (BlockMat::Dense(xi), BlockMat::Dense(ym)) => {
                let n = xi.rows();
                for &j in vars {
                    // G = X^{-1} F_j Y
                    let mut fy = Mat::zeros(n, n, prec);
                    for e in p.fi[j].iter().filter(|e| e.block == blk) {
                        for c in 0..n {
                            *fy.get_mut(e.row, c) += &e.value * ym.get(e.col, c);
                            if e.row != e.col {
                                *fy.get_mut(e.col, c) += &e.value * ym.get(e.row, c);
                            }
                        }
                    }
                    let g = xi.mul(&fy);
                    for &i in vars {
                        if i > j {
                            continue;
                        }
                        let mut acc = Real::zero(prec);
                        for e in p.fi[i].iter().filter(|e| e.block == blk) {
                            acc += &e.value * g.get(e.col, e.row);
                            if e.row != e.col {
                                acc += &e.value * g.get(e.row, e.col);
                            }
                        }
                        *b.get_mut(i, j) += acc;
                    }
                }
            }
            (BlockMat::Diag(xi), BlockMat::Diag(yd)) => {
                let mut per_row: Vec<Vec<(usize, Real)>> = vec![Vec::new(); xi.len()];
                for &i in vars {
                    for e in p.fi[i].iter().filter(|e| e.block == blk) {
                        per_row[e.row].push((i, e.value.clone()));
                    }
                }
                for (k, list) in per_row.iter().enumerate() {
                    let w = &xi[k] * &yd[k];
                    for (a, (i, vi)) in list.iter().enumerate() {
                        for (j, vj) in &list[a..] {
                            let (lo, hi) = if i <= j { (*i, *j) } else { (*j, *i) };
                            *b.get_mut(lo, hi) += vi * vj * &w;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    for i in 0..m {
        for j in 0..i {
            let v = b.get(j, i).clone();
            b.set(i, j, v);
        }
    }
    b
}

fn direction(
    p: &Scaled,
    it: &Iterate,
    xinv: &[BlockMat],
    chol_b: &Mat,
    primal_res: &[BlockMat],
    dual_res: &[Real],
    sigma_mu: &Real,
    second_order: Option<&Direction>,
) -> Direction {
    let prec = p.prec;
    // R = σμ X^{-1} - Y - X^{-1} P Y - X^{-1} dXp dYp
    let r: Vec<BlockMat> = (0..p.blocks.len())
        .map(|k| {
            let mut r = xinv[k].clone();
            match &mut r {
                BlockMat::Dense(m) => *m = m.scale(sigma_mu),
                BlockMat::Diag(d) => {
                    for x in d.iter_mut() {
                        *x = &*x * sigma_mu;
                    }
                }
            }
            r.axpy(&Real::from_i64(-1, prec), &it.ym[k]);
            let py = mul(&xinv[k], &mul(&primal_res[k], &it.ym[k]));
            r.axpy(&Real::from_i64(-1, prec), &py);
            if let Some(d) = second_order {
                let corr = mul(&xinv[k], &mul(&d.dxm[k], &d.dym[k]));
                r.axpy(&Real::from_i64(-1, prec), &corr);
            }
            symmetrize(r)
        })
        .collect();
    let rhs: Vec<Real> = (0..p.m()).map(|i| dot_entries(&p.fi[i], &r, prec) - &dual_res[i]).collect();
    let dx = cholesky_solve(chol_b, &rhs);
    let lin = p.combine(&dx);
    let dxm: Vec<BlockMat> = lin
        .iter()
        .zip(primal_res)
        .map(|(a, pr)| {
            let mut s = a.clone();
            s.axpy(&Real::one(prec), pr);
            s
        })
        .collect();
    let dym: Vec<BlockMat> = (0..p.blocks.len())
        .map(|k| {
            let mut d = r[k].clone();
            let t = mul(&xinv[k], &mul(&lin[k], &it.ym[k]));
            d.axpy(&Real::from_i64(-1, prec), &symmetrize(t));
            d
        })
        .collect();
    Direction { dx, dxm, dym }
}

struct Progress {
    iterate: Iterate,
    iterations: usize,
    converged: bool,
    near: bool,
    pobj: Real,
    dobj: Real,
    pfeas: Real,
    dfeas: Real,
    note: String,
}

fn ipm(p: &Scaled, settings: &SolverSettings) -> Progress {
    let prec = p.prec;
    let m = p.m();
    let f0 = p.f0_blocks();
    let f0_norm = f0.iter().fold(Real::zero(prec), |a, b| a.max(b.max_abs()));
    let c_norm = p.c.iter().fold(Real::zero(prec), |a, b| a.max(b.abs()));
    let lp = Real::from_f64(settings.lambda_primal, prec) * (f0_norm.clone() + Real::one(prec));
    let ld = Real::from_f64(settings.lambda_dual, prec) * (c_norm.clone() + Real::one(prec));
    let mut it = Iterate {
        x: vec![Real::zero(prec); m],
        xm: p.blocks.iter().map(|b| BlockMat::identity(b, &lp)).collect(),
        ym: p.blocks.iter().map(|b| BlockMat::identity(b, &ld)).collect(),
    };
    let dim: usize = p.blocks.iter().map(|b| b.size).sum();
    let dimr = Real::from_i64(dim as i64, prec);
    let gap_tol = Real::from_f64(settings.gap_tol, prec);
    let feas_tol = Real::from_f64(settings.feas_tol, prec);
    let frac = Real::from_f64(settings.step_fraction, prec);
    let blowup = Real::pow2(200, prec);
    let mut small_steps = 0;
    let mut last = (Real::zero(prec), Real::zero(prec), Real::zero(prec), Real::zero(prec));
    for iter in 0..=settings.max_iters {
        // residuals
        let ax = p.combine(&it.x);
        let primal_res: Vec<BlockMat> = (0..p.blocks.len())
            .map(|k| {
                let mut r = ax[k].clone();
                r.axpy(&Real::from_i64(-1, prec), &f0[k]);
                r.axpy(&Real::from_i64(-1, prec), &it.xm[k]);
                r
            })
            .collect();
        let dual_res: Vec<Real> = (0..m).map(|i| &p.c[i] - dot_entries(&p.fi[i], &it.ym, prec)).collect();
        let pobj = {
            let mut s = Real::zero(prec);
            for (c, x) in p.c.iter().zip(&it.x) {
                s += c * x;
            }
            s
        };
        let dobj = f0.iter().zip(&it.ym).fold(Real::zero(prec), |a, (f, y)| a + f.dot(y));
        let pfeas = primal_res.iter().fold(Real::zero(prec), |a, b| a.max(b.max_abs())) / (f0_norm.clone() + Real::one(prec));
        let dfeas = dual_res.iter().fold(Real::zero(prec), |a, b| a.max(b.abs())) / (c_norm.clone() + Real::one(prec));
        let gap = (&pobj - &dobj).abs() / ((pobj.abs() + dobj.abs()) / 2).max(Real::one(prec));
        last = (pobj.clone(), dobj.clone(), pfeas.clone(), dfeas.clone());
        if gap <= gap_tol && pfeas <= feas_tol && dfeas <= feas_tol {
            return Progress {
                iterate: it,
                iterations: iter,
                converged: true,
                near: true,
                pobj,
                dobj,
                pfeas,
                dfeas,
                note: String::new(),
            };
        }
        if iter == settings.max_iters {
            break;
        }
        let ynorm = it.ym.iter().fold(Real::zero(prec), |a, b| a.max(b.max_abs()));
        let xnorm = it.xm.iter().fold(Real::zero(prec), |a, b| a.max(b.max_abs()));
        if ynorm > blowup || xnorm > blowup {
            return stalled(it, iter, last, "iterates diverged");
        }
        let mu = it.xm.iter().zip(&it.ym).fold(Real::zero(prec), |a, (x, y)| a + x.dot(y)) / &dimr;
        let Some(xinv) = it.xm.iter().map(block_inverse).collect::<Option<Vec<_>>>() else {
            return stalled(it, iter, last, "primal matrix lost definiteness");
        };
        let b = schur_matrix(p, &xinv, &it.ym);
        let Some(chol_b) = cholesky(&b) else {
            return stalled(it, iter, last, "Schur complement not positive definite");
        };
        let zero = Real::zero(prec);
        let pred = direction(p, &it, &xinv, &chol_b, &primal_res, &dual_res, &zero, None);
        let one = Real::one(prec);
        let ap = step_length(&it.xm, &pred.dxm, &one, prec);
        let ad = step_length(&it.ym, &pred.dym, &one, prec);
        let mut mu_aff = Real::zero(prec);
        for k in 0..p.blocks.len() {
            let mut xa = it.xm[k].clone();
            xa.axpy(&ap, &pred.dxm[k]);
            let mut ya = it.ym[k].clone();
            ya.axpy(&ad, &pred.dym[k]);
            mu_aff += xa.dot(&ya);
        }
        mu_aff = mu_aff / &dimr;
        let ratio = (&mu_aff / &mu).max(Real::zero(prec));
        let mut sigma = &ratio * &ratio * &ratio;
        if pfeas > feas_tol || dfeas > feas_tol {
            sigma = sigma.max(Real::from_f64(0.1, prec));
        }
        let sigma = sigma.min(Real::one(prec));
        let sm = &sigma * &mu;
        let corr = direction(p, &it, &xinv, &chol_b, &primal_res, &dual_res, &sm, Some(&pred));
        let ap = step_length(&it.xm, &corr.dxm, &frac, prec);
        let ad = step_length(&it.ym, &corr.dym, &frac, prec);
        if ap < Real::from_f64(1e-12, prec) && ad < Real::from_f64(1e-12, prec) {
            small_steps += 1;
            if small_steps > 5 {
                return stalled(it, iter, last, "step lengths collapsed");
            }
        } else {
            small_steps = 0;
        }
        for (xi, d) in it.x.iter_mut().zip(&corr.dx) {
            *xi += d * &ap;
        }
        for k in 0..p.blocks.len() {
            it.xm[k].axpy(&ap, &corr.dxm[k]);
            it.ym[k].axpy(&ad, &corr.dym[k]);
        }
    }
    let loose = Real::from_f64(1e-8, prec);
    let (pobj, dobj, pfeas, dfeas) = last;
    let gap = (&pobj - &dobj).abs() / ((pobj.abs() + dobj.abs()) / 2).max(Real::one(prec));
    let near = gap <= loose && pfeas <= loose && dfeas <= loose;
    Progress {
        iterate: it,
        iterations: settings.max_iters,
        converged: false,
        near,
        pobj,
        dobj,
        pfeas,
        dfeas,
        note: "iteration limit reached".into(),
    }
}

fn stalled(it: Iterate, iter: usize, last: (Real, Real, Real, Real), why: &str) -> Progress {
    let (pobj, dobj, pfeas, dfeas) = last;
    Progress { iterate: it, iterations: iter, converged: false, near: false, pobj, dobj, pfeas, dfeas, note: why.into() }
}

fn unscale(p: &Scaled, x: &[Real]) -> Vec<Real> {
    x.iter().zip(&p.scale).map(|(v, s)| v * s).collect()
}

/// Solve to the requested tolerances. A run that fails to converge is followed
/// by a feasibility check; the status is `Infeasible` only if that check
/// produces a dual certificate.
pub fn solve(data: &SdpData, settings: &SolverSettings) -> Result<Solution> {
    settings.validate()?;
    data.validate()?;
    let prec = settings.precision;
    let p = Scaled::new(data, prec);
    if p.m() == 0 {
        let lam = data.slack_min_eigenvalues(&[]).into_iter().fold(Real::zero(prec), |a, b| a.min(b));
        let feasible = lam >= -Real::from_f64(settings.feas_tol, prec);
        return Ok(Solution {
            status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            primal_objective: Real::zero(prec),
            dual_objective: Real::zero(prec),
            x: Vec::new(),
            y: None,
            primal_residual: Real::zero(prec),
            dual_residual: Real::zero(prec),
            iterations: 0,
            provenance: Provenance::Internal,
            note: "no free variables".into(),
        });
    }
    let run = ipm(&p, settings);
    let x = unscale(&p, &run.iterate.x);
    let status = if run.converged {
        SolveStatus::Optimal
    } else if run.near {
        SolveStatus::NearOptimal
    } else {
        match check_feasibility(data, settings)? {
            Feasibility::Infeasible { .. } => SolveStatus::Infeasible,
            _ => SolveStatus::Stalled,
        }
    };
    Ok(Solution {
        status,
        primal_objective: -run.pobj,
        dual_objective: -run.dobj,
        x,
        y: Some(run.iterate.ym),
        primal_residual: run.pfeas,
        dual_residual: run.dfeas,
        iterations: run.iterations,
        provenance: Provenance::Internal,
        note: run.note,
    })
}

/// Solve several problems concurrently; each solve stays single threaded.
pub fn solve_many(jobs: &[(SdpData, SolverSettings)]) -> Vec<Result<Solution>> {
    jobs.par_iter().map(|(d, s)| solve(d, s)).collect()
}

#[derive(Clone, Debug)]
pub enum Feasibility {
    /// A point with every block of the slack at least `margin` in its
    /// smallest eigenvalue (margin may be slightly negative within tolerance).
    Feasible { x: Vec<Real>, margin: Real },
    /// Y ⪰ 0 with F_0•Y exceeding the largest possible Σ x_i F_i•Y over the
    /// variable box; `margin` is that excess.
    Infeasible { y: Vec<BlockMat>, margin: Real },
    Undecided { best: Real },
}

/// Phase one: maximise t subject to Σ x_i F_i - F_0 - t I ⪰ 0. Bounds on the
/// variables must be present in the data (the diagonal block rows), so the
/// auxiliary problem is bounded.
pub fn check_feasibility(data: &SdpData, settings: &SolverSettings) -> Result<Feasibility> {
    let prec = settings.precision;
    let m = data.num_vars();
    let mut aux = data.clone();
    aux.objective = vec![Real::zero(prec); m];
    aux.objective.push(Real::one(prec));
    aux.var_scale.push(Real::one(prec));
    let mut tcol = Vec::new();
    for (k, b) in data.blocks.iter().enumerate() {
        for r in 0..b.size {
            tcol.push(Entry { block: k, row: r, col: r, value: Real::from_i64(-1, prec) });
        }
    }
    aux.constraints.push(tcol);
    let mut s = settings.clone();
    s.max_iters = s.max_iters.max(100);
    let p = Scaled::new(&aux, prec);
    let run = ipm(&p, &s);
    let xs = unscale(&p, &run.iterate.x);
    let t = xs[m].clone();
    let x: Vec<Real> = xs[..m].to_vec();
    let tol = Real::from_f64(settings.feas_tol, prec).sqrt();
    let margin = data.slack_min_eigenvalues(&x).into_iter().reduce(|a, b| a.min(b)).unwrap_or_else(|| Real::zero(prec));
    if margin >= -tol.clone() * Real::from_f64(1e-10, prec) && (t.is_positive() || margin.is_positive()) {
        return Ok(Feasibility::Feasible { x, margin });
    }
    // certificate from the dual of the auxiliary problem
    let y = run.iterate.ym;
    if let Some(excess) = certificate_excess(data, &y) {
        if excess.is_positive() {
            return Ok(Feasibility::Infeasible { y, margin: excess });
        }
    }
    if margin >= -tol.clone() * Real::from_f64(1e-10, prec) {
        return Ok(Feasibility::Feasible { x, margin });
    }
    Ok(Feasibility::Undecided { best: t })
}

/// For Y from a phase-one dual: F_0•Y - sup_x Σ x_i F_i•Y over the box
/// described by the data's variable scales, corrected for indefiniteness
/// of Y. Positive means no feasible x exists.
fn certificate_excess(data: &SdpData, y: &[BlockMat]) -> Option<Real> {
    let prec = data.precision();
    let bounds = box_bounds(data)?;
    let mut excess = data.dot(0, y);
    for i in 0..data.num_vars() {
        let r = data.dot(i + 1, y);
        let (lo, hi) = &bounds[i];
        excess -= (&r * lo).max(&r * hi);
    }
    // S•Y >= Σ_b min(0, λ_min(Y_b)) tr(S_b); bound tr(S_b) over the box
    for (k, yb) in y.iter().enumerate() {
        let lam = yb.min_eigenvalue();
        if lam.is_negative() {
            let tr = trace_bound(data, k, &bounds);
            excess -= lam.abs() * tr;
        }
    }
    let _ = prec;
    Some(excess)
}

/// Per-variable [lo, hi] read from single-variable rows of diagonal blocks.
pub fn box_bounds(data: &SdpData) -> Option<Vec<(Real, Real)>> {
    let prec = data.precision();
    let m = data.num_vars();
    let mut lo: Vec<Option<Real>> = vec![None; m];
    let mut hi: Vec<Option<Real>> = vec![None; m];
    let mut rows: std::collections::HashMap<(usize, usize), Vec<(usize, Real)>> = Default::default();
    for (i, list) in data.constraints[1..].iter().enumerate() {
        for e in list.iter().filter(|e| data.blocks[e.block].diagonal) {
            rows.entry((e.block, e.row)).or_default().push((i, e.value.clone()));
        }
    }
    let mut consts: std::collections::HashMap<(usize, usize), Real> = Default::default();
    for e in data.constraints[0].iter().filter(|e| data.blocks[e.block].diagonal) {
        consts.insert((e.block, e.row), e.value.clone());
    }
    for (key, list) in rows {
        if list.len() != 1 {
            continue;
        }
        let (i, a) = &list[0];
        let f0 = consts.get(&key).cloned().unwrap_or_else(|| Real::zero(prec));
        // a x - f0 >= 0
        let v = &f0 / a;
        if a.is_positive() {
            lo[*i] = Some(match lo[*i].take() {
                Some(old) => old.max(v),
                None => v,
            });
        } else {
            hi[*i] = Some(match hi[*i].take() {
                Some(old) => old.min(v),
                None => v,
            });
        }
    }
    lo.into_iter().zip(hi).map(|(l, h)| Some((l?, h?))).collect()
}

/// Upper bound on tr(S_k) for x in the box.
pub fn trace_bound(data: &SdpData, k: usize, bounds: &[(Real, Real)]) -> Real {
    let prec = data.precision();
    let mut tr = Real::zero(prec);
    for e in data.constraints[0].iter().filter(|e| e.block == k && e.row == e.col) {
        tr -= &e.value;
    }
    for (i, list) in data.constraints[1..].iter().enumerate() {
        let mut t = Real::zero(prec);
        for e in list.iter().filter(|e| e.block == k && e.row == e.col) {
            t += &e.value;
        }
        if !t.is_zero() {
            let (lo, hi) = &bounds[i];
            tr += (&t * lo).max(&t * hi);
        }
    }
    tr.max(Real::zero(prec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Real::from_f64(v, 192)
    }

    fn settings() -> SolverSettings {
        SolverSettings { precision: 192, gap_tol: 1e-30, feas_tol: 1e-30, ..SolverSettings::default() }
    }

    /// maximize x subject to 0 <= x <= 5 (diagonal block)
    fn toy() -> SdpData {
        SdpData {
            blocks: vec![BlockSpec { size: 2, diagonal: true }],
            objective: vec![r(1.0)],
            constraints: vec![
                vec![Entry { block: 0, row: 1, col: 1, value: r(-5.0) }],
                vec![
                    Entry { block: 0, row: 0, col: 0, value: r(1.0) },
                    Entry { block: 0, row: 1, col: 1, value: r(-1.0) },
                ],
            ],
            var_scale: vec![r(1.0)],
        }
    }

    #[test]
    fn one_variable_box() {
        let sol = solve(&toy(), &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.dual_objective.to_f64() - 5.0).abs() < 1e-25);
        assert!(sol.dual_objective >= &sol.primal_objective - &r(1e-28));
    }

    #[test]
    fn dense_block_problem() {
        // maximize x1 + x2 subject to [[1, x1], [x1, x2]] ⪰ 0 and 0 <= x <= 10:
        // x2 >= x1^2, optimum at x2 = 10, x1 = sqrt(10)
        let e = |block, row, col, v: f64| Entry { block, row, col, value: r(v) };
        let data = SdpData {
            blocks: vec![BlockSpec { size: 2, diagonal: false }, BlockSpec { size: 4, diagonal: true }],
            objective: vec![r(1.0), r(1.0)],
            constraints: vec![
                vec![e(0, 0, 0, -1.0), e(1, 2, 2, -10.0), e(1, 3, 3, -10.0)],
                vec![e(0, 0, 1, 1.0), e(1, 0, 0, 1.0), e(1, 2, 2, -1.0)],
                vec![e(0, 1, 1, 1.0), e(1, 1, 1, 1.0), e(1, 3, 3, -1.0)],
            ],
            var_scale: vec![r(1.0), r(1.0)],
        };
        let sol = solve(&data, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let want = 10.0 + 10f64.sqrt();
        assert!((sol.dual_objective.to_f64() - want).abs() < 1e-12, "{}", sol.dual_objective);
    }

    #[test]
    fn infeasible_box_gets_certificate() {
        // x >= 6 and x <= 5
        let mut d = toy();
        d.constraints[0] = vec![
            Entry { block: 0, row: 0, col: 0, value: r(6.0) },
            Entry { block: 0, row: 1, col: 1, value: r(-5.0) },
        ];
        match check_feasibility(&d, &settings()).unwrap() {
            Feasibility::Infeasible { margin, .. } => assert!(margin.is_positive()),
            other => panic!("expected infeasible, got {other:?}"),
        }
        let sol = solve(&d, &settings()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn deterministic_iterates() {
        let a = solve(&toy(), &settings()).unwrap();
        let b = solve(&toy(), &settings()).unwrap();
        assert_eq!(a.dual_objective, b.dual_objective);
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
