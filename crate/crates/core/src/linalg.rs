//! Small dense matrices over [`Real`]: products, Cholesky, and a cyclic Jacobi
//! eigensolver. Block sizes in this crate stay below a few dozen, so nothing
//! here tries to be clever about cache behaviour.

use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Real>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Mat {
        Mat { rows, cols, data: vec![Real::zero(prec); rows * cols] }
    }

    pub fn identity(n: usize, prec: u32) -> Mat {
        let mut m = Mat::zeros(n, n, prec);
        for i in 0..n {
            m.set(i, i, Real::one(prec));
        }
        m
    }

    pub fn scaled_identity(n: usize, v: &Real) -> Mat {
        let mut m = Mat::zeros(n, n, v.prec());
        for i in 0..n {
            m.set(i, i, v.clone());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Real) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.data.first().map_or(crate::real::default_precision(), |x| x.prec())
    }

    pub fn get(&self, i: usize, j: usize) -> &Real {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Real {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Real) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<Real> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let prec = self.prec().max(other.prec());
        let mut out = Mat::zeros(self.rows, other.cols, prec);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        *out.get_mut(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn scale(&self, s: &Real) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn add_scaled(&mut self, other: &Mat, s: &Real) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                *a += b * s;
            }
        }
    }

    /// (A + A^T) / 2
    pub fn with_prec(&self, prec: u32) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.with_prec(prec)).collect() }
    }

    pub fn symmetrize(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| (self.get(i, j) + self.get(j, i)) / 2)
    }

    pub fn trace(&self) -> Real {
        let mut t = Real::zero(self.prec());
        for i in 0..self.rows.min(self.cols) {
            t += self.get(i, i);
        }
        t
    }

    /// Frobenius inner product tr(A^T B).
    pub fn dot(&self, other: &Mat) -> Real {
        let mut t = Real::zero(self.prec());
        for (a, b) in self.data.iter().zip(&other.data) {
            if !a.is_zero() && !b.is_zero() {
                t += a * b;
            }
        }
        t
    }

    pub fn max_abs(&self) -> Real {
        let mut m = Real::zero(self.prec());
        for a in &self.data {
            let v = a.abs();
            if v > m {
                m = v;
            }
        }
        m
    }

    pub fn frobenius(&self) -> Real {
        self.dot(self).sqrt()
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> Real {
        let mut m = Real::zero(self.prec());
        for i in 0..self.rows {
            for j in 0..i {
                let v = (self.get(i, j) - self.get(j, i)).abs();
                if v > m {
                    m = v;
                }
            }
        }
        m
    }
}

/// Lower-triangular Cholesky factor, or `None` if `a` is not numerically
/// positive definite.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.rows();
    let prec = a.prec();
    let mut l = Mat::zeros(n, n, prec);
    for j in 0..n {
        let mut d = a.get(j, j).clone();
        for k in 0..j {
            d -= l.get(j, k).square();
        }
        if !d.is_positive() {
            return None;
        }
        let djj = d.sqrt();
        for i in (j + 1)..n {
            let mut s = a.get(i, j).clone();
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / &djj);
        }
        l.set(j, j, djj);
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let prec = l.prec();
    let mut inv = Mat::zeros(n, n, prec);
    for j in 0..n {
        inv.set(j, j, l.get(j, j).recip());
        for i in (j + 1)..n {
            let mut s = Real::zero(prec);
            for k in j..i {
                s += l.get(i, k) * inv.get(k, j);
            }
            inv.set(i, j, -(s / l.get(i, i)));
        }
    }
    inv
}

/// Solve A x = b given the Cholesky factor of A.
pub fn cholesky_solve(l: &Mat, b: &[Real]) -> Vec<Real> {
    let n = l.rows();
    let mut y: Vec<Real> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i].clone();
        for k in 0..i {
            s -= l.get(i, k) * &y[k];
        }
        y.push(s / l.get(i, i));
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for k in (i + 1)..n {
            s -= l.get(k, i) * &x[k];
        }
        x[i] = s / l.get(i, i);
    }
    x
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &Mat) -> Option<Mat> {
    let l = cholesky(a)?;
    let li = lower_inverse(&l);
    Some(li.transpose().mul(&li))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in ascending order with eigenvectors as the
/// matching columns.
pub fn sym_eigen(a: &Mat) -> (Vec<Real>, Mat) {
    let n = a.rows();
    let prec = a.prec();
    let mut m = a.symmetrize();
    let mut v = Mat::identity(n, prec);
    let scale = m.frobenius();
    let tol = &scale * &Real::epsilon(prec) * 4;
    for _sweep in 0..100 {
        let mut off = Real::zero(prec);
        for i in 0..n {
            for j in 0..i {
                off += m.get(i, j).square();
            }
        }
        if off.sqrt() <= tol || scale.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q).clone();
                if apq.is_zero() {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (&apq * 2);
                let root = (&theta * &theta + Real::one(prec)).sqrt();
                let t = if theta.is_negative() {
                    -(Real::one(prec) / (theta.abs() + &root))
                } else {
                    Real::one(prec) / (theta.abs() + &root)
                };
                let c = (&t * &t + Real::one(prec)).sqrt().recip();
                let s = &t * &c;
                rotate(&mut m, p, q, &c, &s, &t, &apq);
                for k in 0..n {
                    let vkp = v.get(k, p).clone();
                    let vkq = v.get(k, q).clone();
                    v.set(k, p, &c * &vkp - &s * &vkq);
                    v.set(k, q, &s * &vkp + &c * &vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(m.get(j, j)).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m.get(i, i).clone()).collect();
    let vecs = Mat::from_fn(n, n, |r, c| v.get(r, order[c]).clone());
    (vals, vecs)
}

fn rotate(m: &mut Mat, p: usize, q: usize, c: &Real, s: &Real, t: &Real, apq: &Real) {
    let n = m.rows();
    let app = m.get(p, p) - t * apq;
    let aqq = m.get(q, q) + t * apq;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m.get(k, p).clone();
        let akq = m.get(k, q).clone();
        let np = c * &akp - s * &akq;
        let nq = s * &akp + c * &akq;
        m.set(k, p, np.clone());
        m.set(p, k, np);
        m.set(k, q, nq.clone());
        m.set(q, k, nq);
    }
    m.set(p, p, app);
    m.set(q, q, aqq);
    let z = Real::zero(m.prec());
    m.set(p, q, z.clone());
    m.set(q, p, z);
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Mat) -> Real {
    if a.rows() == 1 {
        return a.get(0, 0).clone();
    }
    if a.rows() == 2 {
        let (x, y, z) = (a.get(0, 0), a.get(1, 1), a.get(0, 1));
        let half_tr = (x + y) / 2;
        let diff = (x - y) / 2;
        let disc = (&diff * &diff + z * z).sqrt();
        return half_tr - disc;
    }
    sym_eigen(a).0.into_iter().next().unwrap_or_else(|| Real::zero(a.prec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Real::from_f64(v, 200)
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Mat::from_fn(3, 3, |i, j| r(if i == j { 4.0 } else { 1.0 }));
        let l = cholesky(&a).unwrap();
        let back = l.mul(&l.transpose());
        assert!(back.sub(&a).max_abs() < Real::pow2(-190, 200));
        let inv = spd_inverse(&a).unwrap();
        let id = inv.mul(&a);
        assert!(id.sub(&Mat::identity(3, 200)).max_abs() < Real::pow2(-190, 200));
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = Mat::from_fn(4, 4, |i, j| r(1.0 / (1 + i + j) as f64));
        let (vals, vecs) = sym_eigen(&a);
        let d = Mat::from_fn(4, 4, |i, j| if i == j { vals[i].clone() } else { Real::zero(200) });
        let back = vecs.mul(&d).mul(&vecs.transpose());
        assert!(back.sub(&a).max_abs() < Real::pow2(-180, 200));
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn indefinite_has_no_cholesky() {
        let a = Mat::from_fn(2, 2, |i, j| r(if i == j { 1.0 } else { 2.0 }));
        assert!(cholesky(&a).is_none());
        assert!(min_eigenvalue(&a) < Real::zero(200));
    }
}
