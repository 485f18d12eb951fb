//! Dense complex matrices: LU with partial pivoting, Hessenberg reduction and
//! the complex Schur decomposition used by the Krylov solver and the dense
//! reference eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::{Error, Result, C64};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x^H A x`.
    pub fn quad_form(&self, x: &[C64]) -> C64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A - A^H|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: C64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// Eigenvalues of a Hermitian matrix, ascending. The input is symmetrized first.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let mut h = self.clone();
        for i in 0..h.rows {
            for j in 0..i {
                let avg = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
                h[(i, j)] = avg;
                h[(j, i)] = avg.conj();
            }
            h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
        }
        let mut ev: Vec<f64> = eigenvalues(&h)?.into_iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= f64::EPSILON * f64::EPSILON * scale {
                return Err(Error::ZeroPivot(k));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.is_zero() {
                    continue;
                }
                let (upper, lower) = lu.data.split_at_mut(i * n);
                let krow = &upper[k * n + k + 1..k * n + n];
                for (x, &u) in lower[k + 1..n].iter_mut().zip(krow) {
                    *x -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Complex Givens rotation `G = [c s; -conj(s) c]` with `G [f; g] = [r; 0]`.
#[derive(Clone, Copy, Debug)]
struct Givens {
    c: f64,
    s: C64,
}

impl Givens {
    fn new(f: C64, g: C64) -> (Self, C64) {
        let gn = g.norm();
        if gn == 0.0 {
            return (Self { c: 1.0, s: C64::zero() }, f);
        }
        let fn_ = f.norm();
        if fn_ == 0.0 {
            return (Self { c: 0.0, s: g.conj() / gn }, C64::new(gn, 0.0));
        }
        let norm = fn_.hypot(gn);
        let phase = f / fn_;
        let c = fn_ / norm;
        let s = phase * g.conj() / norm;
        (Self { c, s }, phase * norm)
    }

    /// Rows `p`, `q` of `m`, columns `cols`.
    fn rotate_rows(&self, m: &mut DenseMatrix, p: usize, q: usize, cols: core::ops::Range<usize>) {
        for j in cols {
            let x = m[(p, j)];
            let y = m[(q, j)];
            m[(p, j)] = x * self.c + self.s * y;
            m[(q, j)] = y * self.c - self.s.conj() * x;
        }
    }

    /// Right multiplication by `G^H` on columns `p`, `q`, rows `rows`.
    fn rotate_cols(&self, m: &mut DenseMatrix, p: usize, q: usize, rows: core::ops::Range<usize>) {
        for i in rows {
            let x = m[(i, p)];
            let y = m[(i, q)];
            m[(i, p)] = x * self.c + self.s.conj() * y;
            m[(i, q)] = y * self.c - self.s * x;
        }
    }
}

/// Complex Schur form `A = Z T Z^H` with `T` upper triangular and `Z` unitary.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: DenseMatrix,
    pub z: DenseMatrix,
}

/// Householder reduction to upper Hessenberg form, returning `(H, Q)` with
/// `A = Q H Q^H`.
pub fn hessenberg(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows;
    let mut h = a.clone();
    let mut q = DenseMatrix::identity(n);
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![C64::zero(); n];
    for k in 0..n - 2 {
        let alpha_norm: f64 = ((k + 1)..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // v = x + phase*|x| e1, reflector P = I - 2 v v^H / (v^H v)
        v.fill(C64::zero());
        for i in (k + 1)..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] += phase * alpha_norm;
        let vnorm2: f64 = ((k + 1)..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- P H
        for j in 0..n {
            let s: C64 = ((k + 1)..n).map(|i| v[i].conj() * h[(i, j)]).sum();
            let s = s * beta;
            for i in (k + 1)..n {
                let vi = v[i];
                h[(i, j)] -= vi * s;
            }
        }
        // H <- H P, Q <- Q P
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = ((k + 1)..n).map(|j| m[(i, j)] * v[j]).sum();
                let s = s * beta;
                for j in (k + 1)..n {
                    let vj = v[j].conj();
                    m[(i, j)] -= s * vj;
                }
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = C64::zero();
        }
    }
    (h, q)
}

/// Complex Schur decomposition by Hessenberg reduction and single-shift QR.
pub fn schur(a: &DenseMatrix) -> Result<Schur> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    let n = a.rows;
    let (mut t, mut z) = hessenberg(a);
    if n <= 1 {
        return Ok(Schur { t, z });
    }
    let eps = f64::EPSILON;
    let norm = t.max_abs().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(10);
    let mut total = 0usize;
    while hi > 0 {
        // look for a negligible subdiagonal entry
        let mut l = hi;
        while l > 0 {
            let sub = t[(l, l - 1)].norm();
            let diag = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            let diag = if diag == 0.0 { norm } else { diag };
            if sub <= eps * diag {
                t[(l, l - 1)] = C64::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::InvalidArgument("Schur QR iteration did not converge".into()));
        }
        let shift = if iter % 11 == 10 {
            // exceptional shift
            t[(hi, hi)] + C64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        let mut x = t[(l, l)] - shift;
        let mut y = t[(l + 1, l)];
        for k in l..hi {
            let (g, _) = Givens::new(x, y);
            let col_start = if k > l { k - 1 } else { l };
            g.rotate_rows(&mut t, k, k + 1, col_start..n);
            let row_end = (k + 3).min(hi + 1);
            g.rotate_cols(&mut t, k, k + 1, 0..row_end);
            g.rotate_cols(&mut z, k, k + 1, 0..n);
            if k > l {
                t[(k + 1, k - 1)] = C64::zero();
            }
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = C64::zero();
        }
    }
    Ok(Schur { t, z })
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    // eigenvalue of [a b; c d] closest to d
    let tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>> {
    let s = schur(a)?;
    Ok((0..a.rows).map(|i| s.t[(i, i)]).collect())
}

impl Schur {
    pub fn dim(&self) -> usize {
        self.t.rows
    }

    pub fn eigenvalue(&self, i: usize) -> C64 {
        self.t[(i, i)]
    }

    /// Unit-norm eigenvector of `A` for the eigenvalue `T[k][k]`.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.dim();
        let lambda = self.t[(k, k)];
        let small = f64::EPSILON * self.t.max_abs().max(f64::MIN_POSITIVE);
        let mut y = vec![C64::zero(); n];
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C64 = ((j + 1)..=k).map(|i| self.t[(j, i)] * y[i]).sum();
            let mut d = self.t[(j, j)] - lambda;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[j] = -s / d;
        }
        let mut v = self.z.mul_vec(&y);
        let nrm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= nrm;
        }
        v
    }

    /// Swaps the diagonal entries `k` and `k + 1` by a unitary similarity.
    pub fn swap(&mut self, k: usize) {
        let n = self.dim();
        let a = self.t[(k, k)];
        let b = self.t[(k + 1, k + 1)];
        let (g, _) = Givens::new(self.t[(k, k + 1)], b - a);
        g.rotate_rows(&mut self.t, k, k + 1, k..n);
        g.rotate_cols(&mut self.t, k, k + 1, 0..(k + 2));
        g.rotate_cols(&mut self.z, k, k + 1, 0..n);
        self.t[(k + 1, k)] = C64::zero();
        self.t[(k, k)] = b;
        self.t[(k + 1, k + 1)] = a;
    }

    /// Reorders the Schur form so that the diagonal entries listed in
    /// `selected` (indices into the current diagonal) occupy the leading
    /// positions, keeping their relative order.
    pub fn reorder(&mut self, selected: &[usize]) {
        let n = self.dim();
        let mut position: Vec<usize> = (0..n).collect(); // position[orig] = current index
        for (dest, &orig) in selected.iter().enumerate() {
            let mut cur = position[orig];
            while cur > dest {
                self.swap(cur - 1);
                // the entry previously at cur-1 moves to cur
                for p in position.iter_mut() {
                    if *p == cur - 1 {
                        *p = cur;
                    } else if *p == cur {
                        *p = cur - 1;
                    }
                }
                cur -= 1;
            }
        }
    }
}
