//! Compressed sparse row storage for complex matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dense::DenseMatrix;
use crate::C64;

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i, j, v));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }
}

/// Square complex CSR matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => C64::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// `x^H A x`.
    pub fn quad_form(&self, x: &[C64]) -> C64 {
        self.bilinear(x, x)
    }

    /// `y^H A x`.
    pub fn bilinear(&self, y: &[C64], x: &[C64]) -> C64 {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let s: C64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
                y[i].conj() * s
            })
            .sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (&j, v) in self.col_idx.iter().zip(&self.values) {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A - A^H|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.symmetry_defect(true)
    }

    /// Largest entry of `|A - A^T|`.
    pub fn symmetric_defect(&self) -> f64 {
        self.symmetry_defect(false)
    }

    fn symmetry_defect(&self, conjugate: bool) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let t = self.get(j, i);
                let t = if conjugate { t.conj() } else { t };
                worst = worst.max((v - t).norm());
            }
        }
        worst
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn add(&self, alpha: C64, other: &CsrMatrix, beta: C64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja == jb {
                    col_idx.push(ja);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if ja < jb {
                    col_idx.push(ja);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_idx.push(jb);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: self.n, row_ptr, col_idx, values }
    }

    /// Sparse embedding of a dense square block placed at `(offset, offset)`.
    pub fn from_dense_block(n: usize, offset: usize, block: &DenseMatrix) -> CsrMatrix {
        let m = block.rows();
        assert!(offset + m <= n && block.cols() == m);
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(m * m);
        let mut values = Vec::with_capacity(m * m);
        for i in 0..n {
            if i >= offset && i < offset + m {
                let r = i - offset;
                for j in 0..m {
                    col_idx.push(offset + j);
                    values.push(block[(r, j)]);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> CsrMatrix {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row sums `A 1`.
    pub fn row_sums(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let mut b = TripletBuilder::new(3);
        b.push(1, 2, c64(1.0, 0.0));
        b.push(1, 0, c64(2.0, 0.0));
        b.push(1, 2, c64(0.5, 1.0));
        b.push(0, 0, c64(3.0, 0.0));
        let a = b.build();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), c64(1.5, 1.0));
        assert_eq!(a.row(1).0, &[0, 2]);
        assert_eq!(a.get(2, 2), C64::zero());
    }

    #[test]
    fn add_forms_union_pattern() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, c64(1.0, 0.0));
        let a = b.build();
        let mut b = TripletBuilder::new(2);
        b.push(0, 1, c64(2.0, 0.0));
        b.push(0, 0, c64(1.0, 0.0));
        let c = b.build();
        let s = a.add(c64(1.0, 0.0), &c, c64(0.0, 1.0));
        assert_eq!(s.get(0, 0), c64(1.0, 1.0));
        assert_eq!(s.get(0, 1), c64(0.0, 2.0));
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn quad_form_matches_dense() {
        let mut b = TripletBuilder::new(3);
        b.push(0, 0, c64(2.0, 0.0));
        b.push(0, 1, c64(0.0, 1.0));
        b.push(1, 0, c64(0.0, -1.0));
        b.push(2, 2, c64(1.0, 0.0));
        let a = b.build();
        let x = [c64(1.0, 1.0), c64(0.5, 0.0), c64(0.0, -2.0)];
        let dense = a.to_dense();
        assert!((a.quad_form(&x) - dense.quad_form(&x)).norm() < 1e-14);
        assert_eq!(a.hermitian_defect(), 0.0);
    }
}
