//! Sparse `L D U` factorization for structurally symmetric complex matrices,
//! with a geometric nested-dissection fill-reducing ordering.
//!
//! The factorization is the up-looking variant of the classical `LDL^T`
//! algorithm extended to unsymmetric values: for every row `k` two sparse
//! triangular solves along the elimination tree produce row `k` of `L` and
//! column `k` of `U`. No pivoting is performed, so the ordering must keep
//! the leading blocks nonsingular, which holds for the FEM pencils here.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64};

const NONE: usize = usize::MAX;
const LEAF_SIZE: usize = 48;

/// Fill-reducing ordering: nested dissection by recursive coordinate
/// bisection of the nodes not listed in `trailing`, followed by `trailing`
/// in the given order. Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(pattern: &CsrMatrix, coords: &[[f64; 2]], trailing: &[usize]) -> Vec<usize> {
    let n = pattern.dim();
    assert_eq!(coords.len(), n, "one coordinate per unknown");
    let mut is_trailing = vec![false; n];
    for &t in trailing {
        is_trailing[t] = true;
    }
    let mut nodes: Vec<usize> = (0..n).filter(|&i| !is_trailing[i]).collect();
    let mut order = Vec::with_capacity(n);
    let mut stamp = vec![0u32; n];
    let mut current = 0u32;
    dissect(&mut nodes, pattern, coords, &mut stamp, &mut current, &mut order);
    order.extend_from_slice(trailing);
    order
}

fn dissect(
    nodes: &mut [usize],
    pattern: &CsrMatrix,
    coords: &[[f64; 2]],
    stamp: &mut [u32],
    current: &mut u32,
    order: &mut Vec<usize>,
) {
    if nodes.len() <= LEAF_SIZE {
        order.extend_from_slice(nodes);
        return;
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &v in nodes.iter() {
        for d in 0..2 {
            lo[d] = lo[d].min(coords[v][d]);
            hi[d] = hi[d].max(coords[v][d]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    nodes.sort_by(|&a, &b| coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b)));
    let mid = nodes.len() / 2;
    *current += 1;
    let right_mark = *current;
    for &v in &nodes[mid..] {
        stamp[v] = right_mark;
    }
    let (left, right) = nodes.split_at_mut(mid);
    let mut interior = Vec::with_capacity(left.len());
    let mut separator = Vec::new();
    for &v in left.iter() {
        let touches = pattern.row(v).0.iter().any(|&u| u != v && stamp[u] == right_mark);
        if touches {
            separator.push(v);
        } else {
            interior.push(v);
        }
    }
    let mut right_nodes = right.to_vec();
    dissect(&mut interior, pattern, coords, stamp, current, order);
    dissect(&mut right_nodes, pattern, coords, stamp, current, order);
    order.extend_from_slice(&separator);
}

fn transpose(a: &CsrMatrix) -> CsrMatrix {
    let n = a.dim();
    let mut b = crate::sparse::TripletBuilder::with_capacity(n, a.nnz());
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            b.push(j, i, v);
        }
    }
    b.build()
}

/// `P A P^T = L D U` with unit triangular `L`, `U` sharing one pattern.
#[derive(Clone, Debug)]
pub struct SparseLdu {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    l_vals: Vec<C64>,
    u_vals: Vec<C64>,
    diag: Vec<C64>,
}

impl SparseLdu {
    /// Factors `a` in the elimination order `perm` (`perm[new] = old`).
    pub fn factor(a: &CsrMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.dim();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: perm.len() });
        }
        let mut inv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv[old] != NONE {
                return Err(Error::InvalidArgument("ordering is not a permutation".into()));
            }
            inv[old] = new;
        }
        let at = transpose(a);

        // symbolic: elimination tree and column counts
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut counts = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let old = perm[k];
            for source in [a.row(old).0, at.row(old).0] {
                for &j in source {
                    let mut i = inv[j];
                    if i >= k {
                        continue;
                    }
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        counts[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            col_ptr[i + 1] = col_ptr[i] + counts[i];
        }
        let total = col_ptr[n];
        let mut row_idx = vec![0u32; total];
        let mut l_vals = vec![C64::zero(); total];
        let mut u_vals = vec![C64::zero(); total];
        let mut diag = vec![C64::zero(); n];

        // numeric
        let mut fill = vec![0usize; n];
        let mut y = vec![C64::zero(); n];
        let mut w = vec![C64::zero(); n];
        let mut stack = vec![0usize; n];
        let mut pattern = vec![0usize; n];
        for f in flag.iter_mut() {
            *f = NONE;
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            flag[k] = k;
            let old = perm[k];
            let mut top = n;
            let mut d = C64::zero();
            // column k of P A P^T above the diagonal comes from column `old` of A
            let (cols, vals) = at.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let i = inv[j];
                if i < k {
                    y[i] += v;
                } else if i == k {
                    d += v;
                }
            }
            let (cols, vals) = a.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let i = inv[j];
                if i < k {
                    w[i] += v;
                }
            }
            for source in [a.row(old).0, at.row(old).0] {
                for &j in source {
                    let mut i = inv[j];
                    if i >= k {
                        continue;
                    }
                    let mut len = 0;
                    while flag[i] != k {
                        stack[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                    while len > 0 {
                        len -= 1;
                        top -= 1;
                        pattern[top] = stack[len];
                    }
                }
            }
            for &i in &pattern[top..n] {
                let yi = y[i];
                let wi = w[i];
                y[i] = C64::zero();
                w[i] = C64::zero();
                let start = col_ptr[i];
                let end = start + fill[i];
                for q in start..end {
                    let r = row_idx[q] as usize;
                    y[r] -= l_vals[q] * yi;
                    w[r] -= u_vals[q] * wi;
                }
                let di = diag[i];
                let lki = wi / di;
                let uik = yi / di;
                d -= lki * yi;
                row_idx[end] = k as u32;
                l_vals[end] = lki;
                u_vals[end] = uik;
                fill[i] += 1;
            }
            if !(d.norm() > f64::EPSILON * f64::EPSILON * scale) {
                return Err(Error::ZeroPivot(k));
            }
            diag[k] = d;
        }
        Ok(Self { n, perm: perm.to_vec(), col_ptr, row_idx, l_vals, u_vals, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored off-diagonal entries of `L` (equal to those of `U`).
    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    /// Smallest pivot magnitude relative to the largest.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = self
            .diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d.norm()), hi.max(d.norm())));
        lo / hi
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        assert_eq!(b.len(), self.n);
        let mut z: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..self.n {
            let zi = z[i];
            if !zi.is_zero() {
                for q in self.col_ptr[i]..self.col_ptr[i + 1] {
                    z[self.row_idx[q] as usize] -= self.l_vals[q] * zi;
                }
            }
        }
        for (zi, d) in z.iter_mut().zip(&self.diag) {
            *zi /= d;
        }
        for i in (0..self.n).rev() {
            let mut s = z[i];
            for q in self.col_ptr[i]..self.col_ptr[i + 1] {
                s -= self.u_vals[q] * z[self.row_idx[q] as usize];
            }
            z[i] = s;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = z[new];
        }
    }

    /// Solve followed by one step of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[C64]) -> Vec<C64> {
        let mut x = self.solve(b);
        let ax = a.mul_vec(&x);
        let mut r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        self.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        x
    }
}
