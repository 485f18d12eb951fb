//! Eigenpairs of the pencil `K u = -λ B_δ u` near prescribed targets.
//!
//! The workhorse is shift-invert Krylov–Schur on `(K + σB_δ)^{-1} B_δ`, whose
//! eigenvalues `θ = 1/(σ - λ)` are largest for `λ` near `σ`. A dense reduction
//! to the boundary unknowns serves as an independent reference on small
//! instances.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::assembly::{AssembledSystem, Structure};
use crate::dense::{self, DenseLu, DenseMatrix};
use crate::ldu::{nested_dissection, SparseLdu};
use crate::{c64, Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub lambda: C64,
    /// Coefficients in dof order.
    pub u: Vec<C64>,
    /// `‖Ku + λBu‖ / ((‖K‖₁ + |λ|‖B‖₁)‖u‖)`.
    pub residual: f64,
    /// `√(u^H H u)`.
    pub h1_norm: f64,
    /// Distance to the nearest other computed eigenvalue.
    pub gap: f64,
    pub phase_fixed: bool,
    /// Shift whose solve produced this pair.
    pub target: C64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Krylov subspace dimension; derived from the requested count when unset.
    pub krylov_dim: Option<usize>,
    /// Ritz residual tolerance relative to `|θ|`.
    pub ritz_tol: f64,
    pub max_restarts: usize,
    /// Largest accepted pencil residual.
    pub residual_tol: f64,
    /// Ritz values mapping to `|λ|` above this are discarded.
    pub infinite_cutoff: f64,
    /// Factorization retries with a perturbed shift.
    pub max_shift_retries: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            krylov_dim: None,
            ritz_tol: 1e-12,
            max_restarts: 300,
            residual_tol: 1e-9,
            infinite_cutoff: 1e8,
            max_shift_retries: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetFailure {
    pub target: C64,
    pub error: Error,
}

#[derive(Clone, Debug, Default)]
pub struct SolveReport {
    /// Merged pairs in target order, each target's pairs sorted by distance.
    pub pairs: Vec<EigenPair>,
    pub failures: Vec<TargetFailure>,
}

impl SolveReport {
    /// The pair whose eigenvalue is nearest `lambda`.
    pub fn nearest(&self, lambda: C64) -> Option<&EigenPair> {
        self.pairs.iter().min_by(|a, b| (a.lambda - lambda).norm().total_cmp(&(b.lambda - lambda).norm()))
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

/// Factored shifted pencil, reusable for several solves.
struct ShiftedOperator<'a> {
    sys: &'a AssembledSystem,
    sigma: C64,
    ldu: SparseLdu,
}

impl<'a> ShiftedOperator<'a> {
    fn new(sys: &'a AssembledSystem, perm: &[usize], target: C64, retries: usize) -> Result<Self> {
        let mut sigma = target;
        for _ in 0..=retries {
            let a = sys.k.add(c64(1.0, 0.0), &sys.bdelta, sigma);
            match SparseLdu::factor(&a, perm) {
                // tiny pivots mean σ sits on an eigenvalue
                Ok(ldu) if ldu.pivot_ratio() > 1e-13 => return Ok(Self { sys, sigma, ldu }),
                Ok(_) | Err(Error::ZeroPivot(_)) => sigma = sigma * (1.0 + 1e-6) + c64(0.0, 1e-6),
                Err(e) => return Err(e),
            }
        }
        Err(Error::SingularShift { re: target.re, im: target.im })
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = self.sys.apply_bdelta(x);
        self.ldu.solve_in_place(&mut y);
        y
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut [C64], s: C64) {
    for z in a {
        *z *= s;
    }
}

/// Deterministic pseudo-random vector.
fn filler(n: usize, seed: u64) -> Vec<C64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            c64((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5, 0.0)
        })
        .collect()
}

/// Orthogonalizes `w` against `basis` with two classical Gram–Schmidt passes
/// and returns the coefficients.
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![C64::zero(); basis.len()];
    for _ in 0..2 {
        for (hi, v) in h.iter_mut().zip(basis) {
            let c = dot(v, w);
            *hi += c;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= c * vk;
            }
        }
    }
    h
}

/// Krylov–Schur iteration for the `want` largest-magnitude eigenvalues of `op`.
/// Returns `(θ, Ritz vector)` pairs ordered by decreasing `|θ|`.
fn krylov_schur(
    n: usize,
    op: impl Fn(&[C64]) -> Vec<C64>,
    start: Vec<C64>,
    want: usize,
    m: usize,
    opts: &SolveOptions,
) -> Result<Vec<(C64, Vec<C64>)>> {
    let want = want.min(m);
    let keep = (want + (m - want) / 2).clamp(want, m.saturating_sub(1).max(want));
    let mut v0 = start;
    let nrm = vnorm(&v0);
    if !(nrm > 0.0) {
        return Err(Error::InvalidArgument("start vector vanishes under the operator".into()));
    }
    scale(&mut v0, c64(1.0 / nrm, 0.0));
    let mut basis: Vec<Vec<C64>> = vec![v0];
    // Op V_k = V_{k+1} G, G is (m+1) x m
    let mut g = DenseMatrix::zeros(m + 1, m);
    let mut k = 0;
    let mut fill_seed = 1;
    for restart in 0..=opts.max_restarts {
        for j in k..m {
            let mut w = op(&basis[j]);
            let before = vnorm(&w);
            let h = orthogonalize(&basis, &mut w);
            for (i, hi) in h.iter().enumerate() {
                g[(i, j)] = *hi;
            }
            let mut beta = vnorm(&w);
            if beta <= 1e-12 * before.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue with any orthogonal direction
                beta = 0.0;
                let mut fresh = Vec::new();
                for attempt in 0..4 {
                    let raw = filler(n, fill_seed);
                    fill_seed += 1;
                    let mut cand = if attempt < 2 { op(&raw) } else { raw };
                    let c0 = vnorm(&cand);
                    orthogonalize(&basis, &mut cand);
                    let c1 = vnorm(&cand);
                    if c1 > 1e-8 * c0 {
                        scale(&mut cand, c64(1.0 / c1, 0.0));
                        fresh = cand;
                        break;
                    }
                }
                if fresh.is_empty() {
                    return Err(Error::InvalidArgument("Krylov space exhausted".into()));
                }
                w = fresh;
            } else {
                scale(&mut w, c64(1.0 / beta, 0.0));
            }
            g[(j + 1, j)] = c64(beta, 0.0);
            basis.push(w);
        }

        let gm = DenseMatrix::from_fn(m, m, |i, j| g[(i, j)]);
        let b: Vec<C64> = (0..m).map(|j| g[(m, j)]).collect();
        let mut schur = dense::schur(&gm)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&p, &q| schur.eigenvalue(q).norm().total_cmp(&schur.eigenvalue(p).norm()));
        schur.reorder(&order);
        let theta_max = schur.eigenvalue(0).norm();
        // an invariant subspace has nothing left to resolve
        let invariant = vnorm(&b) <= 1e-14 * theta_max || keep >= m;
        let mut converged = true;
        for i in 0..if invariant { 0 } else { want } {
            let th = schur.eigenvalue(i);
            let s = schur.eigenvector(i);
            let res: C64 = b.iter().zip(&s).map(|(bj, sj)| bj * sj).sum();
            let spurious = th.norm() <= 1e-10 * theta_max;
            if !spurious && res.norm() > opts.ritz_tol * th.norm() {
                converged = false;
                break;
            }
        }
        if converged || restart == opts.max_restarts {
            if !converged {
                return Err(Error::InvalidArgument(format!(
                    "Krylov–Schur did not converge after {} restarts",
                    opts.max_restarts
                )));
            }
            return Ok((0..want)
                .map(|i| {
                    let s = schur.eigenvector(i);
                    let mut x = vec![C64::zero(); n];
                    for (sj, vj) in s.iter().zip(&basis) {
                        for (xk, vk) in x.iter_mut().zip(vj) {
                            *xk += sj * vk;
                        }
                    }
                    (schur.eigenvalue(i), x)
                })
                .collect());
        }

        // truncate to the leading `keep` Schur vectors
        let z = &schur.z;
        let mut kept = Vec::with_capacity(keep + 1);
        for c in 0..keep {
            let mut x = vec![C64::zero(); n];
            for (r, vr) in basis.iter().take(m).enumerate() {
                let coef = z[(r, c)];
                if !coef.is_zero() {
                    for (xk, vk) in x.iter_mut().zip(vr) {
                        *xk += coef * vk;
                    }
                }
            }
            kept.push(x);
        }
        kept.push(basis.swap_remove(m));
        basis = kept;
        let mut next = DenseMatrix::zeros(m + 1, m);
        for i in 0..keep {
            for j in 0..keep {
                next[(i, j)] = schur.t[(i, j)];
            }
        }
        for j in 0..keep {
            next[(keep, j)] = (0..m).map(|r| b[r] * z[(r, j)]).sum();
        }
        g = next;
        k = keep;
    }
    unreachable!()
}

/// Eigenpairs nearest each target, normalized in the `H` inner product.
///
/// Failures of individual targets are reported in the result; the call
/// itself fails only on invalid input.
pub fn solve_near(sys: &AssembledSystem, targets: &[C64], count: usize, opts: &SolveOptions) -> Result<SolveReport> {
    if targets.is_empty() || count == 0 {
        return Err(Error::InvalidArgument("need at least one target and a positive count".into()));
    }
    if let Some(t) = targets.iter().find(|t| t.is_zero() || !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("targets must be finite and nonzero, got {t}")));
    }
    if sys.bdelta_block.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("boundary matrix vanishes".into()));
    }
    let n = sys.dof_count();
    let off = sys.dofs.interior_count();
    let pattern = sys.k.add(c64(1.0, 0.0), &sys.bdelta, c64(1.0, 0.0));
    let perm = nested_dissection(&pattern, &sys.coords, &(off..n).collect::<Vec<_>>());
    let norms = (sys.k.norm1(), sys.bdelta_block.norm1());

    let mut report = SolveReport::default();
    let mut per_target = Vec::with_capacity(targets.len());
    for &target in targets {
        match solve_one(sys, &perm, target, count, opts, norms) {
            Ok(pairs) => per_target.push(pairs),
            Err(error) => {
                report.failures.push(TargetFailure { target, error });
                per_target.push(Vec::new());
            }
        }
    }
    report.pairs = merge(per_target);
    assign_gaps(&mut report.pairs);
    Ok(report)
}

fn solve_one(
    sys: &AssembledSystem,
    perm: &[usize],
    target: C64,
    count: usize,
    opts: &SolveOptions,
    norms: (f64, f64),
) -> Result<Vec<EigenPair>> {
    let n = sys.dof_count();
    let op = ShiftedOperator::new(sys, perm, target, opts.max_shift_retries)?;
    let rank = sys.basis.modes().len().min(n);
    // two extra steps past the rank of B_δ expose the invariant subspace
    let m = opts.krylov_dim.unwrap_or((2 * count + 20).max(40)).min(rank + 2).max(count.min(rank)).min(n);
    let start = op.apply(&vec![c64(1.0, 0.0); n]);
    let ritz = krylov_schur(n, |x| op.apply(x), start, count, m, opts)?;
    let mut pairs = Vec::new();
    for (theta, u) in ritz {
        if theta.norm() < 1.0 / opts.infinite_cutoff {
            continue;
        }
        let rough = op.sigma - theta.inv();
        if rough.norm() > opts.infinite_cutoff {
            continue;
        }
        let lambda = rayleigh(sys, &u).unwrap_or(rough);
        let residual = pencil_residual(sys, lambda, &u, norms);
        if !(residual <= opts.residual_tol) {
            return Err(Error::InvalidPair(format!("residual {residual:e} at λ = {lambda} exceeds tolerance")));
        }
        let pair = EigenPair { lambda, u, residual, h1_norm: f64::NAN, gap: f64::INFINITY, phase_fixed: false, target };
        pairs.push(normalize(&pair, &sys.h)?);
    }
    pairs.sort_by(|a, b| (a.lambda - target).norm().total_cmp(&(b.lambda - target).norm()));
    Ok(pairs)
}

/// Rayleigh quotient matching the symmetry of the pencil.
fn rayleigh(sys: &AssembledSystem, u: &[C64]) -> Option<C64> {
    let ku = sys.k.mul_vec(u);
    let bu = sys.apply_bdelta(u);
    let (num, den) = match sys.structure {
        Structure::Hermitian => (dot(u, &ku), dot(u, &bu)),
        Structure::ComplexSymmetric => {
            let t = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<C64>();
            (t(u, &ku), t(u, &bu))
        }
        Structure::General => return None,
    };
    if den.norm() <= 1e-14 * vnorm(u).powi(2) * sys.bdelta_block.norm1() {
        return None;
    }
    let l = -num / den;
    Some(if sys.structure == Structure::Hermitian { c64(l.re, 0.0) } else { l })
}

pub fn pencil_residual(sys: &AssembledSystem, lambda: C64, u: &[C64], norms: (f64, f64)) -> f64 {
    let mut r = sys.k.mul_vec(u);
    for (ri, bi) in r.iter_mut().zip(sys.apply_bdelta(u)) {
        *ri += lambda * bi;
    }
    vnorm(&r) / ((norms.0 + lambda.norm() * norms.1) * vnorm(u))
}

/// Merges duplicates found by different targets, pairing them one-to-one so
/// that multiple eigenvalues keep all their copies.
fn merge(per_target: Vec<Vec<EigenPair>>) -> Vec<EigenPair> {
    let mut out: Vec<(usize, EigenPair)> = Vec::new();
    for (t, pairs) in per_target.into_iter().enumerate() {
        let mut used = vec![false; out.len()];
        for p in pairs {
            let tol = 1e-8 * (1.0 + p.lambda.norm());
            let hit = out
                .iter()
                .enumerate()
                .filter(|(i, (src, q))| *src != t && !used[*i] && (q.lambda - p.lambda).norm() < tol)
                .min_by(|a, b| (a.1 .1.lambda - p.lambda).norm().total_cmp(&(b.1 .1.lambda - p.lambda).norm()))
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    used[i] = true;
                    if p.residual < out[i].1.residual {
                        out[i].1 = p;
                    }
                }
                None => out.push((t, p)),
            }
        }
    }
    out.into_iter().map(|(_, p)| p).collect()
}

fn assign_gaps(pairs: &mut [EigenPair]) {
    let lambdas: Vec<C64> = pairs.iter().map(|p| p.lambda).collect();
    for (i, p) in pairs.iter_mut().enumerate() {
        p.gap = lambdas
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, l)| (l - p.lambda).norm())
            .fold(f64::INFINITY, f64::min);
    }
}

/// Scales `u` to unit `H`-norm and rotates it so that its largest entry (the
/// first one within a relative `1e-6` of the maximum) is real and positive.
pub fn normalize(pair: &EigenPair, h: &crate::sparse::CsrMatrix) -> Result<EigenPair> {
    let q = h.quad_form(&pair.u);
    if !(q.re > 0.0) || !q.re.is_finite() {
        return Err(Error::InvalidPair(format!("u^H H u = {q} is not positive")));
    }
    let mut u = pair.u.clone();
    let s = 1.0 / q.re.sqrt();
    let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = u.iter().find(|z| z.norm() >= (1.0 - 1e-6) * peak).copied().unwrap_or(C64::zero());
    let phase = if pivot.is_zero() { c64(1.0, 0.0) } else { pivot.conj() / pivot.norm() };
    scale(&mut u, phase * s);
    let h1_norm = h.quad_form(&u).re.sqrt();
    Ok(EigenPair { u, h1_norm, phase_fixed: true, ..pair.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simplicity {
    Simple,
    Multiple,
    /// Fewer than two other eigenvalues were computed.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub lambda: C64,
    pub gap: f64,
    pub threshold: f64,
    pub verdict: Simplicity,
}

/// Default relative gap below which two computed eigenvalues count as one
/// multiple eigenvalue split by discretization.
pub const SIMPLICITY_REL_TOL: f64 = 1e-3;

/// Decides whether the computed eigenvalue nearest `lambda` is simple: its
/// gap must exceed both `1e3` times its residual scale and
/// `rel_tol · (1 + |λ|)`.
pub fn certify_simple(pairs: &[EigenPair], lambda: C64, rel_tol: f64) -> GapReport {
    let Some((i, me)) =
        pairs.iter().enumerate().min_by(|a, b| (a.1.lambda - lambda).norm().total_cmp(&(b.1.lambda - lambda).norm()))
    else {
        return GapReport { lambda, gap: f64::INFINITY, threshold: 0.0, verdict: Simplicity::Inconclusive };
    };
    let gap = pairs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, p)| (p.lambda - me.lambda).norm())
        .fold(f64::INFINITY, f64::min);
    let threshold = (1e3 * me.residual * (1.0 + me.lambda.norm())).max(rel_tol * (1.0 + me.lambda.norm()));
    let verdict = if pairs.len() < 3 {
        Simplicity::Inconclusive
    } else if gap > threshold {
        Simplicity::Simple
    } else {
        Simplicity::Multiple
    };
    GapReport { lambda: me.lambda, gap, threshold, verdict }
}

/// Every finite eigenvalue of the pencil by dense elimination of the interior
/// unknowns: with `G = E_B^T (K + σ₀B)^{-1} E_B`, the eigenvalues `γ` of
/// `G B_BB` give `λ = σ₀ - 1/γ`. Intended for a few hundred dofs.
pub fn dense_spectrum(sys: &AssembledSystem, opts: &SolveOptions) -> Result<Vec<C64>> {
    let n = sys.dof_count();
    if n > 3000 {
        return Err(Error::InvalidArgument(format!("dense reference solve limited to 3000 dofs, got {n}")));
    }
    let off = sys.dofs.interior_count();
    let nb = n - off;
    let mut last: Option<Error> = None;
    for sigma in [C64::zero(), c64(0.37, 0.11), c64(-1.13, 0.29)] {
        let a = sys.k.add(c64(1.0, 0.0), &sys.bdelta, sigma).to_dense();
        let lu = match DenseLu::factor(&a) {
            Ok(lu) => lu,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let mut g = DenseMatrix::zeros(nb, nb);
        for j in 0..nb {
            let mut e = vec![C64::zero(); n];
            e[off + j] = c64(1.0, 0.0);
            let x = lu.solve(&e);
            for i in 0..nb {
                g[(i, j)] = x[off + i];
            }
        }
        let c = g.matmul(&sys.bdelta_block);
        let gammas = dense::eigenvalues(&c)?;
        let gmax = gammas.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut out: Vec<C64> = gammas
            .into_iter()
            .filter(|z| z.norm() > 1e-12 * gmax.max(f64::MIN_POSITIVE))
            .map(|z| sigma - z.inv())
            .filter(|l| l.norm() <= opts.infinite_cutoff)
            .collect();
        out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        return Ok(out);
    }
    Err(last.unwrap_or_else(|| Error::InvalidArgument(String::from("dense reference solve failed"))))
}
