//! First-order eigenvalue correction under coefficient perturbations.
//!
//! For a simple eigenpair `(λ₀, u₀)` of the reference medium and a perturbed
//! medium `(A_h, n_h)`,
//!
//! ```text
//! λ_h ≈ λ₀ + [-((A_h - A₀)∇u₀, ∇u₀) + k²((n_h - n₀)u₀, u₀)] / <S_δ u₀, u₀>.
//! ```
//!
//! The numerator is integrated from pointwise coefficient differences on the
//! shared mesh; `λ_h` itself always comes from a fresh eigensolve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::assembly::{assemble_mass, local_mass, local_stiffness, mean_a, midpoint_weights, AssembledSystem};
use crate::coefficients::{lp_diff_norm, CoefficientField, MediumSpec};
use crate::eigen::{solve_near, EigenPair, SolveOptions};
use crate::ldu::{nested_dissection, SparseLdu};
use crate::mesh::Mesh;
use crate::smoothing::SmootherSpec;
use crate::stats::{fit_slope, LogLogFit};
use crate::{assembly, Error, Result, C64};

/// Exponent `p' = 1 + ε` used for the remainder norm in two dimensions.
pub const P_PRIME: f64 = 1.05;
/// Regularity parameter `s` fixing the anisotropic norm exponents `d/(2s)`
/// and `d/s`.
pub const REGULARITY_S: f64 = 0.25;
/// `n`-norm exponents reported for every perturbation.
pub const N_EXPONENTS: [f64; 4] = [1.0, P_PRIME, 1.5, f64::INFINITY];
/// `A`-norm exponents `d/(2s)` and `d/s` for `d = 2`.
pub const A_EXPONENTS: [f64; 2] = [2.0 / (2.0 * REGULARITY_S), 2.0 / REGULARITY_S];

const DENOMINATOR_FLOOR: f64 = 1e-12;
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correction {
    /// `-((A_h - A₀)∇u₀, ∇u₀)`.
    pub a_term: C64,
    /// `k²((n_h - n₀)u₀, u₀)`.
    pub n_term: C64,
    /// `u₀^H B_δ u₀`.
    pub denominator: C64,
}

impl Correction {
    pub fn numerator(&self) -> C64 {
        self.a_term + self.n_term
    }

    pub fn value(&self) -> C64 {
        self.numerator() / self.denominator
    }
}

/// Evaluates the first-order correction for the reference pair `u0`.
pub fn correction_term(
    u0: &EigenPair,
    reference: &MediumSpec,
    perturbed: &MediumSpec,
    sys: &AssembledSystem,
    mesh: &Mesh,
) -> Result<Correction> {
    if u0.u.len() != sys.dof_count() {
        return Err(Error::DimensionMismatch { expected: sys.dof_count(), found: u0.u.len() });
    }
    if sys.dofs.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch { expected: mesh.node_count(), found: sys.dofs.len() });
    }
    let nodal = sys.dofs.to_nodal(&u0.u);
    let k2 = sys.wave_number * sys.wave_number;
    let mut a_term = C64::zero();
    let mut n_term = C64::zero();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let u = tri.map(|n| nodal[n]);
        let da = {
            let ah = mean_a(mesh, t, |x, tag| perturbed.eval_a(x, tag));
            let a0 = mean_a(mesh, t, |x, tag| reference.eval_a(x, tag));
            [[ah[0][0] - a0[0][0], ah[0][1] - a0[0][1]], [ah[1][0] - a0[1][0], ah[1][1] - a0[1][1]]]
        };
        if da.iter().flatten().any(|z| !z.is_zero()) {
            a_term -= local_form(&local_stiffness(p, &da), &u);
        }
        let wh = midpoint_weights(mesh, t, |x, tag| perturbed.eval_n(x, tag));
        let w0 = midpoint_weights(mesh, t, |x, tag| reference.eval_n(x, tag));
        let dn = [wh[0] - w0[0], wh[1] - w0[1], wh[2] - w0[2]];
        if dn.iter().any(|z| !z.is_zero()) {
            n_term += local_form(&local_mass(p, dn), &u) * k2;
        }
    }
    let denominator = sys.boundary_form(&u0.u);
    if !(denominator.norm() >= DENOMINATOR_FLOOR) {
        return Err(Error::DegenerateDenominator(denominator.norm()));
    }
    Ok(Correction { a_term, n_term, denominator })
}

/// `u^H M u` for a local 3×3 matrix.
fn local_form(m: &[[C64; 3]; 3], u: &[C64; 3]) -> C64 {
    let mut s = C64::zero();
    for i in 0..3 {
        for j in 0..3 {
            s += u[i].conj() * m[i][j] * u[j];
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormSet {
    /// `(p, ‖n_h - n₀‖_{L^p})` for each exponent in [`N_EXPONENTS`].
    pub n: Vec<(f64, f64)>,
    /// `(q, ‖A_h - A₀‖_{L^q})` for each exponent in [`A_EXPONENTS`].
    pub a: Vec<(f64, f64)>,
}

impl NormSet {
    pub fn compute(reference: &MediumSpec, perturbed: &MediumSpec, mesh: &Mesh) -> Result<Self> {
        let n = N_EXPONENTS
            .iter()
            .map(|&p| Ok((p, lp_diff_norm(reference, perturbed, mesh, p, CoefficientField::N)?)))
            .collect::<Result<Vec<_>>>()?;
        let a = A_EXPONENTS
            .iter()
            .map(|&q| Ok((q, lp_diff_norm(reference, perturbed, mesh, q, CoefficientField::A)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, a })
    }

    pub fn n_norm(&self, p: f64) -> Option<f64> {
        self.n.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }

    pub fn a_norm(&self, q: f64) -> Option<f64> {
        self.a.iter().find(|(r, _)| *r == q).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    /// Size parameter of the perturbation (the void radius in sweeps).
    pub size: f64,
    pub lambda0: C64,
    pub lambda_h: C64,
    pub correction: C64,
    pub predicted: C64,
    pub shift: C64,
    pub remainder: C64,
    pub denominator: C64,
    pub a_term: C64,
    pub n_term: C64,
    pub norms: NormSet,
}

impl PerturbationReport {
    pub fn new(size: f64, lambda0: C64, lambda_h: C64, correction: &Correction, norms: NormSet) -> Self {
        let value = correction.value();
        let shift = lambda_h - lambda0;
        Self {
            size,
            lambda0,
            lambda_h,
            correction: value,
            predicted: lambda0 + value,
            shift,
            remainder: shift - value,
            denominator: correction.denominator,
            a_term: correction.a_term,
            n_term: correction.n_term,
            norms,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pairing {
    /// `(reference index, perturbed index, metric)` in order of acceptance.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_reference: Vec<usize>,
    pub unmatched_perturbed: Vec<usize>,
}

impl Pairing {
    pub fn partner(&self, reference: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == reference).map(|p| p.1)
    }
}

/// Greedy one-to-one matching by `|λ_h - λ₀| + (1 - |u_h^H H u₀|)`.
pub fn match_pairs(reference: &[EigenPair], perturbed: &[EigenPair], h: &crate::sparse::CsrMatrix) -> Result<Pairing> {
    if reference.is_empty() || perturbed.is_empty() {
        return Err(Error::InvalidArgument("cannot match empty eigenpair lists".into()));
    }
    let mut cand = Vec::with_capacity(reference.len() * perturbed.len());
    for (i, r) in reference.iter().enumerate() {
        let hu = h.mul_vec(&r.u);
        for (j, p) in perturbed.iter().enumerate() {
            if p.u.len() != hu.len() {
                return Err(Error::DimensionMismatch { expected: hu.len(), found: p.u.len() });
            }
            let overlap: C64 = p.u.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
            cand.push(((p.lambda - r.lambda).norm() + (1.0 - overlap.norm()).max(0.0), i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ref_used = vec![false; reference.len()];
    let mut pert_used = vec![false; perturbed.len()];
    let mut pairs = Vec::new();
    for (metric, i, j) in cand {
        if !ref_used[i] && !pert_used[j] {
            ref_used[i] = true;
            pert_used[j] = true;
            pairs.push((i, j, metric));
        }
    }
    let free = |used: &[bool]| used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect();
    Ok(Pairing { pairs, unmatched_reference: free(&ref_used), unmatched_perturbed: free(&pert_used) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemainderFit {
    pub shift: LogLogFit,
    pub remainder: LogLogFit,
    /// Remainder slope minus shift slope.
    pub gain: f64,
    /// Indices dropped for sitting below the solver noise floor.
    pub excluded: Vec<usize>,
}

/// Fits `log |shift|` and `log |remainder|` against `log size`.
pub fn remainder_order(reports: &[PerturbationReport], sizes: &[f64]) -> Result<RemainderFit> {
    if reports.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: reports.len(), found: sizes.len() });
    }
    if reports.len() < 4 {
        return Err(Error::InsufficientData(format!("need at least 4 sizes, got {}", reports.len())));
    }
    let (lo, hi) = sizes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    if !(hi >= 10.0 * lo * (1.0 - 1e-9)) {
        return Err(Error::InsufficientData(format!("sizes must span a decade, got [{lo}, {hi}]")));
    }
    let keep: Vec<usize> = (0..reports.len())
        .filter(|&i| reports[i].remainder.norm() >= NOISE_FLOOR && reports[i].shift.norm() >= NOISE_FLOOR)
        .collect();
    let excluded: Vec<usize> = (0..reports.len()).filter(|i| !keep.contains(i)).collect();
    if keep.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} of {} points lie below the noise floor",
            excluded.len(),
            reports.len()
        )));
    }
    let x: Vec<f64> = keep.iter().map(|&i| sizes[i]).collect();
    let shift = fit_slope(&x, &keep.iter().map(|&i| reports[i].shift.norm()).collect::<Vec<_>>())?;
    let remainder = fit_slope(&x, &keep.iter().map(|&i| reports[i].remainder.norm()).collect::<Vec<_>>())?;
    Ok(RemainderFit { gain: remainder.slope - shift.slope, shift, remainder, excluded })
}

/// Norm combination bounding `|λ_h - λ₀|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundNorm {
    /// `‖n_h - n₀‖_{L¹}`.
    Isotropic,
    /// `‖A_h - A₀‖_{L^{d/(2s)}} + ‖n_h - n₀‖_{L¹}`.
    Anisotropic,
}

impl BoundNorm {
    pub fn evaluate(self, norms: &NormSet) -> f64 {
        let n1 = norms.n_norm(1.0).unwrap_or(f64::NAN);
        match self {
            BoundNorm::Isotropic => n1,
            BoundNorm::Anisotropic => n1 + norms.a_norm(A_EXPONENTS[0]).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub shift: f64,
    pub norm: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Tests `|λ_h - λ₀| ≤ C · norm`.
pub fn bound_check(report: &PerturbationReport, c: f64, norm: BoundNorm) -> BoundCheck {
    let shift = report.shift.norm();
    let value = norm.evaluate(&report.norms);
    let bound = c * value;
    BoundCheck { shift, norm: value, bound, pass: shift <= bound * (1.0 + 1e-12) }
}

/// `|shift| / norm` for a report, `None` when the norm vanishes.
pub fn bound_ratio(report: &PerturbationReport, norm: BoundNorm) -> Option<f64> {
    let v = norm.evaluate(&report.norms);
    (v > 0.0).then(|| report.shift.norm() / v)
}

/// Bound constant taken from the coarsest perturbation (largest size).
pub fn fit_bound_constant(reports: &[PerturbationReport], norm: BoundNorm) -> Result<f64> {
    let coarsest = reports
        .iter()
        .max_by(|a, b| a.size.total_cmp(&b.size))
        .ok_or_else(|| Error::InsufficientData("no reports".into()))?;
    bound_ratio(coarsest, norm).ok_or_else(|| Error::InsufficientData("coarsest perturbation has zero norm".into()))
}

/// Both sides of the discrete nonlinear-eigenvalue identity
/// `1 + λ₀²(DT(λ₀)u₀, u₀)_H = -λ₀ u₀^H B_δ u₀`, where
/// `T(λ) = -λ⁻¹H⁻¹K' + H⁻¹B'` with `K' = -k²M_{n+1}` and `B' = -B_δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearIdentity {
    pub lhs: C64,
    pub rhs: C64,
}

impl NonlinearIdentity {
    pub fn relative_defect(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.lhs.norm().max(self.rhs.norm()).max(f64::MIN_POSITIVE)
    }
}

/// Evaluates the identity for an `H`-normalized pair of the medium `med`.
pub fn nonlinear_identity(sys: &AssembledSystem, mesh: &Mesh, med: &MediumSpec, pair: &EigenPair) -> Result<NonlinearIdentity> {
    let n = sys.dof_count();
    if pair.u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pair.u.len() });
    }
    if pair.lambda.is_zero() {
        return Err(Error::InvalidPair("identity needs λ ≠ 0".into()));
    }
    let k2 = sys.wave_number * sys.wave_number;
    let m = assemble_mass(mesh, &sys.dofs, |x, tag| med.eval_n(x, tag) + 1.0);
    let kp = m.map_values(|v| v * (-k2));
    let perm = nested_dissection(&sys.h, &sys.coords, &[]);
    let h_ldu = SparseLdu::factor(&sys.h, &perm)?;
    // DT(λ) u = λ⁻² H⁻¹ K' u
    let l = pair.lambda;
    let y = h_ldu.solve_refined(&sys.h, &kp.mul_vec(&pair.u));
    let dt_u: Vec<C64> = y.iter().map(|v| v / (l * l)).collect();
    let hdt = sys.h.mul_vec(&dt_u);
    let inner: C64 = pair.u.iter().zip(&hdt).map(|(a, b)| b * a.conj()).sum();
    let lhs = 1.0 + l * l * inner;
    let rhs = -l * sys.boundary_form(&pair.u);
    Ok(NonlinearIdentity { lhs, rhs })
}

/// One target's outcome in [`analyze`].
#[derive(Clone, Debug)]
pub struct TargetOutcome {
    pub target: C64,
    pub report: Result<PerturbationReport>,
}

/// Solves reference and perturbed systems on `mesh`, matches the reference
/// eigenvalue nearest each target to its continuation and reports the
/// correction.
#[allow(clippy::too_many_arguments)]
pub fn analyze(
    mesh: &Mesh,
    reference: &MediumSpec,
    perturbed: &MediumSpec,
    smoother: &SmootherSpec,
    wave_number: f64,
    targets: &[C64],
    count: usize,
    size: f64,
    opts: &SolveOptions,
) -> Result<Vec<TargetOutcome>> {
    let ref_sys = assembly::assemble_system(mesh, reference, reference, smoother, wave_number)?;
    let pert_sys = assembly::assemble_system(mesh, perturbed, reference, smoother, wave_number)?;
    let ref_sol = solve_near(&ref_sys, targets, count, opts)?;
    let pert_sol = solve_near(&pert_sys, targets, count, opts)?;
    let norms = NormSet::compute(reference, perturbed, mesh)?;
    let pairing = if ref_sol.pairs.is_empty() || pert_sol.pairs.is_empty() {
        None
    } else {
        Some(match_pairs(&ref_sol.pairs, &pert_sol.pairs, &ref_sys.h)?)
    };
    Ok(targets
        .iter()
        .map(|&target| {
            let report = (|| {
                let i = ref_sol
                    .pairs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1.lambda - target).norm().total_cmp(&(b.1.lambda - target).norm()))
                    .map(|(i, _)| i)
                    .ok_or_else(|| Error::InvalidPair(format!("no reference eigenvalue near {target}")))?;
                let j = pairing
                    .as_ref()
                    .and_then(|p| p.partner(i))
                    .ok_or_else(|| Error::InvalidPair(format!("no perturbed partner for λ₀ near {target}")))?;
                let u0 = &ref_sol.pairs[i];
                let corr = correction_term(u0, reference, perturbed, &ref_sys, mesh)?;
                Ok(PerturbationReport::new(size, u0.lambda, pert_sol.pairs[j].lambda, &corr, norms.clone()))
            })();
            TargetOutcome { target, report }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{diag2, RegionMedium};
    use crate::mesh::{build_mesh, RegionSpec};
    use crate::c64;

    fn lshape(t: f64) -> Mesh {
        build_mesh(&RegionSpec::l_shape(1.5), t).unwrap()
    }

    fn reference() -> MediumSpec {
        MediumSpec::isotropic(c64(4.0, 0.0))
    }

    fn aniso(t: f64) -> MediumSpec {
        let a = diag2(1.0 + t, 1.0 - 0.5 * t);
        MediumSpec::homogeneous().with_scatterer(RegionMedium::constant(a, c64(4.0, 0.0)))
    }

    fn reference_pair(mesh: &Mesh, target: f64) -> (AssembledSystem, EigenPair) {
        let med = reference();
        let sys = assembly::assemble_system(mesh, &med, &med, &SmootherSpec::new(0.5, 1.5), 1.0).unwrap();
        let r = solve_near(&sys, &[c64(target, 0.0)], 4, &SolveOptions::default()).unwrap();
        let p = r.nearest(c64(target, 0.0)).unwrap().clone();
        (sys, p)
    }

    #[test]
    fn identical_media_give_zero_correction() {
        let mesh = lshape(0.2);
        let (sys, u0) = reference_pair(&mesh, -2.16);
        let c = correction_term(&u0, &reference(), &reference(), &sys, &mesh).unwrap();
        assert_eq!(c.numerator(), C64::zero());
        assert_eq!(c.value(), C64::zero());
        let norms = NormSet::compute(&reference(), &reference(), &mesh).unwrap();
        let rep = PerturbationReport::new(0.1, u0.lambda, u0.lambda, &c, norms);
        assert!(bound_check(&rep, 1.0, BoundNorm::Isotropic).pass);
    }

    #[test]
    fn anisotropic_term_is_linear_in_t() {
        let mesh = lshape(0.2);
        let (sys, u0) = reference_pair(&mesh, -2.16);
        let base = correction_term(&u0, &reference(), &aniso(1e-2), &sys, &mesh).unwrap();
        assert_eq!(base.n_term, C64::zero());
        for t in [1e-1, 1e-3] {
            let c = correction_term(&u0, &reference(), &aniso(t), &sys, &mesh).unwrap();
            let ratio = (c.a_term / t) / (base.a_term / 1e-2);
            assert!((ratio - 1.0).norm() < 1e-8, "t={t}: {ratio}");
            assert_eq!(c.denominator, base.denominator);
        }
    }

    #[test]
    fn isotropic_perturbation_has_no_gradient_term_and_real_value() {
        let mesh = build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], 0.1), 0.2).unwrap();
        let (sys, u0) = reference_pair(&mesh, -4.25);
        assert!(u0.phase_fixed);
        let pert = reference().with_void(RegionMedium::isotropic(c64(1.0, 0.0)));
        let c = correction_term(&u0, &reference(), &pert, &sys, &mesh).unwrap();
        assert_eq!(c.a_term, C64::zero());
        assert!(c.value().im.abs() <= 1e-10 * c.value().norm());
        // n drops inside the void, so the form decreases the eigenvalue
        assert!(c.value().re < 0.0);
    }

    #[test]
    fn recomputed_shift_agrees_to_first_order() {
        let mesh = lshape(0.2);
        let med = reference();
        let sm = SmootherSpec::new(0.5, 1.5);
        let mut rel = Vec::new();
        for eps in [1e-2, 1e-3, 1e-4] {
            let pert = MediumSpec::isotropic(c64(4.0 + eps, 0.0));
            let out = analyze(&mesh, &med, &pert, &sm, 1.0, &[c64(-2.16, 0.0)], 4, eps, &SolveOptions::default())
                .unwrap();
            let rep = out[0].report.clone().unwrap();
            rel.push(rep.remainder.norm() / rep.shift.norm());
        }
        // the relative remainder is O(ε)
        assert!(rel[0] < 0.1, "{rel:?}");
        assert!(rel[1] < rel[0] * 0.2 && rel[2] < rel[1] * 0.2, "{rel:?}");
    }

    #[test]
    fn nonlinear_identity_holds() {
        let mesh = lshape(0.2);
        let (sys, u0) = reference_pair(&mesh, -4.25);
        let id = nonlinear_identity(&sys, &mesh, &reference(), &u0).unwrap();
        assert!(id.relative_defect() < 1e-8, "{id:?}");
        // H = K + k² M_{n+1} entrywise
        let m = assemble_mass(&mesh, &sys.dofs, |x, tag| reference().eval_n(x, tag) + 1.0);
        let diff = sys.k.add(c64(1.0, 0.0), &m, c64(1.0, 0.0)).add(c64(1.0, 0.0), &sys.h, c64(-1.0, 0.0));
        assert!(diff.max_abs() < 1e-12 * sys.h.max_abs());
    }

    fn fake(lambda: f64, u: Vec<C64>) -> EigenPair {
        EigenPair {
            lambda: c64(lambda, 0.0),
            u,
            residual: 0.0,
            h1_norm: 1.0,
            gap: f64::INFINITY,
            phase_fixed: true,
            target: c64(lambda, 0.0),
        }
    }

    #[test]
    fn matching() {
        let id = crate::sparse::CsrMatrix::from_dense_block(2, 0, &crate::dense::DenseMatrix::identity(2));
        let e0 = vec![c64(1.0, 0.0), C64::zero()];
        let e1 = vec![C64::zero(), c64(1.0, 0.0)];
        let r = [fake(-1.0, e0.clone()), fake(-2.0, e1.clone())];
        let same = match_pairs(&r, &r, &id).unwrap();
        assert_eq!(same.pairs.len(), 2);
        for (i, j, m) in same.pairs {
            assert_eq!(i, j);
            assert!(m.abs() < 1e-15);
        }
        let one = match_pairs(&r, &[fake(-2.01, e1)], &id).unwrap();
        assert_eq!(one.partner(1), Some(0));
        assert_eq!(one.unmatched_reference, vec![0]);
        assert!(match_pairs(&[], &r, &id).is_err());
        assert!(match_pairs(&r, &[], &id).is_err());
    }

    fn synthetic(size: f64, shift: f64, rem: f64) -> PerturbationReport {
        let corr = Correction { a_term: C64::zero(), n_term: c64(shift - rem, 0.0), denominator: c64(1.0, 0.0) };
        let norms = NormSet { n: vec![(1.0, size * size)], a: vec![] };
        PerturbationReport::new(size, c64(-1.0, 0.0), c64(-1.0 + shift, 0.0), &corr, norms)
    }

    #[test]
    fn remainder_fit_of_synthetic_family() {
        let sizes = [0.1, 0.05, 0.02, 0.01];
        let reps: Vec<_> = sizes.iter().map(|&h| synthetic(h, 3.0 * h * h, 5.0 * h.powi(4))).collect();
        let fit = remainder_order(&reps, &sizes).unwrap();
        assert!((fit.shift.slope - 2.0).abs() < 1e-6);
        assert!((fit.remainder.slope - 4.0).abs() < 1e-6);
        assert!((fit.gain - 2.0).abs() < 1e-6);
        assert!(fit.excluded.is_empty());
        let c = fit_bound_constant(&reps, BoundNorm::Isotropic).unwrap();
        assert!(reps.iter().all(|r| bound_check(r, c, BoundNorm::Isotropic).pass));
    }

    #[test]
    fn remainder_fit_rejects_degenerate_input() {
        let sizes = [0.1, 0.05, 0.02, 0.01];
        let zero: Vec<_> = sizes.iter().map(|&h| synthetic(h, 0.0, 0.0)).collect();
        assert!(matches!(remainder_order(&zero, &sizes), Err(Error::InsufficientData(_))));
        let three: Vec<_> = sizes[..3].iter().map(|&h| synthetic(h, h * h, h.powi(4))).collect();
        assert!(remainder_order(&three, &sizes[..3]).is_err());
        let narrow = [0.1, 0.08, 0.06, 0.04];
        let reps: Vec<_> = narrow.iter().map(|&h| synthetic(h, h * h, h.powi(4))).collect();
        assert!(remainder_order(&reps, &narrow).is_err());
    }

    #[test]
    fn degenerate_denominator_is_rejected() {
        let mesh = lshape(0.3);
        let (sys, mut u0) = reference_pair(&mesh, -2.16);
        let off = sys.dofs.interior_count();
        u0.u[off..].iter_mut().for_each(|z| *z = C64::zero());
        let r = correction_term(&u0, &reference(), &aniso(0.1), &sys, &mesh);
        assert!(matches!(r, Err(Error::DegenerateDenominator(_))));
    }
}
