//! The smoothing operator `S_δ = (I + Δ_∂B)^{-δ}` on a circle, realized on
//! its exact Fourier spectrum, and the boundary form `<S_δ u, v>` on P1 traces.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Zero;

use crate::dense::{DenseLu, DenseMatrix};
use crate::mesh::Mesh;
use crate::{c64, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// `M = floor(Nb / 2)` for `Nb` boundary nodes.
    Nyquist,
    Fixed(usize),
}

/// Parametrization in which the boundary Laplacian is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryMetric {
    /// Arclength on the circle of radius `R`: `μ_m = m²/R²`.
    #[default]
    Arclength,
    /// The angle `θ ∈ [0, 2π)`: `μ_m = m²`.
    Angle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmootherSpec {
    pub delta: f64,
    pub radius: f64,
    pub truncation: Truncation,
    pub metric: BoundaryMetric,
}

impl SmootherSpec {
    pub fn new(delta: f64, radius: f64) -> Self {
        Self { delta, radius, truncation: Truncation::Nyquist, metric: BoundaryMetric::Arclength }
    }

    pub fn with_truncation(mut self, m: usize) -> Self {
        self.truncation = Truncation::Fixed(m);
        self
    }

    pub fn with_metric(mut self, metric: BoundaryMetric) -> Self {
        self.metric = metric;
        self
    }

    /// Radius entering `μ_m = (m/ρ)²`.
    pub fn metric_radius(&self) -> f64 {
        match self.metric {
            BoundaryMetric::Arclength => self.radius,
            BoundaryMetric::Angle => 1.0,
        }
    }

    /// Mode cutoff for `boundary_nodes` nodes.
    pub fn resolve(&self, boundary_nodes: usize) -> Result<usize> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("δ must be nonnegative, got {}", self.delta)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        let m = match self.truncation {
            Truncation::Nyquist => boundary_nodes / 2,
            Truncation::Fixed(m) => m,
        };
        if m < 1 {
            return Err(Error::InvalidArgument("truncation must keep at least one mode pair".into()));
        }
        if 2 * m > boundary_nodes {
            return Err(Error::InvalidArgument(format!(
                "truncation {m} exceeds the Nyquist limit of {boundary_nodes} boundary nodes"
            )));
        }
        Ok(m)
    }
}

/// One Laplace–Beltrami eigenpair `(μ_m, Y_m = e^{imθ}/√(2πR))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub m: i64,
    pub mu: f64,
    pub multiplier: f64,
}

impl Mode {
    pub fn eigenfunction(&self, radius: f64, theta: f64) -> C64 {
        let (s, c) = (self.m as f64 * theta).sin_cos();
        c64(c, s) / (2.0 * PI * radius).sqrt()
    }
}

/// Modes `m = -M..=M` ordered by `m`, with `μ_m = (m/radius)²`.
pub fn lb_spectrum(delta: f64, radius: f64, truncation: usize) -> Vec<Mode> {
    let m = truncation as i64;
    (-m..=m)
        .map(|m| {
            let mu = (m as f64 / radius).powi(2);
            Mode { m, mu, multiplier: (1.0 + mu).powf(-delta) }
        })
        .collect()
}

/// Fourier modes together with the trace map `Φ_{m,j} = <φ_j, Y_m>` of the
/// boundary hat functions.
#[derive(Clone, Debug)]
pub struct BoundaryBasis {
    radius: f64,
    modes: Vec<Mode>,
    theta: Vec<f64>,
    trace_map: DenseMatrix,
}

impl BoundaryBasis {
    pub fn new(mesh: &Mesh, spec: &SmootherSpec) -> Result<Self> {
        Self::from_angles(mesh.boundary_theta(), spec)
    }

    /// Basis for P1 hats on a circle with nodes at angles `theta` (strictly
    /// increasing in `[0, 2π)`).
    pub fn from_angles(theta: &[f64], spec: &SmootherSpec) -> Result<Self> {
        let nb = theta.len();
        let m = spec.resolve(nb)?;
        if theta.windows(2).any(|w| !(w[1] > w[0])) || theta[nb - 1] - theta[0] >= 2.0 * PI {
            return Err(Error::InvalidArgument("boundary angles must be strictly increasing within one turn".into()));
        }
        let r = spec.radius;
        let modes = lb_spectrum(spec.delta, spec.metric_radius(), m);
        let scale = r / (2.0 * PI * r).sqrt();
        let mut trace_map = DenseMatrix::zeros(modes.len(), nb);
        for (row, mode) in modes.iter().enumerate() {
            let mf = mode.m as f64;
            let out = trace_map.row_mut(row);
            for j in 0..nb {
                let a = theta[j];
                let b = if j + 1 < nb { theta[j + 1] } else { theta[0] + 2.0 * PI };
                let len = b - a;
                let z = mf * len;
                let (s, c) = (mf * a).sin_cos();
                let phase = c64(c, -s) * (scale * len);
                let (f, g) = hat_moments(z);
                // segment [a, b] carries 1 - s on node j and s on node j + 1
                out[j] += phase * f;
                out[(j + 1) % nb] += phase * g;
            }
        }
        Ok(Self { radius: r, modes, theta: theta.to_vec(), trace_map })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn truncation(&self) -> usize {
        self.modes.len() / 2
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn trace_map(&self) -> &DenseMatrix {
        &self.trace_map
    }

    pub fn node_count(&self) -> usize {
        self.theta.len()
    }

    /// Fourier coefficients `ξ_m = <u_h, Y_m>` of the P1 trace with nodal values `x`.
    pub fn coefficients(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.node_count() {
            return Err(Error::DimensionMismatch { expected: self.node_count(), found: x.len() });
        }
        Ok(self.trace_map.mul_vec(x))
    }

    /// `<S_δ u_h, u_h>` for the P1 trace with nodal values `x`, without
    /// forming the matrix.
    pub fn form(&self, x: &[C64]) -> Result<f64> {
        let xi = self.coefficients(x)?;
        Ok(self.modes.iter().zip(&xi).map(|(m, c)| m.multiplier * c.norm_sqr()).sum())
    }

    /// Boundary form matrix `Σ_m (1+μ_m)^{-δ} conj(Φ_{m,i}) Φ_{m,j}`.
    pub fn boundary_matrix(&self) -> DenseMatrix {
        let nb = self.node_count();
        let nm = self.modes.len();
        // columns of D^{1/2} Φ stored contiguously
        let mut w = vec![C64::zero(); nb * nm];
        for (mi, mode) in self.modes.iter().enumerate() {
            let s = mode.multiplier.sqrt();
            let row = self.trace_map.row(mi);
            for j in 0..nb {
                w[j * nm + mi] = row[j] * s;
            }
        }
        let mut b = DenseMatrix::zeros(nb, nb);
        for i in 0..nb {
            let wi = &w[i * nm..(i + 1) * nm];
            for j in i..nb {
                let wj = &w[j * nm..(j + 1) * nm];
                let mut acc = C64::zero();
                for (p, q) in wi.iter().zip(wj) {
                    acc += p.conj() * q;
                }
                b[(i, j)] = acc;
                b[(j, i)] = acc.conj();
            }
            b[(i, i)] = c64(b[(i, i)].re, 0.0);
        }
        b
    }

    /// Standard P1 mass matrix of the boundary in the angle parametrization.
    pub fn boundary_mass(&self) -> DenseMatrix {
        let nb = self.node_count();
        let mut m = DenseMatrix::zeros(nb, nb);
        for j in 0..nb {
            let k = (j + 1) % nb;
            let b = if j + 1 < nb { self.theta[j + 1] } else { self.theta[0] + 2.0 * PI };
            let len = self.radius * (b - self.theta[j]);
            m[(j, j)] += c64(len / 3.0, 0.0);
            m[(k, k)] += c64(len / 3.0, 0.0);
            m[(j, k)] += c64(len / 6.0, 0.0);
            m[(k, j)] += c64(len / 6.0, 0.0);
        }
        m
    }
}

/// `(∫₀¹ (1-s) e^{-izs} ds, ∫₀¹ s e^{-izs} ds)`.
fn hat_moments(z: f64) -> (C64, C64) {
    if z.abs() < 0.1 {
        // Σ (-iz)^n / n! · (1/((n+1)(n+2)), 1/(n+2))
        let w = c64(0.0, -z);
        let mut term = c64(1.0, 0.0);
        let mut f = C64::zero();
        let mut g = C64::zero();
        for n in 0..20 {
            let nf = n as f64;
            f += term / ((nf + 1.0) * (nf + 2.0));
            g += term / (nf + 2.0);
            term = term * w / (nf + 1.0);
        }
        (f, g)
    } else {
        let (s, c) = z.sin_cos();
        let e = c64(c, -s);
        let iz = c64(0.0, z);
        let g = c64(0.0, 1.0) * e / z + (e - 1.0) / (z * z);
        let total = (c64(1.0, 0.0) - e) / iz;
        (total - g, g)
    }
}

/// Dense boundary matrix `B_δ` over the boundary nodes of `mesh`, in their
/// angular order.
pub fn assemble_boundary_matrix(mesh: &Mesh, spec: &SmootherSpec) -> Result<DenseMatrix> {
    Ok(BoundaryBasis::new(mesh, spec)?.boundary_matrix())
}

/// Applies `S_δ` to nodal trace values through the Galerkin relation
/// `M_∂ y = B_δ x`, with `M_∂` the boundary mass matrix.
pub fn apply_smoother(basis: &BoundaryBasis, trace: &[C64]) -> Result<Vec<C64>> {
    if trace.len() != basis.node_count() {
        return Err(Error::DimensionMismatch { expected: basis.node_count(), found: trace.len() });
    }
    let rhs = basis.boundary_matrix().mul_vec(trace);
    Ok(DenseLu::factor(&basis.boundary_mass())?.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, RegionSpec};
    use proptest::prelude::*;

    fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
    }

    fn jittered(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed;
        (0..n)
            .map(|i| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                2.0 * PI * (i as f64 + 0.3 * (u - 0.5)) / n as f64 + 0.01
            })
            .collect()
    }

    fn sample(theta: &[f64], f: impl Fn(f64) -> C64) -> Vec<C64> {
        theta.iter().map(|&t| f(t)).collect()
    }

    #[test]
    fn spectrum_values() {
        let modes = lb_spectrum(0.5, 1.5, 4);
        assert_eq!(modes.len(), 9);
        let zero = modes.iter().find(|m| m.m == 0).unwrap();
        assert_eq!(zero.mu, 0.0);
        assert_eq!(zero.multiplier, 1.0);
        let y0 = zero.eigenfunction(1.5, 0.7);
        assert!((y0.re - (2.0 * PI * 1.5).powf(-0.5)).abs() < 1e-15 && y0.im == 0.0);
        let three = modes.iter().find(|m| m.m == 3).unwrap();
        assert!((three.mu - 4.0).abs() < 1e-14);
        assert!((three.multiplier - 5f64.powf(-0.5)).abs() < 1e-15);
        for w in modes[4..].windows(2) {
            assert!(w[1].multiplier <= w[0].multiplier);
        }
        assert!(lb_spectrum(0.0, 1.5, 4).iter().all(|m| m.multiplier == 1.0));
    }

    #[test]
    fn angle_metric_drops_the_radius() {
        let spec = SmootherSpec::new(0.5, 1.5).with_metric(BoundaryMetric::Angle).with_truncation(3);
        assert_eq!(spec.metric_radius(), 1.0);
        let theta: Vec<f64> = (0..64).map(|j| 2.0 * PI * j as f64 / 64.0).collect();
        let basis = BoundaryBasis::from_angles(&theta, &spec).unwrap();
        let two = basis.modes().iter().find(|m| m.m == 2).unwrap();
        assert_eq!(two.mu, 4.0);
        assert!((two.multiplier - 5f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(SmootherSpec::new(0.5, 1.5).metric_radius(), 1.5);
    }

    #[test]
    fn hat_moments_series_matches_closed_form() {
        for &z in &[0.0999, -0.0999, 0.05] {
            let (fs, gs) = hat_moments(z);
            let (s, c) = z.sin_cos();
            let e = c64(c, -s);
            let g = c64(0.0, 1.0) * e / z + (e - 1.0) / (z * z);
            let f = (c64(1.0, 0.0) - e) / c64(0.0, z) - g;
            assert!((fs - f).norm() < 1e-12 && (gs - g).norm() < 1e-12);
        }
        let (f, g) = hat_moments(0.0);
        assert!((f - 0.5).norm() < 1e-16 && (g - 0.5).norm() < 1e-16);
        // ∫₀¹ s e^{-izs} ds at z = π: (i e^{-iπ})/π + (e^{-iπ} - 1)/π²
        let (_, g) = hat_moments(PI);
        assert!((g - c64(-2.0 / (PI * PI), -1.0 / PI)).norm() < 1e-15);
    }

    #[test]
    fn nyquist_limit_and_lengths() {
        let theta = uniform(10);
        assert!(BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.5, 1.0).with_truncation(6)).is_err());
        assert!(BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.5, 1.0).with_truncation(0)).is_err());
        let b = BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.5, 1.0)).unwrap();
        assert_eq!(b.truncation(), 5);
        assert!(apply_smoother(&b, &[C64::zero(); 3]).is_err());
        assert!(BoundaryBasis::from_angles(&theta, &SmootherSpec::new(-0.5, 1.0)).is_err());
    }

    #[test]
    fn delta_zero_reproduces_boundary_mass_on_band_limited_traces() {
        let theta = jittered(2000, 7);
        let basis = BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.0, 1.5)).unwrap();
        let m = basis.boundary_mass();
        for k in 0..6 {
            let x = sample(&theta, |t| c64((k as f64 * t).cos(), (k as f64 * t + 0.3).sin()));
            let qb = basis.form(&x).unwrap();
            let qm = m.quad_form(&x);
            assert!((qb - qm).norm() < 1e-8, "k={k}: {qb} vs {qm}");
        }
        let small = BoundaryBasis::from_angles(&theta[..200], &SmootherSpec::new(0.0, 1.5));
        assert!(small.is_ok());
    }

    #[test]
    fn constants_are_preserved() {
        let theta = jittered(64, 3);
        let spec = SmootherSpec::new(0.5, 1.5);
        let basis = BoundaryBasis::from_angles(&theta, &spec).unwrap();
        let ones = vec![c64(1.0, 0.0); 64];
        let b = basis.boundary_matrix();
        let total: C64 = b.mul_vec(&ones).iter().sum();
        assert!((total - 2.0 * PI * 1.5).norm() < 1e-12);
        let y = apply_smoother(&basis, &ones.iter().map(|v| v * 2.5).collect::<Vec<_>>()).unwrap();
        assert!(y.iter().all(|v| (v - 2.5).norm() < 1e-12));
    }

    #[test]
    fn smoother_scales_low_modes() {
        let theta = jittered(400, 11);
        let basis = BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.5, 1.5)).unwrap();
        let x = sample(&theta, |t| c64(t.cos(), 0.0));
        let y = apply_smoother(&basis, &x).unwrap();
        let factor = (1.0_f64 + 1.0 / 2.25).powf(-0.5);
        assert!((factor - 0.8321).abs() < 1e-4);
        // P1 projection error is O(h²)
        let dev = x.iter().zip(&y).map(|(a, b)| (a * factor - b).norm()).fold(0.0, f64::max);
        assert!(dev < 5e-5, "{dev}");
        // sampled trigonometric polynomials are band-limited P1 traces on a
        // uniform grid
        let theta = uniform(800);
        let identity = BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.0, 1.5)).unwrap();
        for k in 0..3 {
            let x = sample(&theta, |t| c64((k as f64 * t).cos(), (k as f64 * t).sin()));
            let y = apply_smoother(&identity, &x).unwrap();
            let dev = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(dev < 1e-10, "k={k}: {dev}");
        }
    }

    #[test]
    fn pure_modes_are_exact() {
        let n = 16000;
        let theta = jittered(n, 5);
        let r = 1.5;
        let basis = BoundaryBasis::from_angles(&theta, &SmootherSpec::new(0.5, r).with_truncation(8)).unwrap();
        for m in [0i64, 1, 2, 5] {
            let x = sample(&theta, |t| c64((m as f64 * t).cos(), (m as f64 * t).sin()));
            let q = basis.form(&x).unwrap();
            let exact = 2.0 * PI * r * (1.0 + (m as f64 / r).powi(2)).powf(-0.5);
            assert!((q / exact - 1.0).abs() < 1e-6, "m={m}: {q} vs {exact}");
        }
        // matrix and matrix-free forms agree
        let coarse = BoundaryBasis::from_angles(&jittered(60, 2), &SmootherSpec::new(0.5, r)).unwrap();
        let x = sample(&jittered(60, 2), |t| c64(t.sin(), (3.0 * t).cos()));
        let q = coarse.boundary_matrix().quad_form(&x);
        assert!((q.re - coarse.form(&x).unwrap()).abs() < 1e-13 && q.im.abs() < 1e-13);
    }

    #[test]
    fn mesh_boundary_matrix_is_hermitian_psd() {
        let mesh = build_mesh(&RegionSpec::disk(1.5), 0.4).unwrap();
        let b = assemble_boundary_matrix(&mesh, &SmootherSpec::new(0.5, 1.5)).unwrap();
        assert_eq!(b.hermitian_defect(), 0.0);
        let eig = b.hermitian_eigenvalues().unwrap();
        assert!(eig[0] >= -1e-12 * b.norm1());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn form_is_nonnegative_and_decreasing_in_delta(
            seed in 0u64..1000,
            re in proptest::collection::vec(-1.0f64..1.0, 48),
            im in proptest::collection::vec(-1.0f64..1.0, 48),
            d1 in 0.0f64..1.0,
            dd in 0.0f64..1.0,
        ) {
            let theta = jittered(48, seed);
            let x: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| c64(a, b)).collect();
            let q = |d: f64| BoundaryBasis::from_angles(&theta, &SmootherSpec::new(d, 1.5)).unwrap().boundary_matrix().quad_form(&x);
            let q1 = q(d1);
            let q2 = q(d1 + dd);
            prop_assert!(q1.im.abs() <= 1e-12 * q1.re.abs().max(1e-12));
            prop_assert!(q2.re >= -1e-13);
            prop_assert!(q2.re <= q1.re + 1e-12 * q1.re.abs());
        }
    }
}
