use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use stekloff_core::assembly::{assemble_system, AssembledSystem, Structure};
use stekloff_core::coefficients::{Mat2, MediumSpec, RegionMedium};
use stekloff_core::eigen::{normalize, solve_near, EigenPair, SolveOptions};
use stekloff_core::mesh::{build_mesh, Mesh, RegionSpec};
use stekloff_core::perturbation::correction_term;
use stekloff_core::smoothing::SmootherSpec;
use stekloff_core::stats::fit_slope;

fn mesh() -> &'static Mesh {
    static MESH: OnceLock<Mesh> = OnceLock::new();
    MESH.get_or_init(|| build_mesh(&RegionSpec::l_shape(1.5).with_void([0.1, 0.4], 0.15), 0.35).unwrap())
}

fn hermitian(a: f64, c: f64, re: f64, im: f64) -> Mat2 {
    // |b|² < ac keeps the matrix positive definite
    let b = C64::new(re, im) * (a * c).sqrt() * 0.7;
    [[C64::new(a, 0.0), b], [b.conj(), C64::new(c, 0.0)]]
}

fn system(med: &MediumSpec, delta: f64) -> AssembledSystem {
    let reference = MediumSpec::isotropic(C64::new(4.0, 0.0));
    assemble_system(mesh(), med, &reference, &SmootherSpec::new(delta, 1.5), 1.0).unwrap()
}

fn unit_disk() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| (r * t.cos(), r * t.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assembled_matrices_keep_their_structure(
        a in 0.5f64..3.0, c in 0.5f64..3.0, (re, im) in unit_disk(), n in 1.0f64..6.0, delta in 0.0f64..1.0,
    ) {
        let med = MediumSpec::homogeneous().with_scatterer(RegionMedium::constant(hermitian(a, c, re, im), C64::new(n, 0.0)));
        let sys = system(&med, delta);
        prop_assert!(sys.k.hermitian_defect() <= 1e-12 * sys.k.max_abs());
        prop_assert_eq!(sys.structure, Structure::Hermitian);
        let h = sys.h.to_dense().hermitian_eigenvalues().unwrap();
        prop_assert!(h[0] > 0.0);
        let b = sys.bdelta_block.hermitian_eigenvalues().unwrap();
        prop_assert!(b[0] >= -1e-12 * sys.bdelta_block.norm1());
    }

    #[test]
    fn absorbing_index_breaks_hermitian_symmetry_only(n_imag in 0.01f64..2.0) {
        let med = MediumSpec::isotropic(C64::new(4.0, n_imag));
        let sys = system(&med, 0.5);
        prop_assert_eq!(sys.structure, Structure::ComplexSymmetric);
        prop_assert!(sys.k.symmetric_defect() <= 1e-12 * sys.k.max_abs());
    }

    #[test]
    fn normalization_is_idempotent(
        re in proptest::collection::vec(-1.0f64..1.0, 1..4), im in proptest::collection::vec(-1.0f64..1.0, 1..4),
        seed in 0u64..1000,
    ) {
        let sys = system(&MediumSpec::isotropic(C64::new(4.0, 0.0)), 0.5);
        let n = sys.dof_count();
        let u: Vec<C64> = (0..n)
            .map(|i| {
                let j = (i as u64).wrapping_mul(2654435761).wrapping_add(seed) as usize;
                C64::new(re[j % re.len()] + 1e-3 * i as f64, im[j % im.len()])
            })
            .collect();
        let pair = EigenPair {
            lambda: C64::new(-1.0, 0.0), u, residual: 0.0, h1_norm: f64::NAN, gap: f64::INFINITY,
            phase_fixed: false, target: C64::new(-1.0, 0.0),
        };
        let once = normalize(&pair, &sys.h).unwrap();
        let twice = normalize(&once, &sys.h).unwrap();
        prop_assert!((sys.h.quad_form(&once.u).re - 1.0).abs() < 1e-12);
        let drift = once.u.iter().zip(&twice.u).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-12);
    }

    #[test]
    fn correction_is_real_and_a_term_linear(n_void in 1.0f64..6.0, dx in -1.0f64..1.0, dy in -1.0f64..1.0, t in 1e-4f64..1e-1) {
        let reference = MediumSpec::isotropic(C64::new(4.0, 0.0));
        let sys = system(&reference, 0.5);
        let report = solve_near(&sys, &[C64::new(-2.16, 0.0)], 3, &SolveOptions::default()).unwrap();
        let u0 = &report.pairs[0];
        let void = reference.clone().with_void(RegionMedium::isotropic(C64::new(n_void, 0.0)));
        let corr = correction_term(u0, &reference, &void, &sys, mesh()).unwrap();
        prop_assert!(corr.value().im.abs() <= 1e-10 * (1.0 + corr.value().norm()));
        let aniso = |s: f64| {
            let a = [[C64::new(1.0 + s * dx, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0 + s * dy, 0.0)]];
            MediumSpec::homogeneous().with_scatterer(RegionMedium::constant(a, C64::new(4.0, 0.0)))
        };
        let unit = correction_term(u0, &reference, &aniso(1.0), &sys, mesh()).unwrap().a_term;
        let scaled = correction_term(u0, &reference, &aniso(t), &sys, mesh()).unwrap().a_term;
        prop_assert!((scaled - unit * t).norm() <= 1e-10 * unit.norm() * t + 1e-14);
    }

    #[test]
    fn log_log_fit_recovers_power_laws(p in -3.0f64..4.0, c in 1e-3f64..1e3, lo in 1e-3f64..1e-1, n in 3usize..9) {
        let x: Vec<f64> = (0..n).map(|i| lo * 1.7f64.powi(i as i32)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        let fit = fit_slope(&x, &y).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!((fit.predict(x[0]) / y[0] - 1.0).abs() < 1e-8);
    }
}
