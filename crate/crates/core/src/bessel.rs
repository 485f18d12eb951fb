//! Bessel functions of the first kind for integer order, and the closed-form
//! δ-Stekloff spectrum of the homogeneous disk built from them.

/// `J_m(x)` for integer `m` and real `x`.
///
/// Power series for `|x| <= 12`; Miller's backward recurrence normalized by
/// `J_0 + 2 Σ J_{2k} = 1` beyond that.
pub fn bessel_j(m: i32, x: f64) -> f64 {
    if m < 0 {
        let v = bessel_j(-m, x);
        return if m % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(m, -x);
        return if m % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x <= 12.0 {
        series(m as u32, x)
    } else {
        miller(m as u32, x)
    }
}

fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^m / m!
    let mut term = 1.0;
    for j in 1..=m {
        term *= half / j as f64;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term *= -q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 200 {
            break;
        }
        k += 1;
    }
    sum
}

fn miller(m: u32, x: f64) -> f64 {
    let start = {
        let base = (m as f64).max(x) as u32 + 40 + (2.0 * x.sqrt()) as u32 * 4;
        base + (base & 1)
    };
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut result = 0.0;
    let mut k = start;
    while k > 0 {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if k == m {
            result = cur;
        }
        if k > 0 && k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            result *= s;
        }
    }
    norm += cur;
    result / norm
}

/// `J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2`.
pub fn bessel_j_prime(m: i32, x: f64) -> f64 {
    0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
}

/// Closed-form δ-Stekloff eigenvalue of Fourier branch `m` on the homogeneous
/// disk of radius `radius` (`A = I`, `n = 1`):
/// `(1 + m²/R²)^δ · (-k J_m'(kR) / J_m(kR))`.
///
/// Returns `None` when `J_m(kR)` vanishes to within `1e-12` (a Dirichlet
/// resonance, where the branch has no eigenvalue).
pub fn disk_eigenvalue(m: i32, wave_number: f64, radius: f64, delta: f64) -> Option<f64> {
    let x = wave_number * radius;
    let jm = bessel_j(m, x);
    if jm.abs() < 1e-12 {
        return None;
    }
    let mu = (m as f64 / radius).powi(2);
    Some((1.0 + mu).powf(delta) * (-wave_number * bessel_j_prime(m, x) / jm))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent library implementation.
    #[test]
    fn reference_values() {
        let cases = [
            (0, 1.5, 0.5118276717359181),
            (1, 1.5, 0.5579365079100995),
            (2, 1.5, 0.23208767214421475),
            (5, 1.5, 0.0017994217673606126),
            (3, 7.5, -0.2580609131934603),
            (10, 2.0, 2.5153862827167347e-07),
        ];
        for (m, x, want) in cases {
            let got = bessel_j(m, x);
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1e-3), "J_{m}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_and_recurrence_agree_in_overlap() {
        for m in 0..8u32 {
            for &x in &[4.0, 8.0, 11.5] {
                let s = series(m, x);
                let r = miller(m, x);
                assert!((s - r).abs() < 1e-12, "m={m} x={x}: {s} vs {r}");
            }
        }
    }

    #[test]
    fn large_argument_uses_stable_route() {
        // J_0(20) = 0.1670246643405831
        assert!((bessel_j(0, 20.0) - 0.1670246643405831).abs() < 1e-13);
        // three-term recurrence J_{m-1} + J_{m+1} = 2m/x J_m
        let x = 17.3;
        for m in 1..10 {
            let lhs = bessel_j(m - 1, x) + bessel_j(m + 1, x);
            let rhs = 2.0 * m as f64 / x * bessel_j(m, x);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_order_and_argument_symmetry() {
        assert!((bessel_j(-3, 1.2) + bessel_j(3, 1.2)).abs() < 1e-16);
        assert!((bessel_j(2, -1.2) - bessel_j(2, 1.2)).abs() < 1e-16);
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(4, 0.0), 0.0);
    }

    #[test]
    fn homogeneous_disk_branches() {
        // m = 0, δ = 0: J_1(1.5)/J_0(1.5)
        let l0 = disk_eigenvalue(0, 1.0, 1.5, 0.0).unwrap();
        assert!((l0 - 1.0900866418921789).abs() < 1e-13);
        // δ multiplies branch m by (1 + m²/R²)^δ
        let a = disk_eigenvalue(1, 1.0, 1.5, 0.0).unwrap();
        let b = disk_eigenvalue(1, 1.0, 1.5, 0.5).unwrap();
        assert!((a - -0.25069160704283755).abs() < 1e-13);
        assert!((b / a - (1.0_f64 + 1.0 / 2.25).sqrt()).abs() < 1e-14);
        assert!((b - -0.30129381450714005).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_resonance_is_skipped() {
        // first zero of J_0
        let j01 = 2.404825557695773;
        assert!(disk_eigenvalue(0, j01, 1.0, 0.0).is_none());
    }
}
