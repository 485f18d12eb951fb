//! Region-wise coefficient pairs `(A, n)` and `L^p` norms of their differences.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::mesh::{Mesh, Point, RegionTag};
use crate::{c64, Error, Result, C64};

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub fn identity2() -> Mat2 {
    [[C64::one(), C64::zero()], [C64::zero(), C64::one()]]
}

pub fn diag2(a: f64, b: f64) -> Mat2 {
    [[c64(a, 0.0), C64::zero()], [C64::zero(), c64(b, 0.0)]]
}

/// A coefficient that is either constant or given by a callback of position.
#[derive(Clone)]
pub enum Field<T> {
    Constant(T),
    Function(Arc<dyn Fn(Point) -> T + Send + Sync>),
}

impl<T: Copy> Field<T> {
    pub fn function(f: impl Fn(Point) -> T + Send + Sync + 'static) -> Self {
        Field::Function(Arc::new(f))
    }

    pub fn eval(&self, x: Point) -> T {
        match self {
            Field::Constant(v) => *v,
            Field::Function(f) => f(x),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Field::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegionMedium {
    pub a: Field<Mat2>,
    pub n: Field<C64>,
}

impl RegionMedium {
    pub fn constant(a: Mat2, n: C64) -> Self {
        Self { a: Field::Constant(a), n: Field::Constant(n) }
    }

    pub fn isotropic(n: C64) -> Self {
        Self::constant(identity2(), n)
    }
}

impl Default for RegionMedium {
    fn default() -> Self {
        Self::isotropic(C64::one())
    }
}

/// Coefficients on the scatterer and the void. The outer region always
/// carries `A = I`, `n = 1`; an unset void inherits the scatterer medium.
#[derive(Clone, Debug, Default)]
pub struct MediumSpec {
    pub scatterer: RegionMedium,
    pub void: Option<RegionMedium>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientField {
    A,
    N,
}

impl MediumSpec {
    /// `A = I`, `n = 1` everywhere.
    pub fn homogeneous() -> Self {
        Self::default()
    }

    pub fn isotropic(n_scatterer: C64) -> Self {
        Self { scatterer: RegionMedium::isotropic(n_scatterer), void: None }
    }

    pub fn with_scatterer(mut self, medium: RegionMedium) -> Self {
        self.scatterer = medium;
        self
    }

    pub fn with_void(mut self, medium: RegionMedium) -> Self {
        self.void = Some(medium);
        self
    }

    fn region(&self, tag: RegionTag) -> Option<&RegionMedium> {
        match tag {
            RegionTag::Outer => None,
            RegionTag::Scatterer => Some(&self.scatterer),
            RegionTag::Void => Some(self.void.as_ref().unwrap_or(&self.scatterer)),
        }
    }

    pub fn eval_n(&self, x: Point, tag: RegionTag) -> C64 {
        self.region(tag).map_or(C64::one(), |m| m.n.eval(x))
    }

    pub fn eval_a(&self, x: Point, tag: RegionTag) -> Mat2 {
        self.region(tag).map_or_else(identity2, |m| m.a.eval(x))
    }

    /// True when `A` is real symmetric and `n` real at every quadrature point.
    pub fn is_real_symmetric_on(&self, mesh: &Mesh) -> bool {
        quadrature_points(mesh).all(|(x, tag, _)| {
            let a = self.eval_a(x, tag);
            let n = self.eval_n(x, tag);
            n.im == 0.0 && a.iter().flatten().all(|v| v.im == 0.0) && a[0][1] == a[1][0]
        })
    }

    /// Checks `A` Hermitian positive-definite, `Re n > 0` and `Im n >= 0` at
    /// every quadrature point.
    pub fn validate_on(&self, mesh: &Mesh) -> Result<()> {
        for (x, tag, _) in quadrature_points(mesh) {
            let a = self.eval_a(x, tag);
            let scale = a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
            let defect = (a[0][0].im.abs())
                .max(a[1][1].im.abs())
                .max((a[0][1] - a[1][0].conj()).norm());
            if defect > 1e-12 * scale.max(1.0) {
                return Err(Error::InvalidMedium(format!("A is not Hermitian at {x:?}")));
            }
            let (lo, _) = hermitian_eigenvalues2(&a);
            if !(lo > 0.0) {
                return Err(Error::InvalidMedium(format!("A is not positive-definite at {x:?} (λ_min = {lo})")));
            }
            let n = self.eval_n(x, tag);
            if !(n.re > 0.0) || n.im < 0.0 || !n.is_finite() {
                return Err(Error::InvalidMedium(format!("n = {n} violates Re n > 0, Im n >= 0 at {x:?}")));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of the Hermitian part of a 2×2 matrix, ascending.
pub fn hermitian_eigenvalues2(a: &Mat2) -> (f64, f64) {
    let p = a[0][0].re;
    let q = a[1][1].re;
    let off = 0.5 * (a[0][1] + a[1][0].conj());
    let mean = 0.5 * (p + q);
    let r = (0.25 * (p - q) * (p - q) + off.norm_sqr()).sqrt();
    (mean - r, mean + r)
}

/// Mid-edge quadrature points `(x, tag, weight)` of every triangle, in triangle
/// order. The rule is exact for quadratics.
pub fn quadrature_points(mesh: &Mesh) -> impl Iterator<Item = (Point, RegionTag, f64)> + '_ {
    (0..mesh.triangle_count()).flat_map(move |t| {
        let p = mesh.triangle_points(t);
        let w = mesh.triangle_area(t) / 3.0;
        let tag = mesh.tags()[t];
        (0..3).map(move |l| {
            let (a, b) = (p[(l + 1) % 3], p[(l + 2) % 3]);
            ([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0], tag, w)
        })
    })
}

/// `L^p(B)` norm of a difference of two media on `mesh`.
///
/// For `A` this is the sum of the entrywise norms. `p = f64::INFINITY` gives
/// the maximum over quadrature points.
pub fn lp_diff_norm(med1: &MediumSpec, med2: &MediumSpec, mesh: &Mesh, p: f64, field: CoefficientField) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p exponent must be at least 1, got {p}")));
    }
    let diffs: Vec<([f64; 4], f64)> = quadrature_points(mesh)
        .map(|(x, tag, w)| {
            let d = match field {
                CoefficientField::N => [(med1.eval_n(x, tag) - med2.eval_n(x, tag)).norm(), 0.0, 0.0, 0.0],
                CoefficientField::A => {
                    let a = med1.eval_a(x, tag);
                    let b = med2.eval_a(x, tag);
                    [
                        (a[0][0] - b[0][0]).norm(),
                        (a[0][1] - b[0][1]).norm(),
                        (a[1][0] - b[1][0]).norm(),
                        (a[1][1] - b[1][1]).norm(),
                    ]
                }
            };
            (d, w)
        })
        .collect();
    let components = if field == CoefficientField::N { 1 } else { 4 };
    let total = (0..components)
        .map(|c| {
            if p.is_infinite() {
                diffs.iter().map(|(d, _)| d[c]).fold(0.0, f64::max)
            } else {
                pairwise_sum(&diffs.iter().map(|(d, w)| w * d[c].powf(p)).collect::<Vec<_>>()).powf(1.0 / p)
            }
        })
        .sum();
    Ok(total)
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}
