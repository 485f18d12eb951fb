//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use stekloff_core::coefficients::{Mat2, MediumSpec, RegionMedium};
use stekloff_core::eigen::SolveOptions;
use stekloff_core::mesh::{Point, RegionSpec};
use stekloff_core::smoothing::{BoundaryMetric, SmootherSpec};

use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub physics: PhysicsConfig,
    pub media: MediaConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub mesh: MeshConfig,
    pub oracle: OracleConfig,
    pub check: CheckConfig,
    pub output: OutputConfig,
}


#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScattererShape {
    None,
    LShape,
    Polygon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub disk_radius: f64,
    pub scatterer: ScattererShape,
    /// Vertices for `scatterer = "polygon"`.
    pub vertices: Vec<[f64; 2]>,
    pub void_center: [f64; 2],
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { disk_radius: 1.5, scatterer: ScattererShape::LShape, vertices: Vec::new(), void_center: [0.1, 0.4] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricConfig {
    Arclength,
    Angle,
}

impl From<MetricConfig> for BoundaryMetric {
    fn from(m: MetricConfig) -> Self {
        match m {
            MetricConfig::Arclength => BoundaryMetric::Arclength,
            MetricConfig::Angle => BoundaryMetric::Angle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub wave_number: f64,
    pub delta: f64,
    pub metric: MetricConfig,
    /// Fixed Fourier cutoff; the Nyquist limit of the boundary when unset.
    pub truncation: Option<usize>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { wave_number: 1.0, delta: 0.5, metric: MetricConfig::Angle, truncation: None }
    }
}

/// Constant coefficients of one region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub n: f64,
    pub n_imag: f64,
    /// Real part of `A`, row-major.
    pub a: [[f64; 2]; 2],
    pub a_imag: [[f64; 2]; 2],
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self { n: 1.0, n_imag: 0.0, a: [[1.0, 0.0], [0.0, 1.0]], a_imag: [[0.0; 2]; 2] }
    }
}

impl RegionConfig {
    pub fn isotropic(n: f64) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn medium(&self) -> RegionMedium {
        let a: Mat2 = std::array::from_fn(|r| std::array::from_fn(|c| Complex64::new(self.a[r][c], self.a_imag[r][c])));
        RegionMedium::constant(a, Complex64::new(self.n, self.n_imag))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaConfig {
    /// Scatterer coefficients of the reference medium.
    pub reference: RegionConfig,
    /// Scatterer coefficients of the perturbed medium; the reference when unset.
    pub perturbed: Option<RegionConfig>,
    /// Coefficients inside the void of the perturbed medium.
    pub void: RegionConfig,
}

impl Default for MediaConfig {
    fn default() -> Self {
        Self { reference: RegionConfig::isotropic(4.0), perturbed: None, void: RegionConfig::isotropic(1.0) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Real parts of the shifts; seeded from a coarse dense solve when empty.
    pub targets: Vec<f64>,
    pub targets_imag: Vec<f64>,
    pub count: usize,
    pub residual_tol: f64,
    pub krylov_dim: Option<usize>,
    pub max_restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            targets: vec![-4.25, -2.16],
            targets_imag: Vec::new(),
            count: 4,
            residual_tol: o.residual_tol,
            krylov_dim: None,
            max_restarts: o.max_restarts,
        }
    }
}

/// `count` logarithmically spaced radii from `hi` down to `lo`.
pub fn log_radii(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    (0..count).map(|i| hi * (lo / hi).powf(i as f64 / (count - 1) as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub radii: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { radii: log_radii(0.1, 0.01, 7) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub target_size: f64,
    pub refine: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { target_size: 0.05, refine: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub max_m: i32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_m: 5 }
    }
}

/// Thresholds for the `check` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Expected reference eigenvalues, matched to the targets in order.
    pub expected: Vec<f64>,
    pub tolerance: f64,
    pub min_shift_slope: f64,
    pub min_remainder_gain: f64,
    pub max_ratio_spread: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            expected: vec![-4.25, -2.16],
            tolerance: 0.05,
            min_shift_slope: 1.8,
            min_remainder_gain: 1.5,
            max_ratio_spread: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn bad(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Smallest boundary segment the mesher is expected to produce.
    pub fn finest_segment(&self) -> f64 {
        self.mesh.target_size / 16.0 / (1u64 << self.mesh.refine.min(30)) as f64
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let g = &self.geometry;
        if !(g.disk_radius > 0.0 && g.disk_radius.is_finite()) {
            return Err(bad(format!("geometry.disk_radius must be positive, got {}", g.disk_radius)));
        }
        if g.scatterer == ScattererShape::Polygon && g.vertices.len() < 3 {
            return Err(bad("geometry.vertices needs at least three points for a polygon scatterer"));
        }
        let p = &self.physics;
        if !(p.wave_number > 0.0 && p.wave_number.is_finite()) {
            return Err(bad(format!("physics.wave_number must be positive, got {}", p.wave_number)));
        }
        if !(p.delta >= 0.0 && p.delta.is_finite()) {
            return Err(bad(format!("physics.delta must be nonnegative, got {}", p.delta)));
        }
        if p.truncation == Some(0) {
            return Err(bad("physics.truncation must be at least 1"));
        }
        let s = &self.solver;
        if s.count == 0 {
            return Err(bad("solver.count must be positive"));
        }
        if !s.targets_imag.is_empty() && s.targets_imag.len() != s.targets.len() {
            return Err(bad("solver.targets_imag must match solver.targets in length"));
        }
        if s.targets.iter().chain(&s.targets_imag).any(|t| !t.is_finite()) {
            return Err(bad("solver targets must be finite"));
        }
        if !(s.residual_tol > 0.0) {
            return Err(bad("solver.residual_tol must be positive"));
        }
        let m = &self.mesh;
        if !(m.target_size > 0.0 && m.target_size.is_finite()) {
            return Err(bad(format!("mesh.target_size must be positive, got {}", m.target_size)));
        }
        if m.refine > 6 {
            return Err(bad(format!("mesh.refine = {} is beyond the supported 6 levels", m.refine)));
        }
        let radii = &self.sweep.radii;
        if radii.is_empty() {
            return Err(bad("sweep.radii must not be empty"));
        }
        if radii.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(bad("sweep.radii must be strictly decreasing"));
        }
        // without a scatterer there is nothing to hold a void
        let floor = 2.0 * self.finest_segment();
        let sweeps = g.scatterer != ScattererShape::None;
        if let Some(r) = radii.iter().find(|&&r| sweeps && !(r >= floor * (1.0 - 1e-12))) {
            return Err(bad(format!("void radius {r} is below the resolvable {floor}")));
        }
        if self.oracle.max_m < 0 {
            return Err(bad("oracle.max_m must be nonnegative"));
        }
        Ok(())
    }

    pub fn region_spec(&self, void_radius: Option<f64>) -> RegionSpec {
        let r = self.geometry.disk_radius;
        let mut spec = match self.geometry.scatterer {
            ScattererShape::None => RegionSpec::disk(r),
            ScattererShape::LShape => RegionSpec::l_shape(r),
            ScattererShape::Polygon => {
                let poly: Vec<Point> = self.geometry.vertices.clone();
                RegionSpec { disk_radius: r, scatterer: Some(poly), void: None }
            }
        };
        if let Some(h) = void_radius {
            spec = spec.with_void(self.geometry.void_center, h);
        }
        spec
    }

    pub fn reference_medium(&self) -> MediumSpec {
        MediumSpec::homogeneous().with_scatterer(self.media.reference.medium())
    }

    pub fn perturbed_medium(&self) -> MediumSpec {
        let scatterer = self.media.perturbed.as_ref().unwrap_or(&self.media.reference);
        MediumSpec::homogeneous().with_scatterer(scatterer.medium()).with_void(self.media.void.medium())
    }

    pub fn smoother(&self) -> SmootherSpec {
        let s = SmootherSpec::new(self.physics.delta, self.geometry.disk_radius).with_metric(self.physics.metric.into());
        match self.physics.truncation {
            Some(m) => s.with_truncation(m),
            None => s,
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            krylov_dim: self.solver.krylov_dim,
            residual_tol: self.solver.residual_tol,
            max_restarts: self.solver.max_restarts,
            ..SolveOptions::default()
        }
    }

    pub fn targets(&self) -> Vec<Complex64> {
        self.solver
            .targets
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, self.solver.targets_imag.get(i).copied().unwrap_or(0.0)))
            .collect()
    }

    /// Configuration for the homogeneous disk used by the Bessel oracle.
    pub fn homogeneous_disk() -> Self {
        let mut cfg = Self::default();
        cfg.geometry.scatterer = ScattererShape::None;
        cfg.physics.metric = MetricConfig::Arclength;
        cfg.media.reference = RegionConfig::isotropic(1.0);
        cfg.solver.targets = vec![-1.5];
        cfg.solver.count = 14;
        cfg.check.expected = Vec::new();
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_void_experiment() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.physics.wave_number, 1.0);
        assert_eq!(cfg.physics.delta, 0.5);
        assert_eq!(cfg.sweep.radii.len(), 7);
        assert!((cfg.sweep.radii[0] - 0.1).abs() < 1e-15);
        assert!((cfg.sweep.radii[6] - 0.01).abs() < 1e-15);
        let ratios: Vec<f64> = cfg.sweep.radii.windows(2).map(|w| w[0] / w[1]).collect();
        assert!(ratios.iter().all(|r| (r - 10f64.powf(1.0 / 6.0)).abs() < 1e-12));
        assert_eq!(cfg.geometry.void_center, [0.1, 0.4]);
    }

    #[test]
    fn round_trip_is_identity() {
        let mut cfg = ExperimentConfig::default();
        cfg.physics.truncation = Some(40);
        cfg.media.perturbed = Some(RegionConfig { a: [[1.1, 0.0], [0.0, 0.95]], ..RegionConfig::isotropic(4.0) });
        cfg.solver.targets_imag = vec![0.0, 0.1];
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = ExperimentConfig::from_toml("[physics]\ndelta = 0.0\n").unwrap();
        assert_eq!(cfg.physics.delta, 0.0);
        assert_eq!(cfg.mesh, MeshConfig::default());
    }

    #[test]
    fn invalid_files_are_config_errors() {
        for text in [
            "[sweep]\nradii = []\n",
            "[sweep]\nradii = [0.01, 0.1]\n",
            "[sweep]\nradii = [0.1, 0.1]\n",
            "[sweep]\nradii = [0.001]\n",
            "[physics]\nwave_number = -1.0\n",
            "[solver]\ncount = 0\n",
            "[geometry]\nshape = 3\n",
            "this is not toml",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(LabError::Config(_))), "{text}");
        }
    }

    #[test]
    fn media_follow_the_tables() {
        let cfg = ExperimentConfig::default();
        let x = [0.1, 0.4];
        use stekloff_core::mesh::RegionTag;
        assert_eq!(cfg.reference_medium().eval_n(x, RegionTag::Scatterer), Complex64::new(4.0, 0.0));
        assert_eq!(cfg.perturbed_medium().eval_n(x, RegionTag::Void), Complex64::new(1.0, 0.0));
        assert_eq!(cfg.reference_medium().eval_n(x, RegionTag::Void), Complex64::new(4.0, 0.0));
        assert_eq!(cfg.perturbed_medium().eval_n(x, RegionTag::Outer), Complex64::new(1.0, 0.0));
    }
}
