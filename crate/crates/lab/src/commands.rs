//! The experiments behind each CLI subcommand.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;
use stekloff_core::assembly::{assemble_system, AssembledSystem};
use stekloff_core::bessel::disk_eigenvalue;
use stekloff_core::eigen::{certify_simple, dense_spectrum, solve_near, GapReport, SolveReport, SIMPLICITY_REL_TOL};
use stekloff_core::mesh::{build_mesh, refine, Mesh};
use stekloff_core::perturbation::{analyze, bound_ratio, remainder_order, BoundNorm, PerturbationReport, RemainderFit};

use crate::config::{ExperimentConfig, ScattererShape};
use crate::report::{self, EigenRow, OracleRow};
use crate::LabError;

/// Builds the configured geometry, optionally with a void of radius `h`, and
/// applies the configured uniform refinements.
pub fn build_geometry(cfg: &ExperimentConfig, void_radius: Option<f64>) -> Result<Mesh, LabError> {
    let mut mesh = build_mesh(&cfg.region_spec(void_radius), cfg.mesh.target_size)?;
    for _ in 0..cfg.mesh.refine {
        mesh = refine(&mesh);
    }
    Ok(mesh)
}

pub fn reference_system(cfg: &ExperimentConfig, mesh: &Mesh) -> Result<AssembledSystem, LabError> {
    let med = cfg.reference_medium();
    Ok(assemble_system(mesh, &med, &med, &cfg.smoother(), cfg.physics.wave_number)?)
}

/// Targets from the configuration, or the `count` eigenvalues of smallest
/// magnitude of a coarse dense solve when none are configured.
pub fn resolve_targets(cfg: &ExperimentConfig) -> Result<Vec<Complex64>, LabError> {
    let targets = cfg.targets();
    if !targets.is_empty() {
        return Ok(targets);
    }
    let mut coarse = cfg.clone();
    coarse.mesh.refine = 0;
    coarse.mesh.target_size = 0.3 * cfg.geometry.disk_radius / 1.5;
    let mesh = build_geometry(&coarse, None)?;
    let sys = reference_system(&coarse, &mesh)?;
    let mut lambdas = dense_spectrum(&sys, &cfg.solve_options())?;
    lambdas.retain(|l| l.norm() > 1e-8);
    lambdas.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    lambdas.truncate(cfg.solver.count.min(4));
    if lambdas.is_empty() {
        return Err(LabError::Solver("the coarse dense solve found no eigenvalues to seed targets".into()));
    }
    Ok(lambdas.into_iter().map(|l| Complex64::new((l.re * 100.0).round() / 100.0, (l.im * 100.0).round() / 100.0)).collect())
}

pub struct SolveOutcome {
    pub mesh: Mesh,
    pub targets: Vec<Complex64>,
    pub report: SolveReport,
    /// Nearest eigenvalue to each target with its simplicity certificate.
    pub nearest: Vec<(Complex64, usize, GapReport)>,
}

impl SolveOutcome {
    pub fn csv(&self) -> String {
        let rows: Vec<EigenRow<'_>> = self
            .nearest
            .iter()
            .map(|(t, i, g)| EigenRow { target: *t, pair: &self.report.pairs[*i], simplicity: *g })
            .collect();
        report::eigen_csv(&rows)
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome, LabError> {
    let targets = resolve_targets(cfg)?;
    let mesh = build_geometry(cfg, None)?;
    let sys = reference_system(cfg, &mesh)?;
    let report = solve_near(&sys, &targets, cfg.solver.count.max(3), &cfg.solve_options())?;
    if let Some(f) = report.failures.first() {
        return Err(LabError::Solver(format!("target {}: {}", f.target, f.error)));
    }
    let mut nearest = Vec::new();
    for &t in &targets {
        let (i, _) = report
            .pairs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.lambda - t).norm().total_cmp(&(b.1.lambda - t).norm()))
            .ok_or_else(|| LabError::Solver(format!("no eigenvalue found near {t}")))?;
        let gap = certify_simple(&report.pairs, report.pairs[i].lambda, SIMPLICITY_REL_TOL);
        nearest.push((t, i, gap));
    }
    Ok(SolveOutcome { mesh, targets, report, nearest })
}

pub struct TargetSweep {
    pub target: Complex64,
    /// Reports in configured radius order; `None` where that point failed.
    pub reports: Vec<Option<PerturbationReport>>,
    pub fit: Option<RemainderFit>,
    /// Largest over smallest `|shift| / ‖n_h − n₀‖_{L¹}` across the sweep.
    pub ratio_spread: Option<f64>,
}

pub struct SweepOutcome {
    pub radii: Vec<f64>,
    pub targets: Vec<TargetSweep>,
    pub failures: Vec<String>,
}

impl SweepOutcome {
    pub fn complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn csv(&self) -> String {
        let rows: Vec<(usize, &PerturbationReport)> = self
            .targets
            .iter()
            .enumerate()
            .flat_map(|(t, s)| s.reports.iter().flatten().map(move |r| (t, r)))
            .collect();
        report::sweep_csv(&rows)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.targets.iter().enumerate() {
            s += &format!("target {i} ({}):", t.target);
            match &t.fit {
                Some(f) => {
                    s += &format!(
                        " shift slope {:.3}, remainder slope {:.3}, gain {:.3}",
                        f.shift.slope, f.remainder.slope, f.gain
                    );
                    if !f.excluded.is_empty() {
                        s += &format!(", excluded {:?}", f.excluded);
                    }
                }
                None => s += " no slope fit",
            }
            if let Some(r) = t.ratio_spread {
                s += &format!(", L1 ratio spread {r:.3}");
            }
            s += "\n";
        }
        if !self.complete() {
            s += &format!("INCOMPLETE: {} failed point(s)\n", self.failures.len());
            for f in &self.failures {
                s += &format!("  {f}\n");
            }
        }
        s
    }
}

/// Per-target reports for one radius, or the error that stopped the point.
type PointResult = Result<Vec<Result<PerturbationReport, String>>, String>;

/// Runs the void sweep on up to `workers` threads. Every point is computed
/// independently and results are stored by radius index, so the output does
/// not depend on scheduling.
pub fn cmd_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<SweepOutcome, LabError> {
    if cfg.geometry.scatterer == ScattererShape::None {
        return Err(LabError::Config("a sweep needs a scatterer to hold the void".into()));
    }
    let targets = resolve_targets(cfg)?;
    let radii = cfg.sweep.radii.clone();
    let reference = cfg.reference_medium();
    let perturbed = cfg.perturbed_medium();
    let smoother = cfg.smoother();
    let opts = cfg.solve_options();
    let count = cfg.solver.count;
    let slots: Mutex<Vec<Option<PointResult>>> = Mutex::new(vec![None; radii.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, radii.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= radii.len() {
                    break;
                }
                let h = radii[i];
                let result = build_geometry(cfg, Some(h))
                    .map_err(|e| e.to_string())
                    .and_then(|mesh| {
                        analyze(&mesh, &reference, &perturbed, &smoother, cfg.physics.wave_number, &targets, count, h, &opts)
                            .map_err(|e| e.to_string())
                    })
                    .map(|outs| outs.into_iter().map(|o| o.report.map_err(|e| e.to_string())).collect());
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    let mut failures = Vec::new();
    let mut per_target: Vec<Vec<Option<PerturbationReport>>> = vec![vec![None; radii.len()]; targets.len()];
    for (i, slot) in slots.into_iter().enumerate() {
        match slot.expect("every radius is processed") {
            Err(e) => failures.push(format!("h = {}: {e}", radii[i])),
            Ok(outs) => {
                for (t, out) in outs.into_iter().enumerate() {
                    match out {
                        Ok(r) => per_target[t][i] = Some(r),
                        Err(e) => failures.push(format!("h = {}, target {}: {e}", radii[i], targets[t])),
                    }
                }
            }
        }
    }
    let targets = targets
        .into_iter()
        .zip(per_target)
        .map(|(target, reports)| {
            let done: Vec<PerturbationReport> = reports.iter().flatten().cloned().collect();
            let sizes: Vec<f64> = done.iter().map(|r| r.size).collect();
            let fit = remainder_order(&done, &sizes).ok();
            let ratios: Vec<f64> = done.iter().filter_map(|r| bound_ratio(r, BoundNorm::Isotropic)).collect();
            let ratio_spread = (!ratios.is_empty()).then(|| {
                let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
                hi / lo
            });
            TargetSweep { target, reports, fit, ratio_spread }
        })
        .collect();
    Ok(SweepOutcome { radii, targets, failures })
}

pub struct OracleOutcome {
    pub rows: Vec<OracleRow>,
    /// Branches skipped because `J_m(kR)` vanishes.
    pub skipped: Vec<i32>,
}

/// Compares FEM eigenvalues of the homogeneous disk with the separated
/// Bessel solution, branch by branch.
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<OracleOutcome, LabError> {
    let r = &cfg.media.reference;
    let homogeneous = cfg.geometry.scatterer == ScattererShape::None
        || (r.n == 1.0 && r.n_imag == 0.0 && r.a == [[1.0, 0.0], [0.0, 1.0]] && r.a_imag == [[0.0; 2]; 2]);
    if !homogeneous {
        return Err(LabError::Config("the oracle needs a homogeneous medium (A = I, n = 1)".into()));
    }
    let (k, radius, delta) = (cfg.physics.wave_number, cfg.geometry.disk_radius, cfg.physics.delta);
    let mut skipped = Vec::new();
    let mut analytic = Vec::new();
    for m in 0..=cfg.oracle.max_m {
        let value = match cfg.physics.metric {
            crate::config::MetricConfig::Arclength => disk_eigenvalue(m, k, radius, delta),
            crate::config::MetricConfig::Angle => disk_eigenvalue(m, k, radius, 0.0)
                .map(|l| l * (1.0 + (m as f64).powi(2)).powf(delta)),
        };
        match value {
            Some(l) => analytic.push((m, l)),
            None => skipped.push(m),
        }
    }
    if analytic.is_empty() {
        return Err(LabError::Solver("every requested branch is resonant".into()));
    }
    let mut disk = cfg.clone();
    disk.geometry.scatterer = ScattererShape::None;
    let mesh = build_geometry(&disk, None)?;
    let sys = reference_system(&disk, &mesh)?;
    let mut targets: Vec<f64> = analytic.iter().map(|a| a.1).collect();
    targets.sort_by(|a, b| a.total_cmp(b));
    targets.dedup_by(|a, b| (*a - *b).abs() < 0.5);
    let shifts: Vec<Complex64> = targets.iter().map(|&t| Complex64::new(t - 0.05 * (1.0 + t.abs()), 0.0)).collect();
    let count = 4.max(2 * analytic.len() + 4).min(40);
    let report = solve_near(&sys, &shifts, count, &disk.solve_options())?;
    if let Some(f) = report.failures.first() {
        return Err(LabError::Solver(format!("target {}: {}", f.target, f.error)));
    }
    let rows = analytic
        .into_iter()
        .map(|(m, l)| {
            let best = report.nearest(Complex64::new(l, 0.0)).expect("solve returned pairs");
            let fem = best.lambda.re;
            let multiplicity =
                report.pairs.iter().filter(|p| (p.lambda - best.lambda).norm() < 1e-3 * (1.0 + fem.abs())).count();
            OracleRow { m, analytic: l, fem, rel_error: ((fem - l) / l).abs(), multiplicity }
        })
        .collect();
    Ok(OracleOutcome { rows, skipped })
}

pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Solves and sweeps, then tests the configured thresholds.
pub fn cmd_check(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<CheckLine>, LabError> {
    let c = &cfg.check;
    let mut lines = Vec::new();
    let solved = cmd_solve(cfg)?;
    for (i, expected) in c.expected.iter().enumerate() {
        let line = match solved.nearest.get(i) {
            Some((_, idx, gap)) => {
                let l = solved.report.pairs[*idx].lambda;
                CheckLine {
                    name: format!("eigenvalue {i}"),
                    pass: (l.re - expected).abs() <= c.tolerance && l.im.abs() <= c.tolerance,
                    detail: format!("{:.6} vs {expected} ± {} ({:?})", l, c.tolerance, gap.verdict),
                }
            }
            None => CheckLine { name: format!("eigenvalue {i}"), pass: false, detail: "no target".into() },
        };
        lines.push(line);
    }
    let sweep = cmd_sweep(cfg, workers)?;
    lines.push(CheckLine {
        name: "sweep complete".into(),
        pass: sweep.complete(),
        detail: format!("{} failure(s)", sweep.failures.len()),
    });
    for (i, t) in sweep.targets.iter().enumerate() {
        let (slope, gain) = t.fit.as_ref().map_or((f64::NAN, f64::NAN), |f| (f.shift.slope, f.gain));
        lines.push(CheckLine {
            name: format!("shift slope {i}"),
            pass: slope >= c.min_shift_slope,
            detail: format!("{slope:.3} >= {}", c.min_shift_slope),
        });
        lines.push(CheckLine {
            name: format!("remainder gain {i}"),
            pass: gain >= c.min_remainder_gain,
            detail: format!("{gain:.3} >= {}", c.min_remainder_gain),
        });
        let spread = t.ratio_spread.unwrap_or(f64::INFINITY);
        lines.push(CheckLine {
            name: format!("L1 ratio spread {i}"),
            pass: spread < c.max_ratio_spread,
            detail: format!("{spread:.3} < {}", c.max_ratio_spread),
        });
    }
    if sweep.targets.len() >= 2 {
        let (a, b) = (&sweep.targets[0], &sweep.targets[1]);
        let dominates = a.reports.iter().zip(&b.reports).all(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x.shift.norm() > y.shift.norm(),
            _ => false,
        });
        lines.push(CheckLine {
            name: "shift ordering".into(),
            pass: dominates,
            detail: format!("|shift| of target 0 exceeds target 1 at all {} radii", sweep.radii.len()),
        });
    }
    Ok(lines)
}
