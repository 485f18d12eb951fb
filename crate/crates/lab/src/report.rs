//! CSV tables and plot scripts.

use std::path::Path;

use num_complex::Complex64;
use stekloff_core::eigen::{EigenPair, GapReport};
use stekloff_core::perturbation::{PerturbationReport, A_EXPONENTS, N_EXPONENTS};

use crate::LabError;

/// Fixed float formatting so repeated runs produce identical files.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn exponent_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), LabError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

pub struct EigenRow<'a> {
    pub target: Complex64,
    pub pair: &'a EigenPair,
    pub simplicity: GapReport,
}

pub fn eigen_csv(rows: &[EigenRow<'_>]) -> String {
    let header = ["target_re", "target_im", "lambda_re", "lambda_im", "residual", "gap", "simplicity"]
        .map(String::from)
        .to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.target.re),
                num(r.target.im),
                num(r.pair.lambda.re),
                num(r.pair.lambda.im),
                num(r.pair.residual),
                num(r.simplicity.gap),
                format!("{:?}", r.simplicity.verdict).to_lowercase(),
            ]
        })
        .collect();
    to_csv(&header, &body)
}

/// Sweep rows: size, eigenvalues, correction, shift/remainder magnitudes and
/// the coefficient-difference norms.
pub fn sweep_csv(rows: &[(usize, &PerturbationReport)]) -> String {
    let mut header: Vec<String> = [
        "target", "h", "lambda0_re", "lambda0_im", "lambda_h_re", "lambda_h_im", "corr_re", "corr_im", "abs_shift",
        "abs_remainder",
    ]
    .map(String::from)
    .to_vec();
    header.extend(N_EXPONENTS.iter().map(|p| format!("n_l{}", exponent_label(*p))));
    header.extend(A_EXPONENTS.iter().map(|q| format!("a_l{}", exponent_label(*q))));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(t, r)| {
            let mut row = vec![
                t.to_string(),
                num(r.size),
                num(r.lambda0.re),
                num(r.lambda0.im),
                num(r.lambda_h.re),
                num(r.lambda_h.im),
                num(r.correction.re),
                num(r.correction.im),
                num(r.shift.norm()),
                num(r.remainder.norm()),
            ];
            row.extend(N_EXPONENTS.iter().map(|p| r.norms.n_norm(*p).map_or(String::new(), num)));
            row.extend(A_EXPONENTS.iter().map(|q| r.norms.a_norm(*q).map_or(String::new(), num)));
            row
        })
        .collect();
    to_csv(&header, &body)
}

pub struct OracleRow {
    pub m: i32,
    pub analytic: f64,
    pub fem: f64,
    pub rel_error: f64,
    pub multiplicity: usize,
}

pub fn oracle_csv(rows: &[OracleRow]) -> String {
    let header = ["m", "analytic", "fem", "rel_error", "multiplicity"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.m.to_string(), num(r.analytic), num(r.fem), num(r.rel_error), r.multiplicity.to_string()])
        .collect();
    to_csv(&header, &body)
}

/// Matplotlib script plotting `|shift|` against `h` per target with an
/// `O(h²)` guide line through the first point of each series.
pub fn sweep_plot_script(csv_name: &str) -> String {
    format!(
        r#"import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open("{csv_name}") as f:
    for row in csv.DictReader(f):
        series[int(row["target"])].append(
            (float(row["h"]), float(row["abs_shift"]), float(row["lambda0_re"]))
        )

fig, ax = plt.subplots(figsize=(6, 4.5))
for (target, pts), marker in zip(sorted(series.items()), ["o", "s", "^", "v", "D"]):
    pts.sort()
    h = [p[0] for p in pts]
    shift = [p[1] for p in pts]
    ax.loglog(h, shift, marker, label=f"lambda0 = {{pts[0][2]:.2f}}")
    c = shift[-1] / h[-1] ** 2
    ax.loglog(h, [c * x**2 for x in h], "k--", linewidth=0.8)
ax.set_xlabel("h")
ax.set_ylabel("|lambda_h - lambda_0|")
ax.legend()
fig.tight_layout()
fig.savefig("sweep.png", dpi=150)
"#
    )
}
