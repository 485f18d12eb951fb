use std::path::Path;
use std::process::{Command, Output};

use stekloff_core::bessel::disk_eigenvalue;
use stekloff_lab::meshio;

const SWEEP: &str = r#"
[mesh]
target_size = 0.3

[sweep]
radii = [0.1, 0.07, 0.05, 0.04]

[solver]
count = 3
"#;

fn stekloff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stekloff")).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn malformed_configs_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in ["[physics\nwave_number = 1", "[physics]\nwave_numbr = 1\n", "[sweep]\nradii = []\n"].iter().enumerate() {
        let name = format!("bad{i}.toml");
        write(dir.path(), &name, text);
        let out = stekloff(dir.path(), &["--config", &name, "solve"]);
        assert_eq!(out.status.code(), Some(1), "{text}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = stekloff(dir.path(), &["--config", "missing.toml", "solve"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mesh_subcommand_writes_a_readable_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.toml", SWEEP);
    let out = stekloff(dir.path(), &["--config", "cfg.toml", "--out", "m", "mesh", "--void-radius", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("m/mesh.txt")).unwrap();
    let mesh = meshio::read_mesh(&text).unwrap();
    assert_eq!(meshio::write_mesh(&mesh), text);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.starts_with(&format!("{} nodes", mesh.node_count())), "{summary}");
}

#[test]
fn sweep_output_is_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.toml", SWEEP);
    let mut tables = Vec::new();
    for (out_dir, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = stekloff(dir.path(), &["--config", "cfg.toml", "--out", out_dir, "--workers", workers, "sweep"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        tables.push(std::fs::read(dir.path().join(out_dir).join("sweep.csv")).unwrap());
        assert!(dir.path().join(out_dir).join("plot_sweep.py").exists());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
    let text = String::from_utf8(tables.remove(0)).unwrap();
    // header plus four radii for each of the two targets
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn homogeneous_disk_solve_matches_bessel_branches() {
    let dir = tempfile::tempdir().unwrap();
    let targets: Vec<f64> = (0..3).map(|m| disk_eigenvalue(m, 1.0, 1.5, 0.0).unwrap()).collect();
    let cfg = format!(
        "[geometry]\nscatterer = \"none\"\n\n[physics]\ndelta = 0.0\nmetric = \"arclength\"\n\n[media.reference]\nn = 1.0\n\n[mesh]\ntarget_size = 0.15\n\n[solver]\ntargets = {targets:?}\n"
    );
    write(dir.path(), "disk.toml", &cfg);
    let out = stekloff(dir.path(), &["--config", "disk.toml", "--out", "o", "solve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("o/eigenvalues.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), targets.len());
    for (row, exact) in rows.iter().zip(&targets) {
        let lambda: f64 = row[2].parse().unwrap();
        assert!(((lambda - exact) / exact).abs() < 1e-2, "{lambda} vs {exact}");
        let residual: f64 = row[4].parse().unwrap();
        assert!(residual < 1e-9);
    }
}
