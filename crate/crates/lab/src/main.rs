use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stekloff_lab::commands::{cmd_check, cmd_oracle, cmd_solve, cmd_sweep, build_geometry};
use stekloff_lab::report::{self, write_file};
use stekloff_lab::{meshio, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "stekloff", version, about = "Finite-element δ-Stekloff eigenvalue experiments")]
struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Uniform refinement levels, overriding `mesh.refine`.
    #[arg(long, global = true)]
    refine: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh the configured geometry and write it to `mesh.txt`.
    Mesh {
        /// Include a void of this radius.
        #[arg(long)]
        void_radius: Option<f64>,
    },
    /// Eigenvalues of the reference medium near the configured targets.
    Solve,
    /// Void-radius sweep of the eigenvalue shifts and first-order corrections.
    Sweep,
    /// Homogeneous-disk comparison against the Bessel solution.
    Oracle,
    /// Solve and sweep, then test the configured thresholds.
    Check,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(r) = cli.refine {
        cfg.mesh.refine = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8, LabError> {
    let cfg = load(cli)?;
    let out = cfg.output.dir.clone();
    match &cli.command {
        Command::Mesh { void_radius } => {
            let mesh = build_geometry(&cfg, *void_radius)?;
            write_file(&out.join("mesh.txt"), &meshio::write_mesh(&mesh))?;
            println!(
                "{} nodes, {} triangles, {} boundary nodes, mesh size {:.4}",
                mesh.node_count(),
                mesh.triangle_count(),
                mesh.boundary_nodes().len(),
                mesh.mesh_size()
            );
        }
        Command::Solve => {
            let s = cmd_solve(&cfg)?;
            write_file(&out.join("eigenvalues.csv"), &s.csv())?;
            for (t, i, gap) in &s.nearest {
                let p = &s.report.pairs[*i];
                println!("target {t:.4}: λ = {:.8} (residual {:.1e}, {:?})", p.lambda, p.residual, gap.verdict);
            }
        }
        Command::Sweep => {
            let s = cmd_sweep(&cfg, cli.workers)?;
            write_file(&out.join("sweep.csv"), &s.csv())?;
            write_file(&out.join("plot_sweep.py"), &report::sweep_plot_script("sweep.csv"))?;
            let summary = s.summary();
            write_file(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            if !s.complete() {
                return Ok(2);
            }
        }
        Command::Oracle => {
            let o = cmd_oracle(&cfg)?;
            write_file(&out.join("oracle.csv"), &report::oracle_csv(&o.rows))?;
            for m in &o.skipped {
                eprintln!("warning: branch m = {m} skipped, J_m(kR) vanishes");
            }
            for r in &o.rows {
                println!("m = {}: analytic {:.10}, FEM {:.10}, rel. error {:.2e}, multiplicity {}", r.m, r.analytic, r.fem, r.rel_error, r.multiplicity);
            }
        }
        Command::Check => {
            let lines = cmd_check(&cfg, cli.workers)?;
            let mut ok = true;
            for l in &lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
                ok &= l.pass;
            }
            if !ok {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
