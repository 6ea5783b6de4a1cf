//! Command-line interface: declarative configuration files, named
//! benchmarks, and layup parameter sweeps.
//!
//! Exit codes form the machine-readable contract: `0` success, `1` a
//! benchmark comparison missed its tolerance, `2` configuration or
//! validation failure, `3` solver nonconvergence (a partial archive is
//! still written and flagged).

pub mod bench;
pub mod config;
pub mod runner;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

use config::ProblemConfig;
use runner::StaticRow;

#[derive(Parser)]
#[command(
    name = "iga-laminate",
    version,
    about = "Geometrically nonlinear bending of laminated composite plates \
             by NURBS-based isogeometric analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis described by a TOML configuration file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
        /// Directory receiving results.csv and results.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a named benchmark and compare against its published solution.
    Bench {
        /// One of: table1, table2, table3, table4, fig11, fig13.
        name: String,
        /// Output directory; defaults to `bench-<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a static analysis over antisymmetric angle plies
    /// [-t/t/-t/t] for each angle in the list.
    SweepAngle {
        /// Path to the base configuration file (static analysis).
        config: PathBuf,
        /// Fiber angles in degrees.
        #[arg(long, value_delimiter = ',', default_value = "0,15,30,45")]
        angles: Vec<f64>,
        /// Directory receiving per-variant CSVs and the summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-run a static analysis over cross-ply layups [0/90]_N for each
    /// pair count N in the list.
    SweepLayers {
        /// Path to the base configuration file (static analysis).
        config: PathBuf,
        /// Numbers of (0/90) pairs.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        pairs: Vec<usize>,
        /// Directory receiving per-variant CSVs and the summary.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Nonconvergence { .. } | Error::SingularSystem(_) => 3,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out } => run_command(&config, &out),
        Command::Bench { name, out } => {
            let out = out.unwrap_or_else(|| PathBuf::from(format!("bench-{name}")));
            bench_command(&name, &out)
        }
        Command::SweepAngle { config, angles, out } => {
            let variants: Vec<(String, Vec<f64>)> = angles
                .iter()
                .map(|&t| (format!("angle_{t}"), vec![-t, t, -t, t]))
                .collect();
            sweep_command(&config, &out, "sweep-angle", "angle", &variants, &angles)
        }
        Command::SweepLayers { config, pairs, out } => {
            let variants: Vec<(String, Vec<f64>)> = pairs
                .iter()
                .map(|&n| {
                    let mut angles = Vec::with_capacity(2 * n);
                    for _ in 0..n {
                        angles.extend_from_slice(&[0.0, 90.0]);
                    }
                    (format!("layers_{}", 2 * n), angles)
                })
                .collect();
            let keys: Vec<f64> = pairs.iter().map(|&n| (2 * n) as f64).collect();
            sweep_command(&config, &out, "sweep-layers", "n_layers", &variants, &keys)
        }
    }
}

fn load_config(path: &Path) -> Result<(ProblemConfig, String)> {
    let text = fs::read_to_string(path)?;
    let cfg = ProblemConfig::from_toml(&text)?;
    Ok((cfg, text))
}

fn run_command(config_path: &Path, out: &Path) -> Result<i32> {
    let (cfg, text) = load_config(config_path)?;
    let outcome = runner::execute(&cfg, &text, "run")?;
    runner::write_outputs(out, &outcome)?;
    match &outcome.archive.failure {
        None => println!("run complete: {}", out.join("results.csv").display()),
        Some(reason) => eprintln!("partial results archived: {reason}"),
    }
    Ok(outcome.exit)
}

fn bench_command(name: &str, out: &Path) -> Result<i32> {
    let report = bench::run_named(name)?;
    bench::write_outputs(out, &report)?;
    print!("{}", report.report_text());
    Ok(if report.passed() { 0 } else { 1 })
}

/// Runs the base configuration once per layup variant, writing one CSV per
/// variant plus a summary of the final-level deflections.
fn sweep_command(
    config_path: &Path,
    out: &Path,
    command: &str,
    key_name: &str,
    variants: &[(String, Vec<f64>)],
    keys: &[f64],
) -> Result<i32> {
    let (base, text) = load_config(config_path)?;
    // A sweep compares deflections at fixed load, which only a static
    // analysis provides.
    let probe = base.build()?;
    if probe.analysis.is_transient() {
        return Err(Error::InvalidConfig(
            "layup sweeps need a static base analysis".into(),
        ));
    }

    fs::create_dir_all(out)?;
    let mut exit = 0;
    let mut summary: Vec<(f64, StaticRow)> = Vec::new();
    for ((stem, angles), &key) in variants.iter().zip(keys) {
        let mut cfg = base.clone();
        cfg.layup.angles = angles.clone();
        cfg.layup.fractions = None;
        let outcome = runner::execute(&cfg, &text, &format!("{command} {key}"))?;
        fs::write(out.join(format!("{stem}.csv")), &outcome.csv)?;
        if let Some(reason) = &outcome.archive.failure {
            eprintln!("{stem}: partial results archived: {reason}");
            exit = exit.max(outcome.exit);
        }
        if let Some(last) = outcome
            .archive
            .static_rows
            .as_ref()
            .and_then(|rows| rows.last())
        {
            summary.push((key, *last));
        }
    }

    let mut csv = format!("{key_name},load_parameter,center_deflection\n");
    for (key, row) in &summary {
        csv.push_str(&format!(
            "{key},{:.8e},{:.8e}\n",
            row.load_parameter, row.center_deflection
        ));
    }
    fs::write(out.join("summary.csv"), csv)?;
    println!("sweep complete: {}", out.join("summary.csv").display());
    Ok(exit)
}
