//! Command-line front end. Exit codes: 0 success, 1 bad arguments or
//! parameters, 2 filesystem errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::degeneracy::SensingOptions;
use crate::error::{Error, Result};
use crate::pipeline::{
    export_trace, load_tum, replay_detect, run_odometry, save_tum, trajectory_metrics, write_flags,
    OdometryConfig, TrajectoryMetrics,
};
use crate::scenesim::{build_scene, TrajectoryGT};

#[derive(Debug, Parser)]
#[command(name = "degensense", version, about = "Degeneracy-aware LiDAR/IMU odometry on simulated scenes")]
pub struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the configured random seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Directory for output files
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Disable IMU fusion (pure LiDAR odometry)
    #[arg(long, global = true)]
    pub no_fusion: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the odometry pipeline; writes trace.csv, gt.tum, lo.tum, fused.tum
    Simulate,
    /// Compare an estimated TUM trajectory against ground truth
    Metrics { estimate: PathBuf, ground_truth: PathBuf },
    /// Re-run degeneracy sensing over a recorded trace; writes flags.csv
    Replay { trace: PathBuf },
    /// Write the configured scene's surfaces as CSV
    SceneDump,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAM: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Parses `args` (program name first) and runs the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARAM } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_PARAM
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<OdometryConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required for this command".into()))?;
    let mut cfg = OdometryConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.no_fusion {
        cfg.fusion = false;
    }
    Ok(cfg)
}

fn output_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_metrics(out: &mut dyn Write, label: &str, m: &TrajectoryMetrics) -> Result<()> {
    let prefix = if label.is_empty() { String::new() } else { format!("{label}.") };
    writeln!(out, "{prefix}ate_rmse {:.9}", m.ate_rmse)?;
    writeln!(out, "{prefix}end_to_end_error {:.9}", m.end_to_end_error)?;
    writeln!(out, "{prefix}max_error {:.9}", m.max_error)?;
    Ok(())
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let run = run_odometry(&cfg)?;
            let dir = output_dir(cli)?;
            export_trace(&run.trace(), &dir.join("trace.csv"))?;
            save_tum(&dir.join("gt.tum"), run.ground_truth.samples())?;
            save_tum(&dir.join("lo.tum"), &run.lo_trajectory())?;
            save_tum(&dir.join("fused.tum"), &run.fused_trajectory())?;
            let rot = run.records.iter().filter(|r| r.rot_flag).count();
            let trans = run.records.iter().filter(|r| r.trans_flag).count();
            writeln!(stdout, "frames {}", run.records.len())?;
            writeln!(stdout, "rot_flags {rot}")?;
            writeln!(stdout, "trans_flags {trans}")?;
            write_metrics(stdout, "lo", &trajectory_metrics(&run.lo_trajectory(), &run.ground_truth)?)?;
            write_metrics(stdout, "fused", &trajectory_metrics(&run.fused_trajectory(), &run.ground_truth)?)?;
        }
        Command::Metrics { estimate, ground_truth } => {
            let est = load_tum(estimate)?;
            let gt = TrajectoryGT::new(load_tum(ground_truth)?)?;
            write_metrics(stdout, "", &trajectory_metrics(&est, &gt)?)?;
        }
        Command::Replay { trace } => {
            let opts = match &cli.config {
                Some(_) => load_config(cli)?.sensing,
                None => SensingOptions::default(),
            };
            let flags = replay_detect(trace, &opts)?;
            match &cli.output {
                Some(_) => write_file(&output_dir(cli)?.join("flags.csv"), |w| write_flags(w, &flags))?,
                None => write_flags(stdout, &flags)?,
            }
        }
        Command::SceneDump => {
            let scene = build_scene(&load_config(cli)?.scene)?;
            match &cli.output {
                Some(_) => write_file(&output_dir(cli)?.join("scene.csv"), |w| scene.write_csv(w))?,
                None => scene.write_csv(stdout)?,
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
