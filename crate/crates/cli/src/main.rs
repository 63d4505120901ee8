//! `dentalscan`: one executable exposing every pipeline stage as a
//! subcommand. Exit codes: 0 success, 1 domain error (one JSON diagnostic
//! per line on stderr), 2 usage error.

mod basic;
mod config;
mod evaluate;
mod io;
mod losses_cmd;
mod postproc_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Point3;

use crate::config::RunConfig;
use crate::io::CliResult;

#[derive(Parser, Debug)]
#[command(
    name = "dentalscan",
    about = "Intraoral scan segmentation toolkit: evaluation protocol, \
             geometric annotation pipeline, and classical post-processing",
    version
)]
struct Cli {
    /// Config file (JSON) supplying defaults for tunable parameters
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine-readable output where a human format is the default
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a mesh and its annotation for structural and content errors
    Validate {
        mesh: PathBuf,
        annotation: PathBuf,
    },
    /// Merge duplicate vertices, drop degenerate faces, keep labels aligned
    Clean {
        mesh: PathBuf,
        #[arg(long)]
        annotation: Option<PathBuf>,
        #[arg(long)]
        out_mesh: PathBuf,
        #[arg(long)]
        out_annotation: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rotate and translate a scan into the canonical occlusal pose
    Normalize {
        mesh: PathBuf,
        #[arg(long)]
        out_mesh: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Crop a sphere around a point and flatten the patch to the unit disk
    Flatten {
        mesh: PathBuf,
        /// Crop center as three coordinates
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map a 2D polygon drawn on a chart back to mesh vertex indices
    Backproject {
        chart: PathBuf,
        /// Polygon file: JSON array of [u, v]
        polygon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against ground truth and aggregate the leaderboard
    Evaluate {
        #[arg(long)]
        gt_dir: PathBuf,
        #[arg(long)]
        pred_dir: PathBuf,
        /// CSV manifest overriding stem-based pairing
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Leaderboard CSV row (4-decimal presentation)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate a deterministic synthetic jaw scan with exact ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Generator config (JSON); defaults to a 14-tooth upper jaw
        #[arg(long)]
        gen_config: Option<PathBuf>,
    },
    /// Post-processing operations on point clouds and label fields
    Postproc {
        #[command(subcommand)]
        op: postproc_cmd::PostprocOp,
    },
    /// Evaluate published loss formulas on JSON inputs
    Losses {
        #[command(subcommand)]
        cmd: losses_cmd::LossesCmd,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { mesh, annotation } => basic::cmd_validate(&mesh, &annotation, cli.json),
        Command::Clean {
            mesh,
            annotation,
            out_mesh,
            out_annotation,
            report,
        } => basic::cmd_clean(
            &mesh,
            annotation.as_deref(),
            &out_mesh,
            out_annotation.as_deref(),
            report.as_deref(),
            &cfg,
        ),
        Command::Normalize {
            mesh,
            out_mesh,
            report,
        } => basic::cmd_normalize(&mesh, &out_mesh, report.as_deref(), &cfg),
        Command::Flatten {
            mesh,
            center,
            radius,
            out,
        } => basic::cmd_flatten(
            &mesh,
            Point3::new(center[0], center[1], center[2]),
            radius,
            &out,
        ),
        Command::Backproject {
            chart,
            polygon,
            out,
        } => basic::cmd_backproject(&chart, &polygon, out.as_deref()),
        Command::Evaluate {
            gt_dir,
            pred_dir,
            manifest,
            report,
            csv,
        } => evaluate::cmd_evaluate(
            &gt_dir,
            &pred_dir,
            manifest.as_deref(),
            report.as_deref(),
            csv.as_deref(),
            &cfg,
        ),
        Command::Synth {
            out,
            seed,
            gen_config,
        } => basic::cmd_synth(gen_config.as_deref(), seed, &out),
        Command::Postproc { op } => postproc_cmd::run(op),
        Command::Losses { cmd } => losses_cmd::run(cmd, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
