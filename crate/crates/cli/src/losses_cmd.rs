//! `losses eval <name>`: evaluate the published loss formulas on JSON point
//! and target files. Scalars print with 12 significant digits; `--json`
//! switches to a machine-readable record.

use std::path::PathBuf;

use clap::Subcommand;
use dentalscan_core::losses::{
    chamfer_distance, champers_centroid_loss, dice_ce_loss, igip_centroid_loss,
    patch_distance_weight, periphery_filter, smooth_l1, CentroidTargets, ClassDistribution,
    DiceVariant,
};
use dentalscan_core::Diagnostics;
use nalgebra::{Point3, Vector3};
use serde::Deserialize;

use crate::io::{emit_json, load_json, CliError, CliResult};

#[derive(Subcommand, Debug)]
pub enum LossesCmd {
    /// Evaluate a loss on input files and print the scalar
    Eval {
        #[command(subcommand)]
        op: LossOp,
    },
}

#[derive(Subcommand, Debug)]
pub enum LossOp {
    /// Smooth L1 of a real vector (transition point 1)
    SmoothL1 {
        /// JSON array of reals
        values: PathBuf,
    },
    /// Symmetric unsquared chamfer distance between two point sets
    Chamfer {
        /// JSON array of [x, y, z]
        a: PathBuf,
        b: PathBuf,
    },
    /// Centroid loss: smooth L1 + separation ratio + chamfer
    IgipCentroid {
        /// Predicted centroids: JSON array of [x, y, z]
        predicted: PathBuf,
        /// Targets: JSON {"centroids": [[x,y,z],...], "radii": [r,...]}
        targets: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        lambda: f64,
    },
    /// Offset-regression loss: normalized Euclidean + separation terms
    ChampersCentroid {
        points: PathBuf,
        /// Predicted offsets: JSON array of [dx, dy, dz], parallel to points
        offsets: PathBuf,
        targets: PathBuf,
        /// Normalization count K
        #[arg(long)]
        k: usize,
    },
    /// Weighted Dice + cross-entropy over a batch
    DiceCe {
        /// JSON {"probabilities": [[p,...],...], "target_class": [t,...]}
        dist: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        w0: f64,
        #[arg(long, default_value_t = 1.0)]
        w1: f64,
        /// Use the conventional Dice loss instead of the published form
        #[arg(long)]
        standard_dice: bool,
    },
    /// Patch weight exp(-2 * distance) between a point and a centroid
    PatchWeight {
        /// JSON [x, y, z]
        point: PathBuf,
        centroid: PathBuf,
    },
    /// Indices whose predicted arch distance is at most the threshold
    PeripheryFilter {
        points: PathBuf,
        /// JSON array of predicted distances, parallel to points
        distances: PathBuf,
        #[arg(long)]
        threshold: f64,
    },
}

#[derive(Deserialize)]
struct TargetsFile {
    centroids: Vec<[f64; 3]>,
    radii: Vec<f64>,
}

#[derive(Deserialize)]
struct DistFile {
    probabilities: Vec<Vec<f64>>,
    target_class: Vec<usize>,
}

fn load_points(path: &PathBuf) -> CliResult<Vec<Point3<f64>>> {
    let raw: Vec<[f64; 3]> = load_json(path)?;
    Ok(raw.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect())
}

fn load_targets(path: &PathBuf) -> CliResult<CentroidTargets> {
    let raw: TargetsFile = load_json(path)?;
    CentroidTargets::new(
        raw.centroids
            .iter()
            .map(|p| Point3::new(p[0], p[1], p[2]))
            .collect(),
        raw.radii,
    )
    .map_err(|e| CliError::domain("LOSS_TARGETS", e.to_string()))
}

fn report_diags(diags: &Diagnostics) {
    for d in diags.iter() {
        eprintln!(
            "{}",
            serde_json::to_string(d).unwrap_or_else(|_| d.to_string())
        );
    }
}

fn print_scalar(name: &str, value: f64, json: bool) -> CliResult<()> {
    if json {
        emit_json(&serde_json::json!({ "loss": name, "value": value }), None)
    } else {
        // 12 significant digits.
        println!("{value:.11e}");
        Ok(())
    }
}

pub fn run(cmd: LossesCmd, json: bool) -> CliResult<()> {
    let LossesCmd::Eval { op } = cmd;
    match op {
        LossOp::SmoothL1 { values } => {
            let x: Vec<f64> = load_json(&values)?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(CliError::domain("LOSS_INPUT", "values must be finite"));
            }
            print_scalar("smooth_l1", smooth_l1(&x), json)
        }
        LossOp::Chamfer { a, b } => {
            let pa = load_points(&a)?;
            let pb = load_points(&b)?;
            let value = chamfer_distance(&pa, &pb)
                .map_err(|e| CliError::domain("LOSS_INPUT", e.to_string()))?;
            print_scalar("chamfer", value, json)
        }
        LossOp::IgipCentroid {
            predicted,
            targets,
            lambda,
        } => {
            let pred = load_points(&predicted)?;
            let tgt = load_targets(&targets)?;
            let value = igip_centroid_loss(&pred, &tgt, lambda)
                .map_err(|e| CliError::domain("LOSS_INPUT", e.to_string()))?;
            print_scalar("igip_centroid", value, json)
        }
        LossOp::ChampersCentroid {
            points,
            offsets,
            targets,
            k,
        } => {
            if k == 0 {
                return Err(CliError::Usage("k must be >= 1".into()));
            }
            let pts = load_points(&points)?;
            let offs_raw: Vec<[f64; 3]> = load_json(&offsets)?;
            let offs: Vec<Vector3<f64>> = offs_raw
                .iter()
                .map(|o| Vector3::new(o[0], o[1], o[2]))
                .collect();
            let tgt = load_targets(&targets)?;
            let (value, diags) = champers_centroid_loss(&pts, &offs, &tgt, k)
                .map_err(|e| CliError::domain("LOSS_INPUT", e.to_string()))?;
            report_diags(&diags);
            print_scalar("champers_centroid", value, json)
        }
        LossOp::DiceCe {
            dist,
            w0,
            w1,
            standard_dice,
        } => {
            let raw: DistFile = load_json(&dist)?;
            let dist = ClassDistribution::new(raw.probabilities, raw.target_class)
                .map_err(|e| CliError::domain("LOSS_INPUT", e.to_string()))?;
            let variant = if standard_dice {
                DiceVariant::Standard
            } else {
                DiceVariant::Printed
            };
            let (value, diags) = dice_ce_loss(&dist, w0, w1, variant);
            report_diags(&diags);
            print_scalar("dice_ce", value, json)
        }
        LossOp::PatchWeight { point, centroid } => {
            let s: [f64; 3] = load_json(&point)?;
            let c: [f64; 3] = load_json(&centroid)?;
            let value = patch_distance_weight(
                &Point3::new(s[0], s[1], s[2]),
                &Point3::new(c[0], c[1], c[2]),
            );
            print_scalar("patch_weight", value, json)
        }
        LossOp::PeripheryFilter {
            points,
            distances,
            threshold,
        } => {
            let pts = load_points(&points)?;
            let dists: Vec<f64> = load_json(&distances)?;
            if pts.len() != dists.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!("{} points vs {} distances", pts.len(), dists.len()),
                ));
            }
            let indices = periphery_filter(&pts, &dists, threshold);
            if json {
                emit_json(&serde_json::json!({ "indices": indices }), None)
            } else {
                for i in indices {
                    println!("{i}");
                }
                Ok(())
            }
        }
    }
}
