//! `postproc <op>`: file-based front end for the label-field, clustering,
//! sampling, arch, proposal, and random-walker operations.
//!
//! File formats: points are JSON arrays of `[x, y, z]`; label and field
//! files are JSON arrays of integers; vote hits are per-face arrays of
//! `[label, weight]` pairs; walker seeds are arrays of `[vertex, label]`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Subcommand;
use dentalscan_core::postproc::{
    arch_label_correct, boundary_aware_sample, convexity_feature, dbscan, density_peaks,
    farthest_point_sampling, fit_arch_curve, grid_subsample, island_removal, knn_label_vote,
    knn_logit_interpolate, label_closing, majority_vote_fusion, merge_proposals,
    offset_shift_cluster, random_walker, ArchCurve, Proposal,
};
use dentalscan_core::Jaw;
use nalgebra::{Point3, Vector3};
use serde::Serialize;

use crate::io::{emit_json, load_json, load_mesh, CliError, CliResult};

#[derive(Subcommand, Debug)]
pub enum PostprocOp {
    /// Cluster 3D points by density reachability (-1 = noise)
    Dbscan {
        /// Points file: JSON array of [x, y, z]
        points: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        min_pts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick k cluster centers by density-peak ranking and assign all points
    DensityPeaks {
        points: PathBuf,
        #[arg(long)]
        cutoff_distance: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shift points by predicted offsets, then cluster into instances
    OffsetShift {
        points: PathBuf,
        /// Offsets file: JSON array of [dx, dy, dz], parallel to points
        offsets: PathBuf,
        /// Mask file: JSON array of 0/1 gingiva flags, parallel to points
        mask: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        min_pts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy farthest-point subsampling
    Fps {
        points: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Farthest-point sampling restricted to instance-boundary points
    BoundarySample {
        points: PathBuf,
        /// Instance ids file: JSON array of nonnegative integers
        instances: PathBuf,
        #[arg(long, default_value_t = 8)]
        k_neighbors: usize,
        #[arg(long)]
        n_extra: usize,
        #[arg(long, default_value_t = 0)]
        seed_index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep one point per occupied grid cell
    GridSubsample {
        points: PathBuf,
        #[arg(long)]
        cell_size: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upsample labels to query points by k-NN majority vote
    KnnVote {
        labeled_points: PathBuf,
        labels: PathBuf,
        query_points: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upsample logit vectors by inverse-distance-weighted k-NN
    KnnLogit {
        labeled_points: PathBuf,
        /// Logits file: JSON array of per-point logit arrays
        logits: PathBuf,
        query_points: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuse per-face weighted (label, weight) hits into a face label field
    VoteFusion {
        /// Hits file: JSON array (per face) of [label, weight] pairs
        hits: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reassign unassigned and undersized label components to the nearest label
    IslandRemoval {
        mesh: PathBuf,
        /// Face label field: JSON array of integers (-1 = unassigned)
        field: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_island_faces: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Morphological closing of each nonzero label against gingiva
    LabelClosing {
        mesh: PathBuf,
        field: PathBuf,
        #[arg(long, default_value_t = 1)]
        iterations: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the dental-arch parabola to projected centroids
    ArchFit {
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair duplicate/misordered FDI labels along the arch
    ArchCorrect {
        points: PathBuf,
        /// Observed FDI labels, parallel to points
        labels: PathBuf,
        #[arg(long)]
        jaw: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transitively merge tooth proposals with overlapping foregrounds
    MergeProposals {
        /// Proposals file: JSON array of {indices, seg_logits, class_logits}
        proposals: PathBuf,
        #[arg(long, default_value_t = 0.35)]
        iou_threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Propagate seed labels over the mesh by random-walker probabilities
    RandomWalker {
        mesh: PathBuf,
        /// Seeds file: JSON array of [vertex_index, label]
        seeds: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Per-edge feature file; defaults to the mesh convexity feature
        #[arg(long)]
        feature: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-edge concavity scores for the walker weighting
    Convexity {
        mesh: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_points(path: &PathBuf) -> CliResult<Vec<Point3<f64>>> {
    let raw: Vec<[f64; 3]> = load_json(path)?;
    Ok(raw.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect())
}

fn parse_jaw(raw: &str) -> CliResult<Jaw> {
    match raw {
        "upper" => Ok(Jaw::Upper),
        "lower" => Ok(Jaw::Lower),
        other => Err(CliError::Usage(format!(
            "jaw must be \"upper\" or \"lower\", got {other:?}"
        ))),
    }
}

#[derive(Serialize)]
struct ClusterOutput {
    cluster_ids: Vec<i32>,
}

#[derive(Serialize)]
struct CentersOutput {
    centers: Vec<usize>,
    assignment: Vec<usize>,
}

#[derive(Serialize)]
struct IndicesOutput {
    indices: Vec<usize>,
}

#[derive(Serialize)]
struct FieldOutput {
    labels: Vec<i32>,
}

#[derive(Serialize)]
struct WalkerOutput {
    labels: Vec<u32>,
    label_list: Vec<u32>,
    /// Per vertex, arrival probabilities in `label_list` order.
    probabilities: Vec<Vec<f64>>,
}

pub fn run(op: PostprocOp) -> CliResult<()> {
    match op {
        PostprocOp::Dbscan {
            points,
            eps,
            min_pts,
            out,
        } => {
            if !(eps > 0.0) || min_pts == 0 {
                return Err(CliError::Usage("eps must be > 0 and min-pts >= 1".into()));
            }
            let pts = load_points(&points)?;
            let ids = dbscan(&pts, eps, min_pts);
            emit_json(&ClusterOutput { cluster_ids: ids }, out.as_deref())
        }
        PostprocOp::DensityPeaks {
            points,
            cutoff_distance,
            k,
            out,
        } => {
            let pts = load_points(&points)?;
            if k == 0 || k > pts.len() {
                return Err(CliError::Usage(format!(
                    "k must be in 1..={}, got {k}",
                    pts.len()
                )));
            }
            let (centers, assignment) = density_peaks(&pts, cutoff_distance, k);
            emit_json(&CentersOutput { centers, assignment }, out.as_deref())
        }
        PostprocOp::OffsetShift {
            points,
            offsets,
            mask,
            eps,
            min_pts,
            out,
        } => {
            let pts = load_points(&points)?;
            let offs_raw: Vec<[f64; 3]> = load_json(&offsets)?;
            let offs: Vec<Vector3<f64>> = offs_raw
                .iter()
                .map(|o| Vector3::new(o[0], o[1], o[2]))
                .collect();
            let mask_raw: Vec<u8> = load_json(&mask)?;
            let gingiva: Vec<bool> = mask_raw.iter().map(|&m| m != 0).collect();
            if pts.len() != offs.len() || pts.len() != gingiva.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!(
                        "{} points, {} offsets, {} mask entries",
                        pts.len(),
                        offs.len(),
                        gingiva.len()
                    ),
                ));
            }
            let ids = offset_shift_cluster(&pts, &offs, &gingiva, eps, min_pts);
            emit_json(&serde_json::json!({ "instance_ids": ids }), out.as_deref())
        }
        PostprocOp::Fps {
            points,
            n,
            seed_index,
            out,
        } => {
            let pts = load_points(&points)?;
            if n == 0 || n > pts.len() || seed_index >= pts.len() {
                return Err(CliError::Usage(format!(
                    "need 1 <= n <= {} and seed-index < {}",
                    pts.len(),
                    pts.len()
                )));
            }
            let indices = farthest_point_sampling(&pts, n, seed_index);
            emit_json(&IndicesOutput { indices }, out.as_deref())
        }
        PostprocOp::BoundarySample {
            points,
            instances,
            k_neighbors,
            n_extra,
            seed_index,
            out,
        } => {
            let pts = load_points(&points)?;
            let ids: Vec<u32> = load_json(&instances)?;
            if pts.len() != ids.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!("{} points vs {} instance ids", pts.len(), ids.len()),
                ));
            }
            if k_neighbors < 2 || seed_index >= pts.len() {
                return Err(CliError::Usage(
                    "need k-neighbors >= 2 and seed-index in range".into(),
                ));
            }
            let indices = boundary_aware_sample(&pts, &ids, k_neighbors, n_extra, seed_index);
            emit_json(&IndicesOutput { indices }, out.as_deref())
        }
        PostprocOp::GridSubsample {
            points,
            cell_size,
            out,
        } => {
            if !(cell_size > 0.0) {
                return Err(CliError::Usage("cell-size must be > 0".into()));
            }
            let pts = load_points(&points)?;
            let indices = grid_subsample(&pts, cell_size);
            emit_json(&IndicesOutput { indices }, out.as_deref())
        }
        PostprocOp::KnnVote {
            labeled_points,
            labels,
            query_points,
            k,
            out,
        } => {
            let pts = load_points(&labeled_points)?;
            let lbls: Vec<u32> = load_json(&labels)?;
            let queries = load_points(&query_points)?;
            if pts.is_empty() || k == 0 {
                return Err(CliError::Usage(
                    "need a non-empty labeled set and k >= 1".into(),
                ));
            }
            if pts.len() != lbls.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!("{} points vs {} labels", pts.len(), lbls.len()),
                ));
            }
            let result = knn_label_vote(&pts, &lbls, &queries, k);
            emit_json(&serde_json::json!({ "labels": result }), out.as_deref())
        }
        PostprocOp::KnnLogit {
            labeled_points,
            logits,
            query_points,
            k,
            out,
        } => {
            let pts = load_points(&labeled_points)?;
            let lgts: Vec<Vec<f64>> = load_json(&logits)?;
            let queries = load_points(&query_points)?;
            if pts.is_empty() || k == 0 {
                return Err(CliError::Usage(
                    "need a non-empty labeled set and k >= 1".into(),
                ));
            }
            if pts.len() != lgts.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!("{} points vs {} logit rows", pts.len(), lgts.len()),
                ));
            }
            let result = knn_logit_interpolate(&pts, &lgts, &queries, k);
            emit_json(&serde_json::json!({ "logits": result }), out.as_deref())
        }
        PostprocOp::VoteFusion { hits, out } => {
            let raw: Vec<Vec<(i32, f64)>> = load_json(&hits)?;
            if raw
                .iter()
                .any(|face| face.iter().any(|&(_, w)| !(w >= 0.0)))
            {
                return Err(CliError::domain(
                    "NEGATIVE_WEIGHT",
                    "vote weights must be nonnegative",
                ));
            }
            let labels = majority_vote_fusion(&raw);
            emit_json(&FieldOutput { labels }, out.as_deref())
        }
        PostprocOp::IslandRemoval {
            mesh,
            field,
            min_island_faces,
            out,
        } => {
            let m = load_mesh(&mesh)?;
            let f: Vec<i32> = load_json(&field)?;
            let labels = island_removal(&m, &f, min_island_faces)
                .map_err(|e| CliError::domain("ISLAND_REMOVAL", e.to_string()))?;
            emit_json(&FieldOutput { labels }, out.as_deref())
        }
        PostprocOp::LabelClosing {
            mesh,
            field,
            iterations,
            out,
        } => {
            let m = load_mesh(&mesh)?;
            let f: Vec<i32> = load_json(&field)?;
            let labels = label_closing(&m, &f, iterations)
                .map_err(|e| CliError::domain("LABEL_CLOSING", e.to_string()))?;
            emit_json(&FieldOutput { labels }, out.as_deref())
        }
        PostprocOp::ArchFit { points, out } => {
            let pts = load_points(&points)?;
            let curve = fit_arch_curve(&pts)
                .map_err(|e| CliError::domain("ARCH_FIT", e.to_string()))?;
            emit_json(&curve, out.as_deref())
        }
        PostprocOp::ArchCorrect {
            points,
            labels,
            jaw,
            out,
        } => {
            let pts = load_points(&points)?;
            let lbls: Vec<u32> = load_json(&labels)?;
            if pts.len() != lbls.len() {
                return Err(CliError::domain(
                    "LENGTH_MISMATCH",
                    format!("{} centroids vs {} labels", pts.len(), lbls.len()),
                ));
            }
            let jaw = parse_jaw(&jaw)?;
            let teeth: Vec<(Point3<f64>, u32)> =
                pts.into_iter().zip(lbls).collect();
            // The correction orders teeth by x directly; the fitted curve is
            // carried for the report.
            let curve = fit_arch_curve(&teeth.iter().map(|t| t.0).collect::<Vec<_>>())
                .unwrap_or(ArchCurve {
                    a: 0.0,
                    b: 0.0,
                    c: 0.0,
                    residual: 0.0,
                });
            let corrected = arch_label_correct(&teeth, &curve, jaw)
                .map_err(|e| CliError::domain("ARCH_CORRECT", e.to_string()))?;
            emit_json(
                &serde_json::json!({ "curve": curve, "labels": corrected }),
                out.as_deref(),
            )
        }
        PostprocOp::MergeProposals {
            proposals,
            iou_threshold,
            out,
        } => {
            if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
                return Err(CliError::Usage("iou-threshold must be in (0, 1]".into()));
            }
            let props: Vec<Proposal> = load_json(&proposals)?;
            let merged = merge_proposals(&props, iou_threshold);
            emit_json(&merged, out.as_deref())
        }
        PostprocOp::RandomWalker {
            mesh,
            seeds,
            beta,
            feature,
            out,
        } => {
            let m = load_mesh(&mesh)?;
            let seed_pairs: Vec<(usize, u32)> = load_json(&seeds)?;
            let seed_map: BTreeMap<usize, u32> = seed_pairs.into_iter().collect();
            let feat = match feature {
                Some(p) => load_json(&p)?,
                None => convexity_feature(&m),
            };
            let (labels, probabilities, label_list) = random_walker(&m, &seed_map, &feat, beta)
                .map_err(|e| CliError::domain("RANDOM_WALKER", e.to_string()))?;
            emit_json(
                &WalkerOutput {
                    labels,
                    label_list,
                    probabilities,
                },
                out.as_deref(),
            )
        }
        PostprocOp::Convexity { mesh, out } => {
            let m = load_mesh(&mesh)?;
            let feature = convexity_feature(&m);
            emit_json(&serde_json::json!({ "feature": feature }), out.as_deref())
        }
    }
}
