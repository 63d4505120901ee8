//! Single-scan subcommands: validate, clean, normalize, flatten,
//! backproject, synth.

use std::path::{Path, PathBuf};

use dentalscan_core::annotation::{annotation_content_diagnostics, write_annotation};
use dentalscan_core::curvature::max_curvature;
use dentalscan_core::instances::validate_scan;
use dentalscan_core::obj::write_obj;
use dentalscan_core::preprocess::{clean_mesh, pose_normalize};
use dentalscan_core::synthgen::{generate_jaw, SynthConfig};
use dentalscan_core::uvflatten::{backproject_polygon, crop_sphere, harmonic_flatten, SubMesh, UVChart};
use dentalscan_core::{Diagnostics, TriMesh};
use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};

use crate::config::{EffectiveConfig, RunConfig};
use crate::io::{emit_json, load_annotation, load_json, load_mesh, write_bytes, CliError, CliResult};

#[derive(Serialize)]
struct ValidateReport {
    mesh: PathBuf,
    annotation: PathBuf,
    diagnostics: Diagnostics,
    ok: bool,
}

pub fn cmd_validate(mesh_path: &Path, ann_path: &Path, json: bool) -> CliResult<()> {
    let mesh = load_mesh(mesh_path)?;
    let ann = load_annotation(ann_path, mesh.vertex_count())?;
    let mut diags = validate_scan(&mesh, &ann);
    diags.extend(annotation_content_diagnostics(&ann));
    let diags = diags.finish();
    let ok = !diags.has_errors();
    if json {
        emit_json(
            &ValidateReport {
                mesh: mesh_path.to_path_buf(),
                annotation: ann_path.to_path_buf(),
                diagnostics: diags.clone(),
                ok,
            },
            None,
        )?;
    } else {
        print!("{}", diags.render_text());
        println!("{}: {}", mesh_path.display(), if ok { "ok" } else { "invalid" });
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Domain(diags.into_iter().collect()))
    }
}

#[derive(Serialize)]
struct CleanReport {
    config: EffectiveConfig,
    report: dentalscan_core::preprocess::CleanupReport,
    diagnostics: Diagnostics,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_clean(
    mesh_path: &Path,
    ann_path: Option<&Path>,
    out_mesh: &Path,
    out_ann: Option<&Path>,
    report_path: Option<&Path>,
    cfg: &RunConfig,
) -> CliResult<()> {
    let mesh = load_mesh(mesh_path)?;
    let ann = match ann_path {
        Some(p) => Some(load_annotation(p, mesh.vertex_count())?),
        None => None,
    };
    let effective = cfg.effective();
    let (cleaned, cleaned_ann, report, diags) =
        clean_mesh(&mesh, ann.as_ref(), effective.merge_tolerance);
    write_bytes(out_mesh, &write_obj(&cleaned))?;
    if let (Some(out), Some(a)) = (out_ann, cleaned_ann.as_ref()) {
        write_bytes(out, &write_annotation(a))?;
    }
    emit_json(
        &CleanReport {
            config: effective,
            report,
            diagnostics: diags,
        },
        report_path,
    )
}

#[derive(Serialize)]
struct NormalizeReport {
    config: EffectiveConfig,
    transform: dentalscan_core::preprocess::RigidTransform,
}

pub fn cmd_normalize(
    mesh_path: &Path,
    out_mesh: &Path,
    report_path: Option<&Path>,
    cfg: &RunConfig,
) -> CliResult<()> {
    let mesh = load_mesh(mesh_path)?;
    let (normalized, transform) = pose_normalize(&mesh)
        .map_err(|e| CliError::domain("POSE_NORMALIZE", e.to_string()))?;
    write_bytes(out_mesh, &write_obj(&normalized))?;
    emit_json(
        &NormalizeReport {
            config: cfg.effective(),
            transform,
        },
        report_path,
    )
}

/// On-disk chart: self-contained for back-projection (uv + faces + parent
/// map) plus per-vertex maximum curvature.
#[derive(Serialize, Deserialize)]
pub struct ChartFile {
    pub uv: Vec<[f64; 2]>,
    pub boundary_loop: Vec<usize>,
    pub parent_index_map: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
    pub curvature: Vec<f64>,
}

pub fn cmd_flatten(
    mesh_path: &Path,
    center: Point3<f64>,
    radius: f64,
    out: &Path,
) -> CliResult<()> {
    let mesh = load_mesh(mesh_path)?;
    let sub = crop_sphere(&mesh, center, radius)
        .map_err(|e| CliError::domain("CROP", e.to_string()))?;
    let chart = harmonic_flatten(&sub).map_err(|e| CliError::domain("FLATTEN", e.to_string()))?;
    let (curvature, _) = max_curvature(&sub.mesh);
    let file = ChartFile {
        uv: chart.uv.iter().map(|p| [p.x, p.y]).collect(),
        boundary_loop: chart.boundary_loop,
        parent_index_map: sub.parent_index_map,
        faces: sub.mesh.faces,
        curvature,
    };
    emit_json(&file, Some(out))
}

pub fn cmd_backproject(chart_path: &Path, polygon_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let file: ChartFile = load_json(chart_path)?;
    let polygon_raw: Vec<[f64; 2]> = load_json(polygon_path)?;
    let polygon: Vec<Point2<f64>> = polygon_raw.iter().map(|p| Point2::new(p[0], p[1])).collect();
    // Rebuild the submesh with uv-plane positions; back-projection only uses
    // connectivity and the parent map.
    let vertices: Vec<Point3<f64>> = file.uv.iter().map(|p| Point3::new(p[0], p[1], 0.0)).collect();
    let mesh = TriMesh::new(vertices, file.faces.clone())
        .map_err(|e| CliError::domain("CHART_INVALID", e.to_string()))?;
    let sub = SubMesh {
        mesh,
        parent_index_map: file.parent_index_map.clone(),
    };
    let chart = UVChart {
        uv: file.uv.iter().map(|p| Point2::new(p[0], p[1])).collect(),
        boundary_loop: file.boundary_loop.clone(),
    };
    let indices = backproject_polygon(&sub, &chart, &polygon)
        .map_err(|e| CliError::domain("BACKPROJECT", e.to_string()))?;
    emit_json(&indices.into_iter().collect::<Vec<usize>>(), out)
}

#[derive(Serialize)]
struct SynthExtrasFile {
    config: SynthConfig,
    ground_truth: dentalscan_core::synthgen::GroundTruthExtras,
}

pub fn cmd_synth(config_path: Option<&Path>, seed: Option<u64>, out_dir: &Path) -> CliResult<()> {
    let mut cfg: SynthConfig = match config_path {
        Some(p) => load_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (mesh, ann, extras) =
        generate_jaw(&cfg).map_err(|e| CliError::domain("SYNTH", e.to_string()))?;
    let stem = format!("{}_{}", ann.patient_id, ann.jaw);
    write_bytes(&out_dir.join(format!("{stem}.obj")), &write_obj(&mesh))?;
    write_bytes(&out_dir.join(format!("{stem}.json")), &write_annotation(&ann))?;
    emit_json(
        &SynthExtrasFile {
            config: cfg,
            ground_truth: extras,
        },
        Some(&out_dir.join("extras.json")),
    )
}
