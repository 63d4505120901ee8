//! Tooth-instance extraction from per-vertex annotations, plus whole-scan
//! validation.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::annotation::{annotation_content_diagnostics, ScanAnnotation};
use crate::diagnostics::{Diagnostic, Diagnostics, Severity};
use crate::mesh::TriMesh;

/// How the scalar "size" of a tooth is derived from its vertex set.
/// The default is twice the maximum centroid-to-vertex distance (a
/// bounding-sphere style diameter); the bounding-box diagonal is available as
/// an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDefinition {
    #[default]
    MaxRadiusDiameter,
    BoundingBoxDiagonal,
}

/// One annotated or predicted tooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToothInstance {
    pub instance_id: u32,
    pub label: u32,
    pub vertex_ids: Vec<usize>,
    pub centroid: Point3<f64>,
    pub size: f64,
}

fn centroid_of(mesh: &TriMesh, vertex_ids: &[usize]) -> Point3<f64> {
    let mut sum = Vector3::zeros();
    for &v in vertex_ids {
        sum += mesh.vertices[v].coords;
    }
    Point3::from(sum / vertex_ids.len() as f64)
}

fn size_of(
    mesh: &TriMesh,
    vertex_ids: &[usize],
    centroid: &Point3<f64>,
    def: SizeDefinition,
) -> f64 {
    match def {
        SizeDefinition::MaxRadiusDiameter => {
            let max_r = vertex_ids
                .iter()
                .map(|&v| (mesh.vertices[v] - centroid).norm())
                .fold(0.0_f64, f64::max);
            2.0 * max_r
        }
        SizeDefinition::BoundingBoxDiagonal => {
            let mut lo = Vector3::repeat(f64::INFINITY);
            let mut hi = Vector3::repeat(f64::NEG_INFINITY);
            for &v in vertex_ids {
                let p = mesh.vertices[v].coords;
                lo = lo.inf(&p);
                hi = hi.sup(&p);
            }
            (hi - lo).norm()
        }
    }
}

/// Group vertices by nonzero instance id into `ToothInstance`s, sorted by id.
/// The instance label is the most frequent nonzero member label (ties go to
/// the smaller FDI code). Instances whose members are all labeled 0 are
/// reported and excluded.
pub fn extract_instances(
    mesh: &TriMesh,
    ann: &ScanAnnotation,
) -> (Vec<ToothInstance>, Diagnostics) {
    extract_instances_with(mesh, ann, SizeDefinition::default())
}

pub fn extract_instances_with(
    mesh: &TriMesh,
    ann: &ScanAnnotation,
    size_def: SizeDefinition,
) -> (Vec<ToothInstance>, Diagnostics) {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (v, &inst) in ann.instances.iter().enumerate() {
        if inst != 0 {
            groups.entry(inst).or_default().push(v);
        }
    }
    let mut diags = Diagnostics::new();
    let mut out = Vec::with_capacity(groups.len());
    for (inst, vertex_ids) in groups {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &v in &vertex_ids {
            let l = ann.labels[v];
            if l != 0 {
                *counts.entry(l).or_default() += 1;
            }
        }
        // Majority vote over nonzero labels; BTreeMap iteration order gives
        // the smaller code on ties.
        let label = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&l, _)| l);
        let Some(label) = label else {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "INSTANCE_ALL_GINGIVA_LABEL",
                inst as usize,
                format!("instance {inst} has no nonzero label; excluded from metrics"),
            ));
            continue;
        };
        if counts.len() > 1 {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "INSTANCE_LABEL_NONUNIFORM",
                inst as usize,
                format!("instance {inst} spans labels {:?}; majority gives {label}",
                    counts.keys().collect::<Vec<_>>()),
            ));
        }
        let centroid = centroid_of(mesh, &vertex_ids);
        let size = size_of(mesh, &vertex_ids, &centroid, size_def);
        out.push(ToothInstance {
            instance_id: inst,
            label,
            vertex_ids,
            centroid,
            size,
        });
    }
    (out, diags.finish())
}

/// Validate a scan + annotation pair. Never fails; everything is reported as
/// a diagnostic.
pub fn validate_scan(mesh: &TriMesh, ann: &ScanAnnotation) -> Diagnostics {
    let mut diags = Diagnostics::new();
    if ann.labels.len() != mesh.vertex_count() {
        diags.push(Diagnostic::new(
            Severity::Error,
            "LENGTH_MISMATCH",
            format!(
                "annotation has {} entries, mesh has {} vertices",
                ann.labels.len(),
                mesh.vertex_count()
            ),
        ));
        return diags.finish();
    }
    diags.extend(annotation_content_diagnostics(ann));

    // Non-uniform instance labels.
    let mut instance_labels: BTreeMap<u32, std::collections::BTreeSet<u32>> = BTreeMap::new();
    for (v, &inst) in ann.instances.iter().enumerate() {
        if inst != 0 {
            instance_labels.entry(inst).or_default().insert(ann.labels[v]);
        }
    }
    for (inst, labels) in &instance_labels {
        let nonzero: Vec<_> = labels.iter().filter(|&&l| l != 0).collect();
        if nonzero.len() > 1 {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "INSTANCE_LABEL_NONUNIFORM",
                *inst as usize,
                format!("instance {inst} spans labels {nonzero:?}"),
            ));
        }
        if nonzero.is_empty() {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "INSTANCE_ALL_GINGIVA_LABEL",
                *inst as usize,
                format!("instance {inst} has no nonzero label"),
            ));
        }
    }

    // Vertices never referenced by any face.
    let mut referenced = vec![false; mesh.vertex_count()];
    for f in &mesh.faces {
        for &v in f {
            referenced[v] = true;
        }
    }
    for (v, r) in referenced.iter().enumerate() {
        if !r {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "VERTEX_UNREFERENCED",
                v,
                "vertex is not referenced by any face",
            ));
        }
    }
    diags.finish()
}
