//! Mesh cleanup and PCA pose normalization (the first two steps of the
//! annotation pipeline).
//!
//! Cleanup runs in a fixed order so results are deterministic: degenerate
//! faces, duplicate vertices, degenerate faces again (merging can collapse
//! faces), duplicate faces, unreferenced vertices.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::annotation::ScanAnnotation;
use crate::diagnostics::{Diagnostic, Diagnostics, Severity};
use crate::mesh::TriMesh;

pub const DEFAULT_VERTEX_MERGE_TOLERANCE: f64 = 1e-6; // mm; merges only true duplicates
const DEGENERATE_AREA: f64 = 1e-12; // mm^2

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

/// What cleanup removed, and where every input vertex went.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanupReport {
    pub removed_degenerate_faces: usize,
    pub removed_duplicate_faces: usize,
    pub merged_duplicate_vertices: usize,
    pub removed_unreferenced_vertices: usize,
    /// Old vertex index -> new index, or None for removed/merged-away.
    pub index_map: Vec<Option<usize>>,
}

/// Proper rigid transform (rotation + translation) with det(R) = +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_mesh(&self, mesh: &TriMesh) -> TriMesh {
        TriMesh {
            vertices: mesh.vertices.iter().map(|v| self.apply(v)).collect(),
            faces: mesh.faces.clone(),
            normals: mesh
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| self.rotation * n).collect()),
        }
    }
}

fn face_is_degenerate(mesh: &TriMesh, f: &[usize; 3]) -> bool {
    if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
        return true;
    }
    let ab = mesh.vertices[f[1]] - mesh.vertices[f[0]];
    let ac = mesh.vertices[f[2]] - mesh.vertices[f[0]];
    0.5 * ab.cross(&ac).norm() < DEGENERATE_AREA
}

// Canonical form of a face under cyclic permutation (orientation preserved).
fn canonical_cycle(f: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| f[k]).unwrap();
    [f[k], f[(k + 1) % 3], f[(k + 2) % 3]]
}

/// Remove degenerate and duplicate faces, merge near-coincident vertices and
/// drop unreferenced ones, remapping per-vertex annotations consistently.
pub fn clean_mesh(
    mesh: &TriMesh,
    ann: Option<&ScanAnnotation>,
    vertex_merge_tolerance: f64,
) -> (TriMesh, Option<ScanAnnotation>, CleanupReport, Diagnostics) {
    assert!(vertex_merge_tolerance >= 0.0);
    let mut diags = Diagnostics::new();

    // Pass 1: degenerate faces.
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(mesh.faces.len());
    let mut removed_degenerate = 0usize;
    for f in &mesh.faces {
        if face_is_degenerate(mesh, f) {
            removed_degenerate += 1;
        } else {
            faces.push(*f);
        }
    }

    // Pass 2: duplicate vertices within tolerance, merged to the first
    // occurrence, found with a uniform grid keyed by tolerance-sized cells.
    let n = mesh.vertices.len();
    let mut merge_target: Vec<usize> = (0..n).collect();
    let mut merged_duplicate_vertices = 0usize;
    if vertex_merge_tolerance > 0.0 && n > 0 {
        let cell = vertex_merge_tolerance;
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let key = |p: &Point3<f64>| {
            (
                (p.x / cell).floor() as i64,
                (p.y / cell).floor() as i64,
                (p.z / cell).floor() as i64,
            )
        };
        for i in 0..n {
            let p = &mesh.vertices[i];
            let (kx, ky, kz) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(cands) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                            for &j in cands {
                                if (mesh.vertices[j] - p).norm() <= vertex_merge_tolerance {
                                    found = Some(j);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            match found {
                Some(j) => {
                    merge_target[i] = j;
                    merged_duplicate_vertices += 1;
                }
                None => grid.entry((kx, ky, kz)).or_default().push(i),
            }
        }
    }
    for f in &mut faces {
        for v in f.iter_mut() {
            *v = merge_target[*v];
        }
    }

    // Annotation consistency across merges.
    if let Some(ann) = ann {
        for i in 0..n {
            let j = merge_target[i];
            if j != i && ann.instances[i] != ann.instances[j] {
                diags.push(Diagnostic::at(
                    Severity::Warning,
                    "MERGE_INSTANCE_CONFLICT",
                    i,
                    format!(
                        "vertex {i} (instance {}) merged into vertex {j} (instance {})",
                        ann.instances[i], ann.instances[j]
                    ),
                ));
            }
        }
    }

    // Pass 3: re-check degenerate faces (merging may have collapsed some).
    let interim = TriMesh {
        vertices: mesh.vertices.clone(),
        faces: faces.clone(),
        normals: None,
    };
    faces.retain(|f| {
        let deg = face_is_degenerate(&interim, f);
        if deg {
            removed_degenerate += 1;
        }
        !deg
    });

    // Pass 4: duplicate faces (identical up to cyclic permutation).
    let mut seen: HashMap<[usize; 3], ()> = HashMap::new();
    let mut removed_duplicate_faces = 0usize;
    faces.retain(|f| {
        let c = canonical_cycle(*f);
        if seen.contains_key(&c) {
            removed_duplicate_faces += 1;
            false
        } else {
            seen.insert(c, ());
            true
        }
    });

    // Pass 5: unreferenced vertices (covers merged-away ones too).
    let mut referenced = vec![false; n];
    for f in &faces {
        for &v in f {
            referenced[v] = true;
        }
    }
    let mut index_map: Vec<Option<usize>> = vec![None; n];
    let mut new_vertices = Vec::new();
    let mut new_normals = mesh.normals.as_ref().map(|_| Vec::new());
    for i in 0..n {
        if referenced[i] {
            index_map[i] = Some(new_vertices.len());
            new_vertices.push(mesh.vertices[i]);
            if let (Some(out), Some(ns)) = (&mut new_normals, &mesh.normals) {
                out.push(ns[i]);
            }
        }
    }
    // Merged-away vertices are counted under merged_duplicate_vertices, not
    // here.
    let removed_unreferenced_vertices =
        (n - new_vertices.len()).saturating_sub(merged_duplicate_vertices);
    for f in &mut faces {
        for v in f.iter_mut() {
            *v = index_map[*v].expect("referenced vertex kept");
        }
    }
    // Merged vertices map to their surviving target.
    for i in 0..n {
        if index_map[i].is_none() {
            let t = merge_target[i];
            if t != i {
                index_map[i] = index_map[t];
            }
        }
    }

    let out_mesh = TriMesh {
        vertices: new_vertices,
        faces,
        normals: new_normals,
    };
    let out_ann = ann.map(|a| {
        let mut labels = vec![0u32; out_mesh.vertex_count()];
        let mut instances = vec![0u32; out_mesh.vertex_count()];
        // First occurrence wins; iterate in reverse so earlier indices
        // overwrite later ones.
        for i in (0..n).rev() {
            if let Some(j) = index_map[i] {
                labels[j] = a.labels[i];
                instances[j] = a.instances[i];
            }
        }
        ScanAnnotation {
            patient_id: a.patient_id.clone(),
            jaw: a.jaw,
            labels,
            instances,
        }
    });
    let report = CleanupReport {
        removed_degenerate_faces: removed_degenerate,
        removed_duplicate_faces,
        merged_duplicate_vertices,
        removed_unreferenced_vertices,
        index_map,
    };
    (out_mesh, out_ann, report, diags.finish())
}

/// How PCA samples the surface. Unweighted vertices is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaWeighting {
    #[default]
    Vertices,
    FaceAreaWeighted,
}

/// Center the mesh and align its principal axes with x (largest variance),
/// y, z (smallest; the occlusal-plane normal). Sign rule: flip z so the mean
/// face normal points up, flip x so the extreme-|x| vertex is positive,
/// y = z cross x.
pub fn pose_normalize(mesh: &TriMesh) -> Result<(TriMesh, RigidTransform), PreprocessError> {
    pose_normalize_with(mesh, PcaWeighting::Vertices)
}

pub fn pose_normalize_with(
    mesh: &TriMesh,
    weighting: PcaWeighting,
) -> Result<(TriMesh, RigidTransform), PreprocessError> {
    if mesh.vertices.len() < 3 {
        return Err(PreprocessError::DegenerateGeometry(format!(
            "need at least 3 vertices, have {}",
            mesh.vertices.len()
        )));
    }

    let (centroid, cov) = match weighting {
        PcaWeighting::Vertices => {
            let c = mesh.centroid();
            let mut cov = Matrix3::zeros();
            for v in &mesh.vertices {
                let d = v - c;
                cov += d * d.transpose();
            }
            (c, cov / mesh.vertices.len() as f64)
        }
        PcaWeighting::FaceAreaWeighted => {
            // Face barycenters weighted by area.
            let mut total = 0.0;
            let mut csum = Vector3::zeros();
            for fi in 0..mesh.faces.len() {
                let a = mesh.face_area(fi);
                let [i, j, k] = mesh.faces[fi];
                let b = (mesh.vertices[i].coords + mesh.vertices[j].coords
                    + mesh.vertices[k].coords)
                    / 3.0;
                csum += a * b;
                total += a;
            }
            if total <= 0.0 {
                return Err(PreprocessError::DegenerateGeometry(
                    "zero total surface area".into(),
                ));
            }
            let c = Point3::from(csum / total);
            let mut cov = Matrix3::zeros();
            for fi in 0..mesh.faces.len() {
                let a = mesh.face_area(fi);
                let [i, j, k] = mesh.faces[fi];
                let b = Point3::from(
                    (mesh.vertices[i].coords + mesh.vertices[j].coords
                        + mesh.vertices[k].coords)
                        / 3.0,
                );
                let d = b - c;
                cov += a * d * d.transpose();
            }
            (c, cov / total)
        }
    };

    let eig = cov.symmetric_eigen();
    // Sort eigenpairs by descending eigenvalue.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if values[1] <= 1e-12 * values[0].max(1e-300) {
        return Err(PreprocessError::DegenerateGeometry(
            "covariance is rank-deficient (collinear or coincident vertices)".into(),
        ));
    }
    let mut x_axis: Vector3<f64> = eig.eigenvectors.column(order[0]).into();
    let mut z_axis: Vector3<f64> = eig.eigenvectors.column(order[2]).into();

    // Flip z so the mean face normal has non-negative z in the output frame.
    let mut normal_sum = Vector3::zeros();
    for fi in 0..mesh.faces.len() {
        normal_sum += mesh.face_normal(fi);
    }
    if normal_sum.dot(&z_axis) < 0.0 {
        z_axis = -z_axis;
    }
    // Flip x so the vertex with maximum |x| lands on the positive side.
    let mut best = 0.0_f64;
    let mut best_dot = 0.0_f64;
    for v in &mesh.vertices {
        let d = (v - centroid).dot(&x_axis);
        if d.abs() > best {
            best = d.abs();
            best_dot = d;
        }
    }
    if best_dot < 0.0 {
        x_axis = -x_axis;
    }
    // Re-orthogonalize x against z, then complete the right-handed frame.
    x_axis = (x_axis - z_axis * x_axis.dot(&z_axis)).normalize();
    let z_axis = z_axis.normalize();
    let y_axis = z_axis.cross(&x_axis);

    let rotation = Matrix3::from_rows(&[
        x_axis.transpose(),
        y_axis.transpose(),
        z_axis.transpose(),
    ]);
    let translation = -(rotation * centroid.coords);
    let transform = RigidTransform {
        rotation,
        translation,
    };
    Ok((transform.apply_mesh(mesh), transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Jaw;

    fn mesh(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> TriMesh {
        TriMesh::new(vertices, faces).unwrap()
    }

    #[test]
    fn degenerate_face_removed() {
        let m = mesh(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 0, 1], [0, 1, 2]],
        );
        let (out, _, report, _) = clean_mesh(&m, None, 0.0);
        assert_eq!(report.removed_degenerate_faces, 1);
        assert_eq!(out.faces.len(), 1);
    }

    #[test]
    fn coincident_vertices_merge_and_collapse_face() {
        // v0 and v1 coincide within tolerance; the only face collapses and
        // everything is then unreferenced.
        let m = mesh(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(5e-7, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        let (out, _, report, _) = clean_mesh(&m, None, 1e-6);
        assert_eq!(report.merged_duplicate_vertices, 1);
        assert_eq!(report.removed_degenerate_faces, 1);
        assert_eq!(out.faces.len(), 0);
        assert_eq!(out.vertices.len(), 0);
    }

    #[test]
    fn clean_mesh_is_idempotent_on_clean_input() {
        let m = mesh(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        );
        let (out, _, report, _) = clean_mesh(&m, None, 1e-6);
        assert_eq!(out, m);
        assert_eq!(report.removed_degenerate_faces, 0);
        assert_eq!(report.removed_duplicate_faces, 0);
        assert_eq!(report.merged_duplicate_vertices, 0);
        assert_eq!(report.removed_unreferenced_vertices, 0);
    }

    #[test]
    fn duplicate_faces_removed_up_to_cyclic_permutation() {
        let m = mesh(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 2, 0]],
        );
        let (out, _, report, _) = clean_mesh(&m, None, 0.0);
        assert_eq!(report.removed_duplicate_faces, 1);
        assert_eq!(out.faces.len(), 1);
    }

    #[test]
    fn annotation_remapped_through_merge() {
        let m = mesh(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1e-9), // duplicate of v0
            ],
            vec![[0, 1, 2], [3, 1, 2]],
        );
        let ann = ScanAnnotation {
            patient_id: "p".into(),
            jaw: Jaw::Upper,
            labels: vec![11, 11, 0, 11],
            instances: vec![1, 1, 0, 1],
        };
        let (out, out_ann, report, diags) = clean_mesh(&m, Some(&ann), 1e-6);
        assert_eq!(report.merged_duplicate_vertices, 1);
        assert!(diags.is_empty());
        let out_ann = out_ann.unwrap();
        assert_eq!(out.vertex_count(), 3);
        assert_eq!(out_ann.labels, vec![11, 11, 0]);
        // Duplicate face after remap is dropped.
        assert_eq!(out.faces.len(), 1);
    }

    #[test]
    fn pose_normalize_centers_and_sorts_variances() {
        // Axis-aligned box sample, extents 10 > 4 > 1, pre-scrambled axes.
        let mut vertices = Vec::new();
        for &x in &[-5.0, 5.0] {
            for &y in &[-2.0, 2.0] {
                for &z in &[-0.5, 0.5] {
                    // Put the largest extent on y, second on z, smallest on x.
                    vertices.push(Point3::new(z, x, y));
                }
            }
        }
        let m = TriMesh {
            vertices,
            faces: vec![[0, 1, 2]],
            normals: None,
        };
        let (out, transform) = pose_normalize(&m).unwrap();
        assert!(out.centroid().coords.norm() < 1e-9);
        let var = |axis: usize| -> f64 {
            out.vertices.iter().map(|v| v.coords[axis].powi(2)).sum::<f64>()
                / out.vertices.len() as f64
        };
        assert!(var(0) > var(1) && var(1) > var(2));
        assert!((var(0) - 25.0).abs() < 1e-9);
        // transform(input) == output
        for (v, o) in m.vertices.iter().zip(&out.vertices) {
            assert!((transform.apply(v) - o).norm() < 1e-12);
        }
        // Proper rotation.
        let r = transform.rotation;
        assert!((r.transpose() * r - Matrix3::identity()).norm() < 1e-9);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let m = TriMesh {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            faces: vec![],
            normals: None,
        };
        assert!(pose_normalize(&m).is_err());
    }

    #[test]
    fn pose_normalization_is_canonical_under_rigid_motion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // A general-position mesh: random points stretched anisotropically,
        // with a few faces so the normal sign rule has something to act on.
        let vertices: Vec<Point3<f64>> = (0..40)
            .map(|_| {
                Point3::new(
                    10.0 * rng.gen::<f64>(),
                    4.0 * rng.gen::<f64>(),
                    1.0 * rng.gen::<f64>(),
                )
            })
            .collect();
        let faces = vec![[0, 1, 2], [3, 4, 5], [6, 7, 8]];
        let m = TriMesh {
            vertices,
            faces,
            normals: None,
        };
        let (canon, _) = pose_normalize(&m).unwrap();
        for trial in 0..5 {
            let axis = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>())
                .normalize();
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            let rot = nalgebra::Rotation3::from_axis_angle(
                &nalgebra::Unit::new_normalize(axis),
                angle,
            );
            let t = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 20.0;
            let moved = TriMesh {
                vertices: m.vertices.iter().map(|v| rot * v + t).collect(),
                faces: m.faces.clone(),
                normals: None,
            };
            let (canon2, _) = pose_normalize(&moved).unwrap();
            for (a, b) in canon.vertices.iter().zip(&canon2.vertices) {
                assert!((a - b).norm() < 1e-6, "trial {trial}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn rigid_transform_preserves_distances() {
        let m = TriMesh {
            vertices: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(3.0, 1.0, 0.0),
                Point3::new(0.0, 2.0, 5.0),
                Point3::new(1.0, 1.0, 1.0),
            ],
            faces: vec![[0, 1, 2]],
            normals: None,
        };
        let (out, _) = pose_normalize(&m).unwrap();
        for i in 0..m.vertices.len() {
            for j in i + 1..m.vertices.len() {
                let before = (m.vertices[i] - m.vertices[j]).norm();
                let after = (out.vertices[i] - out.vertices[j]).norm();
                assert!((before - after).abs() < 1e-9);
            }
        }
    }
}
