//! Per-vertex maximum principal curvature, used as the annotation overlay.
//!
//! Mean curvature comes from the cotangent Laplacian, Gaussian curvature from
//! the angle defect, both over mixed Voronoi areas (Meyer et al.). The maximum
//! absolute principal curvature is |H| + sqrt(max(0, H^2 - K)).

use nalgebra::Vector3;
use std::collections::HashSet;

use crate::diagnostics::{Diagnostic, Diagnostics, Severity};
use crate::mesh::TriMesh;

fn corner_angle(mesh: &TriMesh, f: &[usize; 3], corner: usize) -> f64 {
    let p = mesh.vertices[f[corner]];
    let a = mesh.vertices[f[(corner + 1) % 3]] - p;
    let b = mesh.vertices[f[(corner + 2) % 3]] - p;
    let denom = a.norm() * b.norm();
    if denom <= 0.0 {
        return 0.0;
    }
    (a.dot(&b) / denom).clamp(-1.0, 1.0).acos()
}

/// Mixed Voronoi area contribution of face `f` at corner `corner`.
fn mixed_area(mesh: &TriMesh, f: &[usize; 3], corner: usize) -> f64 {
    let angles = [
        corner_angle(mesh, f, 0),
        corner_angle(mesh, f, 1),
        corner_angle(mesh, f, 2),
    ];
    let area = {
        let ab = mesh.vertices[f[1]] - mesh.vertices[f[0]];
        let ac = mesh.vertices[f[2]] - mesh.vertices[f[0]];
        0.5 * ab.cross(&ac).norm()
    };
    let right = std::f64::consts::FRAC_PI_2;
    if angles.iter().all(|&a| a <= right + 1e-15) {
        // Non-obtuse: true Voronoi area from the two adjacent edge lengths and
        // opposite cotangents.
        let p = mesh.vertices[f[corner]];
        let q = mesh.vertices[f[(corner + 1) % 3]];
        let r = mesh.vertices[f[(corner + 2) % 3]];
        let cot_q = {
            let u = p - q;
            let v = r - q;
            let c = u.cross(&v).norm();
            if c > 0.0 { u.dot(&v) / c } else { 0.0 }
        };
        let cot_r = {
            let u = p - r;
            let v = q - r;
            let c = u.cross(&v).norm();
            if c > 0.0 { u.dot(&v) / c } else { 0.0 }
        };
        ((p - r).norm_squared() * cot_q + (p - q).norm_squared() * cot_r) / 8.0
    } else if angles[corner] > right {
        area / 2.0
    } else {
        area / 4.0
    }
}

/// Per-vertex maximum absolute principal curvature (1/mm). Boundary vertices
/// take the value of their nearest interior neighbor; vertices with a
/// zero-area neighborhood get 0 plus a diagnostic.
pub fn max_curvature(mesh: &TriMesh) -> (Vec<f64>, Diagnostics) {
    let n = mesh.vertex_count();
    let mut diags = Diagnostics::new();
    let mut area = vec![0.0; n];
    let mut laplace = vec![Vector3::zeros(); n];
    let mut angle_sum = vec![0.0; n];

    for f in &mesh.faces {
        for corner in 0..3 {
            let i = f[corner];
            area[i] += mixed_area(mesh, f, corner);
            angle_sum[i] += corner_angle(mesh, f, corner);
            // Cotangent Laplacian: the edge opposite this corner contributes
            // to its two endpoints.
            let j = f[(corner + 1) % 3];
            let k = f[(corner + 2) % 3];
            let p = mesh.vertices[i];
            let u = mesh.vertices[j] - p;
            let v = mesh.vertices[k] - p;
            let cross = u.cross(&v).norm();
            let cot = if cross > 0.0 { u.dot(&v) / cross } else { 0.0 };
            let d = mesh.vertices[k] - mesh.vertices[j];
            laplace[j] += 0.5 * cot * d;
            laplace[k] -= 0.5 * cot * d;
        }
    }

    // Boundary detection: edges with a single incident face.
    let mut edge_count: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut boundary: HashSet<usize> = HashSet::new();
    for (&(a, b), &c) in &edge_count {
        if c == 1 {
            boundary.insert(a);
            boundary.insert(b);
        }
    }

    let mut kappa = vec![0.0; n];
    for i in 0..n {
        if boundary.contains(&i) {
            continue;
        }
        if area[i] <= 1e-300 {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "CURVATURE_ZERO_AREA",
                i,
                "vertex neighborhood has zero area; curvature set to 0",
            ));
            continue;
        }
        // laplace already carries the 1/2 edge factor, so the mean curvature
        // normal is laplace / A and |H| is half its magnitude.
        let mean = laplace[i].norm() / (2.0 * area[i]);
        let gauss = (std::f64::consts::TAU - angle_sum[i]) / area[i];
        kappa[i] = mean.abs() + (mean * mean - gauss).max(0.0).sqrt();
    }

    // Boundary vertices copy their nearest interior neighbor (graph-nearest,
    // then Euclidean tie-break by distance).
    if !boundary.is_empty() {
        let adj = mesh.vertex_adjacency();
        for &b in &boundary {
            let mut best: Option<(f64, usize)> = None;
            // BFS until we hit interior vertices, then take the closest.
            let mut visited = HashSet::new();
            let mut frontier = vec![b];
            visited.insert(b);
            while best.is_none() && !frontier.is_empty() {
                let mut next = Vec::new();
                for &v in &frontier {
                    for &w in &adj[v] {
                        if visited.insert(w) {
                            if !boundary.contains(&w) {
                                let d = (mesh.vertices[w] - mesh.vertices[b]).norm();
                                if best.map_or(true, |(bd, bw)| (d, w) < (bd, bw)) {
                                    best = Some((d, w));
                                }
                            }
                            next.push(w);
                        }
                    }
                }
                frontier = next;
            }
            if let Some((_, w)) = best {
                kappa[b] = kappa[w];
            }
        }
    }
    (kappa, diags.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth_shapes::{flat_grid, icosphere, open_cylinder};

    #[test]
    fn flat_grid_interior_is_zero() {
        let mesh = flat_grid(8, 8, 1.0);
        let (kappa, diags) = max_curvature(&mesh);
        assert!(diags.is_empty());
        // Interior vertices only (boundary copies interior, also ~0).
        for &k in &kappa {
            assert!(k.abs() < 1e-9, "curvature {k}");
        }
    }

    #[test]
    fn icosphere_curvature_matches_radius() {
        for r in [1.0, 3.0] {
            let mesh = icosphere(r, 4);
            let (kappa, _) = max_curvature(&mesh);
            let mut values = kappa.clone();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = values[values.len() / 2];
            assert!(
                (median - 1.0 / r).abs() < 0.1 / r,
                "median {median} expected {}",
                1.0 / r
            );
        }
    }

    #[test]
    fn cylinder_max_curvature_matches_radius() {
        let r = 2.0;
        let mesh = open_cylinder(r, 10.0, 64, 32);
        let (kappa, _) = max_curvature(&mesh);
        // Check interior values (boundary rows copy interior anyway).
        let mut values = kappa.clone();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = values[values.len() / 2];
        assert!(
            (median - 1.0 / r).abs() < 0.1 / r,
            "median {median} expected {}",
            1.0 / r
        );
    }
}
