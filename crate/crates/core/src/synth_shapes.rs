//! Parametric primitive meshes shared by the synthetic jaw generator and the
//! geometry test fixtures.

use nalgebra::{Point3, Vector3};
use std::collections::HashMap;

use crate::mesh::TriMesh;

/// Regular (m+1) x (n+1) grid of vertices in the z = 0 plane, spacing `step`,
/// triangulated with outward (+z) orientation.
pub fn flat_grid(m: usize, n: usize, step: f64) -> TriMesh {
    let mut vertices = Vec::with_capacity((m + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=m {
            vertices.push(Point3::new(i as f64 * step, j as f64 * step, 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * (m + 1) + i;
    let mut faces = Vec::with_capacity(2 * m * n);
    for j in 0..n {
        for i in 0..m {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh {
        vertices,
        faces,
        normals: None,
    }
}

/// Icosphere of radius `r` centered at the origin, `level` subdivisions of
/// the icosahedron. Outward-oriented.
pub fn icosphere(r: f64, level: u32) -> TriMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a] + vertices[b]).normalize();
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            new_faces.push([f[0], mids[0], mids[2]]);
            new_faces.push([f[1], mids[1], mids[0]]);
            new_faces.push([f[2], mids[2], mids[1]]);
            new_faces.push([mids[0], mids[1], mids[2]]);
        }
        faces = new_faces;
    }

    TriMesh {
        vertices: vertices.iter().map(|v| Point3::from(v * r)).collect(),
        faces,
        normals: None,
    }
}

/// Open cylinder (no caps) of radius `r` and height `h`, axis z, centered at
/// the origin. `segments` around, `rings` along the axis.
pub fn open_cylinder(r: f64, h: f64, segments: usize, rings: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for j in 0..=rings {
        let z = -h / 2.0 + h * j as f64 / rings as f64;
        for i in 0..segments {
            let t = std::f64::consts::TAU * i as f64 / segments as f64;
            vertices.push(Point3::new(r * t.cos(), r * t.sin(), z));
        }
    }
    let idx = |i: usize, j: usize| j * segments + (i % segments);
    let mut faces = Vec::new();
    for j in 0..rings {
        for i in 0..segments {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh {
        vertices,
        faces,
        normals: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_vertices_lie_on_sphere() {
        let m = icosphere(2.5, 2);
        for v in &m.vertices {
            assert!((v.coords.norm() - 2.5).abs() < 1e-12);
        }
        // Closed surface: V - E + F = 2.
        let v = m.vertex_count() as i64;
        let e = m.edges().len() as i64;
        let f = m.face_count() as i64;
        assert_eq!(v - e + f, 2);
    }

    #[test]
    fn icosphere_is_outward_oriented() {
        let m = icosphere(1.0, 1);
        for fi in 0..m.face_count() {
            let [a, b, c] = m.faces[fi];
            let center = (m.vertices[a].coords + m.vertices[b].coords + m.vertices[c].coords) / 3.0;
            assert!(m.face_normal(fi).dot(&center) > 0.0);
        }
    }

    #[test]
    fn grid_counts() {
        let m = flat_grid(3, 2, 0.5);
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.face_count(), 12);
    }
}
