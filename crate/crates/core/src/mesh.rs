//! Triangle mesh data model and basic connectivity queries.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {vertex} but mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("normals count {normals} does not match vertex count {vertices}")]
    NormalCountMismatch { normals: usize, vertices: usize },
    #[error("normal {index} has norm {norm} (expected 1 within 1e-6)")]
    NormalNotUnit { index: usize, norm: f64 },
}

/// Triangle mesh: vertex coordinates in millimetres and triangular faces as
/// vertex-index triples. Normals, when present, are per-vertex unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = TriMesh {
            vertices,
            faces,
            normals: None,
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn with_normals(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
        normals: Vec<Vector3<f64>>,
    ) -> Result<Self, MeshError> {
        let mesh = TriMesh {
            vertices,
            faces,
            normals: Some(normals),
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn check(&self) -> Result<(), MeshError> {
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if v >= self.vertices.len() {
                    return Err(MeshError::FaceIndexOutOfRange {
                        face: fi,
                        vertex: v,
                        vertex_count: self.vertices.len(),
                    });
                }
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.vertices.len() {
                return Err(MeshError::NormalCountMismatch {
                    normals: normals.len(),
                    vertices: self.vertices.len(),
                });
            }
            for (i, n) in normals.iter().enumerate() {
                let norm = n.norm();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(MeshError::NormalNotUnit { index: i, norm });
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi];
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        0.5 * ab.cross(&ac).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|fi| self.face_area(fi)).sum()
    }

    pub fn face_normal(&self, fi: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[fi];
        let ab = self.vertices[b] - self.vertices[a];
        let ac = self.vertices[c] - self.vertices[a];
        let n = ab.cross(&ac);
        let norm = n.norm();
        if norm > 0.0 {
            n / norm
        } else {
            Vector3::zeros()
        }
    }

    /// Undirected edges, deduplicated, sorted lexicographically with the
    /// smaller vertex first. This is the canonical edge order used by
    /// per-edge fields (random-walker features).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Per-vertex adjacency lists (sorted, deduplicated).
    pub fn vertex_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Faces incident to each undirected edge, keyed by the canonical edge
    /// order of `edges()`. Returns (edges, per-edge face lists).
    pub fn edge_faces(&self) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
        let edges = self.edges();
        let lookup: std::collections::HashMap<(usize, usize), usize> =
            edges.iter().copied().zip(0..).collect();
        let mut faces = vec![Vec::new(); edges.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let e = lookup[&(a.min(b), a.max(b))];
                faces[e].push(fi);
            }
        }
        (edges, faces)
    }

    /// Face adjacency across shared undirected edges.
    pub fn face_adjacency(&self) -> Vec<Vec<usize>> {
        let (_, edge_faces) = self.edge_faces();
        let mut adj = vec![Vec::new(); self.faces.len()];
        for fs in &edge_faces {
            for i in 0..fs.len() {
                for j in 0..fs.len() {
                    if i != j {
                        adj[fs[i]].push(fs[j]);
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    pub fn centroid(&self) -> Point3<f64> {
        let mut sum = Vector3::zeros();
        for v in &self.vertices {
            sum += v.coords;
        }
        Point3::from(sum / self.vertices.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn face_index_out_of_range_rejected() {
        let err = TriMesh::new(vec![Point3::origin()], vec![[0, 0, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::FaceIndexOutOfRange { vertex: 1, .. }));
    }

    #[test]
    fn area_and_normal_of_unit_triangle() {
        let m = tri();
        assert!((m.face_area(0) - 0.5).abs() < 1e-15);
        assert!((m.face_normal(0) - Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn edges_are_canonical() {
        let m = tri();
        assert_eq!(m.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn non_unit_normals_rejected() {
        let err = TriMesh::with_normals(
            vec![Point3::origin()],
            vec![],
            vec![Vector3::new(0.0, 0.0, 2.0)],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NormalNotUnit { .. }));
    }
}
