//! Tooth-region cropping, harmonic flattening to the unit disk and 2D polygon
//! back-projection (steps 3 and 5 of the annotation pipeline).
//!
//! Flattening follows the fixed-boundary harmonic scheme: the single boundary
//! loop of a disk-topology crop is pinned to the unit circle (angles by
//! cumulative 3D arc length) and the interior coordinates solve the discrete
//! Laplace equation with clamped cotangent weights.

use nalgebra::{Point2, Point3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::sparse::{solve_cg, SparseMatrix};

#[derive(Debug, Error)]
pub enum FlattenError {
    #[error("empty selection: no face lies entirely inside the crop sphere")]
    EmptySelection,
    #[error("not a disk: {0}")]
    NotADisk(String),
    #[error("non-manifold submesh: edge ({0}, {1}) has more than two incident faces")]
    NonManifold(usize, usize),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::sparse::SolveFailure),
    #[error("degenerate interior vertex {0}: all incident cotangent weights clamped to zero")]
    DegenerateWeights(usize),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
}

/// A cropped piece of a parent mesh; `parent_index_map[i]` is the parent
/// vertex index of submesh vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubMesh {
    pub mesh: TriMesh,
    pub parent_index_map: Vec<usize>,
}

/// Flattened chart: per-vertex uv plus the boundary loop that was pinned to
/// the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UVChart {
    pub uv: Vec<Point2<f64>>,
    pub boundary_loop: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Cotangent weights with negatives clamped to 0 (keeps the system an
    /// M-matrix, so the discrete maximum principle holds).
    #[default]
    ClampedCotangent,
    Uniform,
}

/// Keep the faces whose three vertices lie inside the sphere, then the
/// largest edge-connected component of them.
pub fn crop_sphere(
    mesh: &TriMesh,
    center: Point3<f64>,
    radius: f64,
) -> Result<SubMesh, FlattenError> {
    assert!(radius > 0.0);
    let inside: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|v| (v - center).norm() <= radius)
        .collect();
    let kept: Vec<usize> = mesh
        .faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().all(|&v| inside[v]))
        .map(|(fi, _)| fi)
        .collect();
    if kept.is_empty() {
        return Err(FlattenError::EmptySelection);
    }

    // Largest connected component over shared edges.
    let mut edge_to_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &fi in &kept {
        let f = mesh.faces[fi];
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_to_faces
                .entry((a.min(b), a.max(b)))
                .or_default()
                .push(fi);
        }
    }
    let kept_set: HashMap<usize, usize> = kept.iter().copied().zip(0..).collect();
    let mut component = vec![usize::MAX; kept.len()];
    let mut n_components = 0;
    for start in 0..kept.len() {
        if component[start] != usize::MAX {
            continue;
        }
        let id = n_components;
        n_components += 1;
        let mut stack = vec![start];
        component[start] = id;
        while let Some(local) = stack.pop() {
            let f = mesh.faces[kept[local]];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                for &nf in &edge_to_faces[&(a.min(b), a.max(b))] {
                    let nl = kept_set[&nf];
                    if component[nl] == usize::MAX {
                        component[nl] = id;
                        stack.push(nl);
                    }
                }
            }
        }
    }
    let mut sizes = vec![0usize; n_components];
    for &c in &component {
        sizes[c] += 1;
    }
    let best = (0..n_components).max_by_key(|&c| (sizes[c], usize::MAX - c)).unwrap();

    // Re-index vertices in parent order.
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for (local, &fi) in kept.iter().enumerate() {
        if component[local] == best {
            used.extend(mesh.faces[fi]);
        }
    }
    let parent_index_map: Vec<usize> = used.iter().copied().collect();
    let to_local: HashMap<usize, usize> = parent_index_map.iter().copied().zip(0..).collect();
    let vertices = parent_index_map.iter().map(|&p| mesh.vertices[p]).collect();
    let normals = mesh
        .normals
        .as_ref()
        .map(|ns| parent_index_map.iter().map(|&p| ns[p]).collect());
    let faces = kept
        .iter()
        .enumerate()
        .filter(|&(local, _)| component[local] == best)
        .map(|(_, &fi)| {
            let f = mesh.faces[fi];
            [to_local[&f[0]], to_local[&f[1]], to_local[&f[2]]]
        })
        .collect();
    Ok(SubMesh {
        mesh: TriMesh {
            vertices,
            faces,
            normals,
        },
        parent_index_map,
    })
}

/// The single boundary loop of a disk-topology submesh, ordered following the
/// orientation of the faces (counterclockwise seen from outside for an
/// outward-oriented surface). Errors when the submesh is not a disk.
pub fn boundary_loop(sub: &SubMesh) -> Result<Vec<usize>, FlattenError> {
    let mesh = &sub.mesh;
    // Directed edges as they occur in faces; a boundary half-edge has no
    // opposite.
    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if !directed.insert((a, b)) {
                return Err(FlattenError::NonManifold(a, b));
            }
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    for (&(a, b), &c) in &edge_count {
        if c > 2 {
            return Err(FlattenError::NonManifold(a, b));
        }
    }

    let boundary: Vec<(usize, usize)> = directed
        .iter()
        .copied()
        .filter(|&(a, b)| !directed.contains(&(b, a)))
        .collect();
    if boundary.is_empty() {
        return Err(FlattenError::NotADisk("no boundary (closed surface)".into()));
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in &boundary {
        if next.insert(a, b).is_some() {
            return Err(FlattenError::NonManifold(a, b));
        }
    }

    // Walk one loop starting from the smallest boundary vertex.
    let start = *next.keys().min().unwrap();
    let mut loop_vertices = vec![start];
    let mut cur = next[&start];
    while cur != start {
        loop_vertices.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| FlattenError::NotADisk("open boundary chain".into()))?;
        if loop_vertices.len() > boundary.len() {
            return Err(FlattenError::NotADisk("boundary does not close".into()));
        }
    }
    if loop_vertices.len() != boundary.len() {
        return Err(FlattenError::NotADisk(format!(
            "{} boundary loops (need exactly 1)",
            1 + (boundary.len() - loop_vertices.len() + 1) / 2
        )));
    }

    let v = mesh.vertex_count() as i64;
    let e = edge_count.len() as i64;
    let f = mesh.face_count() as i64;
    if v - e + f != 1 {
        return Err(FlattenError::NotADisk(format!(
            "Euler characteristic V-E+F = {} (need 1)",
            v - e + f
        )));
    }
    Ok(loop_vertices)
}

fn cotangent(a: &Point3<f64>, b: &Point3<f64>, apex: &Point3<f64>) -> f64 {
    // cot of the angle at `apex` in triangle (a, apex, b)
    let u = a - apex;
    let v = b - apex;
    let cross = u.cross(&v).norm();
    if cross <= f64::EPSILON {
        0.0
    } else {
        u.dot(&v) / cross
    }
}

pub const CG_TOLERANCE: f64 = 1e-10;

/// Flatten a disk-topology submesh to the unit disk.
pub fn harmonic_flatten(sub: &SubMesh) -> Result<UVChart, FlattenError> {
    harmonic_flatten_with(sub, WeightScheme::default())
}

pub fn harmonic_flatten_with(
    sub: &SubMesh,
    scheme: WeightScheme,
) -> Result<UVChart, FlattenError> {
    let mesh = &sub.mesh;
    let loop_vertices = boundary_loop(sub)?;
    let n = mesh.vertex_count();

    // Boundary placement: angle proportional to cumulative 3D arc length.
    let mut uv = vec![Point2::origin(); n];
    let total: f64 = loop_vertices
        .iter()
        .zip(loop_vertices.iter().cycle().skip(1))
        .map(|(&a, &b)| (mesh.vertices[b] - mesh.vertices[a]).norm())
        .sum();
    let mut s = 0.0;
    for (k, &v) in loop_vertices.iter().enumerate() {
        let theta = std::f64::consts::TAU * s / total;
        uv[v] = Point2::new(theta.cos(), theta.sin());
        let nxt = loop_vertices[(k + 1) % loop_vertices.len()];
        s += (mesh.vertices[nxt] - mesh.vertices[v]).norm();
    }

    let is_boundary: Vec<bool> = {
        let mut b = vec![false; n];
        for &v in &loop_vertices {
            b[v] = true;
        }
        b
    };
    let interior: Vec<usize> = (0..n).filter(|&v| !is_boundary[v]).collect();
    if interior.is_empty() {
        return Ok(UVChart {
            uv,
            boundary_loop: loop_vertices,
        });
    }
    let interior_index: HashMap<usize, usize> =
        interior.iter().copied().zip(0..).collect();

    // Edge weights.
    let mut weights: HashMap<(usize, usize), f64> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b, apex) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let key = (a.min(b), a.max(b));
            let w = match scheme {
                WeightScheme::ClampedCotangent => {
                    0.5 * cotangent(&mesh.vertices[a], &mesh.vertices[b], &mesh.vertices[apex])
                }
                WeightScheme::Uniform => 0.5,
            };
            *weights.entry(key).or_default() += w;
        }
    }
    if scheme == WeightScheme::ClampedCotangent {
        for w in weights.values_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
    }

    // Assemble the interior system: sum_j w_ij (x_i - x_j) = 0, boundary
    // values moved to the right-hand side.
    let m = interior.len();
    let mut a = SparseMatrix::zeros(m);
    let mut bu = vec![0.0; m];
    let mut bv = vec![0.0; m];
    let mut degree = vec![0.0; m];
    for (&(p, q), &w) in &weights {
        for (i, j) in [(p, q), (q, p)] {
            if let Some(&row) = interior_index.get(&i) {
                degree[row] += w;
                a.add(row, row, w);
                match interior_index.get(&j) {
                    Some(&col) => a.add(row, col, -w),
                    None => {
                        bu[row] += w * uv[j].x;
                        bv[row] += w * uv[j].y;
                    }
                }
            }
        }
    }
    for (row, &d) in degree.iter().enumerate() {
        if d <= 0.0 {
            return Err(FlattenError::DegenerateWeights(interior[row]));
        }
    }

    let max_iter = 10 * n;
    let xu = solve_cg(&a, &bu, CG_TOLERANCE, max_iter)?;
    let xv = solve_cg(&a, &bv, CG_TOLERANCE, max_iter)?;
    for (row, &v) in interior.iter().enumerate() {
        uv[v] = Point2::new(xu[row], xv[row]);
    }

    // Postcondition check, not an assumption.
    let ru = a.residual_inf_norm(&xu, &bu);
    let rv = a.residual_inf_norm(&xv, &bv);
    if ru > CG_TOLERANCE || rv > CG_TOLERANCE {
        return Err(FlattenError::Numerical(crate::sparse::SolveFailure {
            residual: ru.max(rv),
            iterations: max_iter,
            tolerance: CG_TOLERANCE,
        }));
    }
    Ok(UVChart {
        uv,
        boundary_loop: loop_vertices,
    })
}

fn segments_properly_intersect(
    a: &Point2<f64>,
    b: &Point2<f64>,
    c: &Point2<f64>,
    d: &Point2<f64>,
) -> bool {
    let orient = |p: &Point2<f64>, q: &Point2<f64>, r: &Point2<f64>| {
        (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn point_on_segment(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> bool {
    let ab = b - a;
    let ap = p - a;
    let cross = ab.x * ap.y - ab.y * ap.x;
    if cross.abs() > 1e-12 * ab.norm().max(1.0) {
        return false;
    }
    let t = ap.dot(&ab);
    t >= 0.0 && t <= ab.norm_squared()
}

/// Even-odd point-in-polygon; points on the polygon boundary count as inside.
pub fn point_in_polygon(p: &Point2<f64>, polygon: &[Point2<f64>]) -> bool {
    let n = polygon.len();
    for i in 0..n {
        if point_on_segment(p, &polygon[i], &polygon[(i + 1) % n]) {
            return true;
        }
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Map a 2D polygon annotation back to parent-mesh vertex indices: every
/// submesh vertex whose uv lies inside (or on) the polygon.
pub fn backproject_polygon(
    sub: &SubMesh,
    chart: &UVChart,
    polygon: &[Point2<f64>],
) -> Result<BTreeSet<usize>, FlattenError> {
    if polygon.len() < 3 {
        return Err(FlattenError::InvalidPolygon(format!(
            "{} points (need at least 3)",
            polygon.len()
        )));
    }
    let n = polygon.len();
    for i in 0..n {
        for j in i + 1..n {
            // Adjacent edges share an endpoint; only test disjoint pairs.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_properly_intersect(
                &polygon[i],
                &polygon[(i + 1) % n],
                &polygon[j],
                &polygon[(j + 1) % n],
            ) {
                return Err(FlattenError::InvalidPolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(chart
        .uv
        .iter()
        .enumerate()
        .filter(|(_, p)| point_in_polygon(p, polygon))
        .map(|(v, _)| sub.parent_index_map[v])
        .collect())
}
