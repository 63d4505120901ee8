//! Random-walker vertex labeling and the convexity edge feature that steers
//! it away from crossing concave crease regions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

use crate::mesh::TriMesh;
use crate::sparse::{solve_cg, SparseMatrix};

const WALKER_CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum WalkerError {
    #[error("no seeds given")]
    NoSeeds,
    #[error("seed vertex {0} out of range ({1} vertices)")]
    SeedOutOfRange(usize, usize),
    #[error("edge feature has {got} entries but the graph has {expected} edges")]
    FeatureLengthMismatch { got: usize, expected: usize },
    #[error("unreachable region: vertex {0} has no path to any seed")]
    UnreachableRegion(usize),
    #[error("Dirichlet solve failed for label {label}: {source}")]
    SolveFailed {
        label: u32,
        source: crate::sparse::SolveFailure,
    },
}

/// Random-walker labeling on an explicit weighted graph. Each unseeded vertex
/// gets, per label, the probability that a random walker started there hits a
/// seed of that label first; the assigned label is the argmax (ties toward
/// the smaller label). Returns (labels, probabilities per vertex in ascending
/// label order, sorted label list).
pub fn random_walker_graph(
    vertex_count: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
    seeds: &BTreeMap<usize, u32>,
) -> Result<(Vec<u32>, Vec<Vec<f64>>, Vec<u32>), WalkerError> {
    if seeds.is_empty() {
        return Err(WalkerError::NoSeeds);
    }
    if let Some((&v, _)) = seeds.iter().find(|&(&v, _)| v >= vertex_count) {
        return Err(WalkerError::SeedOutOfRange(v, vertex_count));
    }
    if weights.len() != edges.len() {
        return Err(WalkerError::FeatureLengthMismatch {
            got: weights.len(),
            expected: edges.len(),
        });
    }

    // Every vertex must reach a seed; positive weights mean plain
    // connectivity decides.
    let mut adj = vec![Vec::new(); vertex_count];
    for (&(a, b), &w) in edges.iter().zip(weights) {
        assert!(w > 0.0 && w.is_finite());
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let mut reached = vec![false; vertex_count];
    let mut queue: VecDeque<usize> = seeds.keys().copied().collect();
    for &s in seeds.keys() {
        reached[s] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &(u, _) in &adj[v] {
            if !reached[u] {
                reached[u] = true;
                queue.push_back(u);
            }
        }
    }
    if let Some(v) = reached.iter().position(|&r| !r) {
        return Err(WalkerError::UnreachableRegion(v));
    }

    let label_list: Vec<u32> = seeds.values().copied().collect::<BTreeSet<_>>().into_iter().collect();

    // Unseeded vertices form the Dirichlet interior.
    let interior: Vec<usize> = (0..vertex_count).filter(|v| !seeds.contains_key(v)).collect();
    let interior_pos: BTreeMap<usize, usize> =
        interior.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut laplacian = SparseMatrix::zeros(interior.len());
    for (row, &v) in interior.iter().enumerate() {
        for &(u, w) in &adj[v] {
            laplacian.add(row, row, w);
            if let Some(&col) = interior_pos.get(&u) {
                laplacian.add(row, col, -w);
            }
        }
    }

    let mut probabilities = vec![vec![0.0; label_list.len()]; vertex_count];
    for (&v, &l) in seeds {
        let li = label_list.binary_search(&l).unwrap();
        probabilities[v][li] = 1.0;
    }
    let max_iterations = 10 * vertex_count.max(10);
    for (li, &label) in label_list.iter().enumerate() {
        let mut rhs = vec![0.0; interior.len()];
        for (row, &v) in interior.iter().enumerate() {
            for &(u, w) in &adj[v] {
                if seeds.get(&u) == Some(&label) {
                    rhs[row] += w;
                }
            }
        }
        let solution = solve_cg(&laplacian, &rhs, WALKER_CG_TOLERANCE, max_iterations)
            .map_err(|source| WalkerError::SolveFailed { label, source })?;
        for (row, &v) in interior.iter().enumerate() {
            probabilities[v][li] = solution[row];
        }
    }

    let labels = probabilities
        .iter()
        .map(|p| {
            let mut best = 0;
            for li in 1..p.len() {
                if p[li] > p[best] {
                    best = li;
                }
            }
            label_list[best]
        })
        .collect();
    Ok((labels, probabilities, label_list))
}

/// Random-walker labeling on a mesh with edge weights w = exp(-beta *
/// feature). `edge_feature` is parallel to `TriMesh::edges()`.
pub fn random_walker(
    mesh: &TriMesh,
    seeds: &BTreeMap<usize, u32>,
    edge_feature: &[f64],
    beta: f64,
) -> Result<(Vec<u32>, Vec<Vec<f64>>, Vec<u32>), WalkerError> {
    let edges = mesh.edges();
    if edge_feature.len() != edges.len() {
        return Err(WalkerError::FeatureLengthMismatch {
            got: edge_feature.len(),
            expected: edges.len(),
        });
    }
    let weights: Vec<f64> = edge_feature.iter().map(|&f| (-beta * f).exp()).collect();
    random_walker_graph(mesh.vertex_count(), &edges, &weights, seeds)
}

/// Per-edge concavity score, parallel to `TriMesh::edges()`: interior edges
/// score the dihedral deviation when the fold is concave (faces bending away
/// from their normals), zero when convex or flat. Boundary and non-manifold
/// edges score zero.
pub fn convexity_feature(mesh: &TriMesh) -> Vec<f64> {
    let (edges, incident) = mesh.edge_faces();
    edges
        .iter()
        .zip(&incident)
        .map(|(&(a, b), faces)| {
            if faces.len() != 2 {
                return 0.0;
            }
            let n1 = mesh.face_normal(faces[0]);
            let n2 = mesh.face_normal(faces[1]);
            let deviation = n1.dot(&n2).clamp(-1.0, 1.0).acos();
            // Opposite vertex of the second face tells the fold direction:
            // above the first face's plane means concave.
            let opposite = mesh.faces[faces[1]]
                .iter()
                .copied()
                .find(|&v| v != a && v != b)
                .unwrap();
            let side = n1.dot(&(mesh.vertices[opposite] - mesh.vertices[a]));
            if side > 1e-12 {
                deviation
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth_shapes::{flat_grid, icosphere};
    use nalgebra::Point3;

    fn path_graph(n: usize) -> (Vec<(usize, usize)>, Vec<f64>) {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let weights = vec![1.0; edges.len()];
        (edges, weights)
    }

    #[test]
    fn path_probabilities_are_linear() {
        let (edges, weights) = path_graph(5);
        let seeds = BTreeMap::from([(0, 1u32), (4, 2u32)]);
        let (labels, probs, label_list) = random_walker_graph(5, &edges, &weights, &seeds).unwrap();
        assert_eq!(label_list, vec![1, 2]);
        let expected = [1.0, 0.75, 0.5, 0.25, 0.0];
        for (v, &e) in expected.iter().enumerate() {
            assert!((probs[v][0] - e).abs() < 1e-9, "vertex {v}");
            assert!((probs[v][0] + probs[v][1] - 1.0).abs() < 1e-8);
        }
        // Midpoint tie goes to the smaller label.
        assert_eq!(labels, vec![1, 1, 1, 2, 2]);
    }

    #[test]
    fn all_seeded_is_identity() {
        let (edges, weights) = path_graph(3);
        let seeds = BTreeMap::from([(0, 5u32), (1, 7), (2, 5)]);
        let (labels, probs, _) = random_walker_graph(3, &edges, &weights, &seeds).unwrap();
        assert_eq!(labels, vec![5, 7, 5]);
        assert_eq!(probs[1], vec![0.0, 1.0]);
    }

    #[test]
    fn heavy_feature_cut_splits_at_the_cut() {
        // Path 0-1-2-3-4-5 with a near-impassable edge between 2 and 3.
        let edges: Vec<_> = (0..5).map(|i| (i, i + 1)).collect();
        let mut weights = vec![1.0; 5];
        weights[2] = (-40.0f64).exp();
        let seeds = BTreeMap::from([(0, 1u32), (5, 2u32)]);
        let (labels, probs, _) = random_walker_graph(6, &edges, &weights, &seeds).unwrap();
        assert_eq!(labels, vec![1, 1, 1, 2, 2, 2]);
        assert!(probs[2][0] > 0.999);
        assert!(probs[3][0] < 0.001);
    }

    #[test]
    fn disconnected_unseeded_component_errors() {
        let edges = vec![(0, 1), (2, 3)];
        let weights = vec![1.0, 1.0];
        let seeds = BTreeMap::from([(0, 1u32)]);
        assert!(matches!(
            random_walker_graph(4, &edges, &weights, &seeds),
            Err(WalkerError::UnreachableRegion(2))
        ));
    }

    #[test]
    fn harmonic_and_maximum_principle_on_mesh() {
        let mesh = flat_grid(6, 6, 1.0);
        let feature = convexity_feature(&mesh);
        let n = mesh.vertex_count();
        let seeds = BTreeMap::from([(0, 1u32), (n - 1, 2u32)]);
        let (_, probs, _) = random_walker(&mesh, &seeds, &feature, 1.0).unwrap();
        let edges = mesh.edges();
        let weights: Vec<f64> = feature.iter().map(|&f| (-f).exp()).collect();
        let mut adj = vec![Vec::new(); n];
        for (&(a, b), &w) in edges.iter().zip(&weights) {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for v in 0..n {
            for li in 0..2 {
                assert!(probs[v][li] >= -1e-9 && probs[v][li] <= 1.0 + 1e-9);
            }
            if seeds.contains_key(&v) {
                continue;
            }
            // Discrete-harmonic: value equals the weighted neighbor average.
            let wsum: f64 = adj[v].iter().map(|&(_, w)| w).sum();
            let avg: f64 = adj[v].iter().map(|&(u, w)| w * probs[u][0]).sum::<f64>() / wsum;
            assert!((probs[v][0] - avg).abs() < 1e-7, "vertex {v}");
        }
    }

    #[test]
    fn flat_grid_feature_is_zero() {
        let mesh = flat_grid(4, 4, 1.0);
        assert!(convexity_feature(&mesh).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn convex_sphere_feature_is_zero() {
        let mesh = icosphere(1.0, 2);
        assert!(convexity_feature(&mesh).iter().all(|&f| f.abs() < 1e-9));
    }

    #[test]
    fn concave_crease_scores_pi_minus_theta() {
        // Two rectangles meeting along the y axis at interior angle theta,
        // opening upward (concave seen from +z).
        let theta = std::f64::consts::FRAC_PI_2;
        let half = theta / 2.0;
        let (dx, dz) = (half.sin(), half.cos());
        let vertices = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-dx, 0.0, dz),
            Point3::new(-dx, 1.0, dz),
            Point3::new(dx, 0.0, dz),
            Point3::new(dx, 1.0, dz),
        ];
        // Consistent winding: both normals have positive z.
        let faces = vec![[2, 0, 3], [0, 1, 3], [0, 4, 1], [4, 5, 1]];
        let mesh = TriMesh::new(vertices, faces).unwrap();
        let (edges, _) = mesh.edge_faces();
        let feature = convexity_feature(&mesh);
        let crease = edges.iter().position(|&e| e == (0, 1)).unwrap();
        assert!((feature[crease] - (std::f64::consts::PI - theta)).abs() < 1e-9);
        for (i, &f) in feature.iter().enumerate() {
            if i != crease {
                assert!(f.abs() < 1e-9);
            }
        }
    }
}
