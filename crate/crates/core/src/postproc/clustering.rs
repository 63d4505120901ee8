//! Point-cloud clustering: DBSCAN, density-peaks, and the offset-shift
//! instance clustering built on top of DBSCAN.
//!
//! All tie-breaks go toward the smaller input index so results are identical
//! across platforms and input permutations (up to cluster renaming).

use nalgebra::Point3;
use std::collections::HashMap;

pub const NOISE: i32 = -1;

/// Uniform grid over the points with cell size `cell`, for radius queries.
struct PointGrid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn build(points: &[Point3<f64>], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key_of(p, cell)).or_default().push(i);
        }
        PointGrid { cell, cells }
    }

    fn key_of(p: &Point3<f64>, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Indices within `radius` of `p` (including `p` itself if present),
    /// sorted ascending.
    fn within(&self, points: &[Point3<f64>], p: &Point3<f64>, radius: f64) -> Vec<usize> {
        let (kx, ky, kz) = Self::key_of(p, self.cell);
        let reach = (radius / self.cell).ceil() as i64;
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(cands) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &i in cands {
                            if (points[i] - p).norm() <= radius {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// DBSCAN over 3D points with Euclidean eps-neighborhoods (the point itself
/// counts toward `min_pts`). Cluster membership follows density
/// reachability; a border point reachable from several clusters joins the
/// one of its nearest core point (tie toward the smaller core index), which
/// makes the partition independent of input order. Cluster ids are numbered
/// by the first core point of each cluster in input order; noise is -1.
pub fn dbscan(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Vec<i32> {
    assert!(eps > 0.0);
    assert!(min_pts >= 1);
    let n = points.len();
    let mut labels: Vec<i32> = vec![NOISE; n];
    if n == 0 {
        return labels;
    }
    let grid = PointGrid::build(points, eps);
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .map(|i| grid.within(points, &points[i], eps))
        .collect();
    let is_core: Vec<bool> = neighborhoods.iter().map(|nb| nb.len() >= min_pts).collect();

    // Connected components of the core-core eps graph.
    let mut cluster_of_core: Vec<Option<i32>> = vec![None; n];
    let mut next_cluster = 0;
    for i in 0..n {
        if !is_core[i] || cluster_of_core[i].is_some() {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        let mut stack = vec![i];
        cluster_of_core[i] = Some(cluster);
        while let Some(j) = stack.pop() {
            for &k in &neighborhoods[j] {
                if is_core[k] && cluster_of_core[k].is_none() {
                    cluster_of_core[k] = Some(cluster);
                    stack.push(k);
                }
            }
        }
    }

    for i in 0..n {
        if is_core[i] {
            labels[i] = cluster_of_core[i].unwrap();
        } else {
            // Border point: nearest core neighbor wins.
            let mut best: Option<(f64, usize)> = None;
            for &j in &neighborhoods[i] {
                if is_core[j] {
                    let d = (points[i] - points[j]).norm();
                    if best.map_or(true, |b| (d, j) < b) {
                        best = Some((d, j));
                    }
                }
            }
            if let Some((_, j)) = best {
                labels[i] = cluster_of_core[j].unwrap();
            }
        }
    }
    labels
}

/// Density-peaks clustering. Density is the neighbor count within
/// `cutoff_distance` (the point itself included, so an isolated point keeps a
/// nonzero peak score); delta is the distance to the nearest denser point
/// (the densest point takes the global maximum distance). The k centers
/// maximize density x delta; every remaining point joins its nearest center.
pub fn density_peaks(
    points: &[Point3<f64>],
    cutoff_distance: f64,
    k: usize,
) -> (Vec<usize>, Vec<usize>) {
    assert!(k >= 1, "k must be positive");
    assert!(k <= points.len());
    let n = points.len();

    let mut density = vec![1usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (points[i] - points[j]).norm() <= cutoff_distance {
                density[i] += 1;
            }
        }
    }
    // "Denser" ordering with index tie-break: j denser than i iff
    // density[j] > density[i], or equal density and j < i.
    let denser = |j: usize, i: usize| density[j] > density[i] || (density[j] == density[i] && j < i);

    let mut delta = vec![0.0f64; n];
    for i in 0..n {
        let mut best: Option<f64> = None;
        for j in 0..n {
            if j != i && denser(j, i) {
                let d = (points[i] - points[j]).norm();
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        delta[i] = match best {
            Some(d) => d,
            // Globally densest point: global max distance to it.
            None => (0..n)
                .filter(|&j| j != i)
                .map(|j| (points[i] - points[j]).norm())
                .fold(0.0, f64::max),
        };
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ga = density[a] as f64 * delta[a];
        let gb = density[b] as f64 * delta[b];
        gb.partial_cmp(&ga).unwrap().then(a.cmp(&b))
    });
    let mut centers: Vec<usize> = order[..k].to_vec();
    centers.sort_unstable();

    let assignment: Vec<usize> = (0..n)
        .map(|i| {
            centers
                .iter()
                .enumerate()
                .min_by(|(_, &ca), (_, &cb)| {
                    let da = (points[i] - points[ca]).norm();
                    let db = (points[i] - points[cb]).norm();
                    da.partial_cmp(&db).unwrap().then(ca.cmp(&cb))
                })
                .map(|(ci, _)| ci)
                .unwrap()
        })
        .collect();
    (centers, assignment)
}

/// Shift every point by its predicted offset, zero out gingiva-masked points,
/// and cluster the rest with DBSCAN on the shifted coordinates. Instance id 0
/// is gingiva/noise; clusters are numbered from 1.
pub fn offset_shift_cluster(
    points: &[Point3<f64>],
    offsets: &[nalgebra::Vector3<f64>],
    gingiva_mask: &[bool],
    eps: f64,
    min_pts: usize,
) -> Vec<u32> {
    assert_eq!(points.len(), offsets.len());
    assert_eq!(points.len(), gingiva_mask.len());
    let kept: Vec<usize> = (0..points.len()).filter(|&i| !gingiva_mask[i]).collect();
    let shifted: Vec<Point3<f64>> = kept.iter().map(|&i| points[i] + offsets[i]).collect();
    let labels = dbscan(&shifted, eps, min_pts);
    let mut out = vec![0u32; points.len()];
    for (slot, &i) in kept.iter().enumerate() {
        if labels[slot] >= 0 {
            out[i] = labels[slot] as u32 + 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn blob(center: Point3<f64>, count: usize, spread: f64) -> Vec<Point3<f64>> {
        // Deterministic "jitter" on a small lattice.
        (0..count)
            .map(|i| {
                let a = (i % 3) as f64 - 1.0;
                let b = ((i / 3) % 3) as f64 - 1.0;
                let c = ((i / 9) % 3) as f64 - 1.0;
                center + Vector3::new(a, b, c) * spread
            })
            .collect()
    }

    #[test]
    fn two_well_separated_groups() {
        let mut points = blob(Point3::new(0.0, 0.0, 0.0), 10, 0.05);
        points.extend(blob(Point3::new(10.0, 0.0, 0.0), 10, 0.05));
        let labels = dbscan(&points, 0.5, 3);
        assert!(labels.iter().all(|&l| l >= 0));
        assert_eq!(labels[..10].iter().collect::<std::collections::HashSet<_>>().len(), 1);
        assert_eq!(labels[10..].iter().collect::<std::collections::HashSet<_>>().len(), 1);
        assert_ne!(labels[0], labels[10]);
    }

    #[test]
    fn isolated_points_are_noise() {
        let points = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(10.0, 0.0, 0.0),
            Point3::new(0.0, 10.0, 0.0),
        ];
        let labels = dbscan(&points, 1.0, 2);
        assert_eq!(labels, vec![NOISE; 3]);
    }

    #[test]
    fn single_point_min_pts_one() {
        let labels = dbscan(&[Point3::origin()], 1.0, 1);
        assert_eq!(labels, vec![0]);
    }

    #[test]
    fn density_peaks_two_blobs() {
        let mut points = blob(Point3::new(0.0, 0.0, 0.0), 12, 0.1);
        points.extend(blob(Point3::new(8.0, 0.0, 0.0), 12, 0.1));
        let (centers, assignment) = density_peaks(&points, 0.5, 2);
        assert_eq!(centers.len(), 2);
        assert!(centers[0] < 12 && centers[1] >= 12);
        for i in 0..12 {
            assert_eq!(assignment[i], 0);
        }
        for i in 12..24 {
            assert_eq!(assignment[i], 1);
        }
    }

    #[test]
    fn density_peaks_k_equals_n() {
        let points = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let (centers, assignment) = density_peaks(&points, 0.1, 3);
        assert_eq!(centers, vec![0, 1, 2]);
        assert_eq!(assignment, vec![0, 1, 2]);
    }

    #[test]
    fn density_peaks_duplicates_tie_to_smaller_index() {
        let points = vec![Point3::origin(), Point3::origin(), Point3::new(5.0, 0.0, 0.0)];
        let (centers, _) = density_peaks(&points, 1.0, 2);
        // The duplicate pair: index 0 is "denser" by tie-break and becomes a
        // center; the far point is the other.
        assert!(centers.contains(&0));
        assert!(centers.contains(&2));
    }

    #[test]
    fn offset_shift_collapses_instances() {
        // Two instances; offsets collapse each onto its centroid.
        let points = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(10.0, 0.0, 0.0),
            Point3::new(11.0, 0.0, 0.0),
            Point3::new(50.0, 0.0, 0.0), // gingiva
        ];
        let targets = [
            Point3::new(0.5, 0.0, 0.0),
            Point3::new(0.5, 0.0, 0.0),
            Point3::new(10.5, 0.0, 0.0),
            Point3::new(10.5, 0.0, 0.0),
            Point3::new(50.0, 0.0, 0.0),
        ];
        let offsets: Vec<Vector3<f64>> =
            points.iter().zip(&targets).map(|(p, t)| t - p).collect();
        let mask = vec![false, false, false, false, true];
        let ids = offset_shift_cluster(&points, &offsets, &mask, 0.5, 2);
        assert_eq!(ids, vec![1, 1, 2, 2, 0]);
    }

    #[test]
    fn offset_shift_all_masked() {
        let points = vec![Point3::origin(); 4];
        let offsets = vec![Vector3::zeros(); 4];
        let ids = offset_shift_cluster(&points, &offsets, &[true; 4], 0.5, 2);
        assert_eq!(ids, vec![0; 4]);
    }

    #[test]
    fn zero_offsets_separate_teeth() {
        let mut points = blob(Point3::new(0.0, 0.0, 0.0), 8, 0.1);
        points.extend(blob(Point3::new(5.0, 0.0, 0.0), 8, 0.1));
        let offsets = vec![Vector3::zeros(); 16];
        let mask = vec![false; 16];
        let ids = offset_shift_cluster(&points, &offsets, &mask, 1.0, 3);
        assert!(ids[..8].iter().all(|&x| x == ids[0] && x > 0));
        assert!(ids[8..].iter().all(|&x| x == ids[8] && x > 0));
        assert_ne!(ids[0], ids[8]);
    }
}
