//! Point-cloud sampling and interpolation utilities: farthest-point sampling,
//! boundary-aware sampling, grid subsampling, and KNN label/logit upsampling.

use nalgebra::Point3;
use std::collections::BTreeMap;

/// Greedy max-min farthest-point sampling starting from `seed_index`.
pub fn farthest_point_sampling(
    points: &[Point3<f64>],
    n: usize,
    seed_index: usize,
) -> Vec<usize> {
    assert!(n >= 1, "sample count must be positive");
    assert!(n <= points.len());
    assert!(seed_index < points.len());
    let mut selected = Vec::with_capacity(n);
    let mut min_dist: Vec<f64> = points
        .iter()
        .map(|p| (p - points[seed_index]).norm())
        .collect();
    selected.push(seed_index);
    while selected.len() < n {
        // Farthest from the selected set; ties toward the smaller index.
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, &d) in min_dist.iter().enumerate() {
            if !selected.contains(&i) && (d > best.0 || (d == best.0 && i < best.1)) {
                best = (d, i);
            }
        }
        let pick = best.1;
        selected.push(pick);
        for (i, d) in min_dist.iter_mut().enumerate() {
            *d = d.min((points[i] - points[pick]).norm());
        }
    }
    selected
}

/// Indices of points sitting on instance boundaries: points whose
/// `k_neighbors` nearest neighbors carry at least two distinct nonzero
/// instance ids, or a nonzero id together with gingiva (0). Returns up to
/// `n_extra` of them by farthest-point sampling; the seed is `seed_index` if
/// it lies on the boundary, else the smallest boundary index.
pub fn boundary_aware_sample(
    points: &[Point3<f64>],
    instance_ids: &[u32],
    k_neighbors: usize,
    n_extra: usize,
    seed_index: usize,
) -> Vec<usize> {
    assert_eq!(points.len(), instance_ids.len());
    assert!(k_neighbors >= 2);
    let n = points.len();
    let mut boundary = Vec::new();
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            let da = (points[a] - points[i]).norm();
            let db = (points[b] - points[i]).norm();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let k = k_neighbors.min(order.len());
        let mut nonzero = std::collections::BTreeSet::new();
        let mut has_gingiva = false;
        for &j in &order[..k] {
            if instance_ids[j] == 0 {
                has_gingiva = true;
            } else {
                nonzero.insert(instance_ids[j]);
            }
        }
        if nonzero.len() >= 2 || (nonzero.len() == 1 && has_gingiva) {
            boundary.push(i);
        }
    }
    if boundary.is_empty() {
        return Vec::new();
    }
    let boundary_points: Vec<Point3<f64>> = boundary.iter().map(|&i| points[i]).collect();
    let seed_local = boundary.iter().position(|&i| i == seed_index).unwrap_or(0);
    let take = n_extra.min(boundary.len());
    farthest_point_sampling(&boundary_points, take, seed_local)
        .into_iter()
        .map(|local| boundary[local])
        .collect()
}

/// One representative index per occupied grid cell: the point nearest the
/// cell center (ties toward the smaller index). Output follows cell scan
/// order (sorted cell coordinates).
pub fn grid_subsample(points: &[Point3<f64>], cell_size: f64) -> Vec<usize> {
    assert!(cell_size > 0.0);
    if points.is_empty() {
        return Vec::new();
    }
    let mut best: BTreeMap<(i64, i64, i64), (f64, usize)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let key = (
            (p.x / cell_size).floor() as i64,
            (p.y / cell_size).floor() as i64,
            (p.z / cell_size).floor() as i64,
        );
        let center = Point3::new(
            (key.0 as f64 + 0.5) * cell_size,
            (key.1 as f64 + 0.5) * cell_size,
            (key.2 as f64 + 0.5) * cell_size,
        );
        let d = (p - center).norm();
        let entry = best.entry(key).or_insert((f64::INFINITY, usize::MAX));
        if d < entry.0 {
            *entry = (d, i);
        }
    }
    best.values().map(|&(_, i)| i).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMode {
    Vote,
    Logit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KnnOutput {
    Labels(Vec<u32>),
    Logits(Vec<Vec<f64>>),
}

fn k_nearest(
    labeled_points: &[Point3<f64>],
    query: &Point3<f64>,
    k: usize,
) -> Vec<(f64, usize)> {
    let mut dists: Vec<(f64, usize)> = labeled_points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - query).norm(), i))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    dists.truncate(k);
    dists
}

/// Upsample labels to query points by k-nearest-neighbor majority vote (ties
/// toward the smaller label).
pub fn knn_label_vote(
    labeled_points: &[Point3<f64>],
    labels: &[u32],
    query_points: &[Point3<f64>],
    k: usize,
) -> Vec<u32> {
    assert!(k >= 1);
    assert!(!labeled_points.is_empty());
    assert_eq!(labeled_points.len(), labels.len());
    query_points
        .iter()
        .map(|q| {
            let nearest = k_nearest(labeled_points, q, k);
            let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
            for &(_, i) in &nearest {
                *counts.entry(labels[i]).or_default() += 1;
            }
            counts
                .iter()
                .fold((0u32, 0usize), |acc, (&l, &c)| if c > acc.1 { (l, c) } else { acc })
                .0
        })
        .collect()
}

/// Upsample logit vectors to query points by inverse-distance-weighted means
/// of the k nearest neighbors; a query coinciding with a labeled point copies
/// that neighbor exactly.
pub fn knn_logit_interpolate(
    labeled_points: &[Point3<f64>],
    logits: &[Vec<f64>],
    query_points: &[Point3<f64>],
    k: usize,
) -> Vec<Vec<f64>> {
    assert!(k >= 1);
    assert!(!labeled_points.is_empty());
    assert_eq!(labeled_points.len(), logits.len());
    let dim = logits[0].len();
    query_points
        .iter()
        .map(|q| {
            let nearest = k_nearest(labeled_points, q, k);
            if let Some(&(d, i)) = nearest.first() {
                if d == 0.0 {
                    return logits[i].clone();
                }
            }
            let mut out = vec![0.0; dim];
            let mut wsum = 0.0;
            for &(d, i) in &nearest {
                let w = 1.0 / d;
                wsum += w;
                for (o, &x) in out.iter_mut().zip(&logits[i]) {
                    *o += w * x;
                }
            }
            for o in &mut out {
                *o /= wsum;
            }
            out
        })
        .collect()
}
