//! Published loss formulas as pure functions, with analytic gradients for
//! the centroid losses so training-style numeric checks can be run without
//! an autodiff framework.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{Diagnostic, Diagnostics, Severity};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("need at least 2 target centroids, got {0}")]
    NeedsTwoTargets(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("radius {0} at index {1} is not positive")]
    NonPositiveRadius(f64, usize),
    #[error("probability {0} at sample {1} outside [0, 1]")]
    InvalidProbability(f64, usize),
}

/// Ground-truth tooth centroids with per-tooth radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidTargets {
    pub centroids: Vec<Point3<f64>>,
    pub radii: Vec<f64>,
}

impl CentroidTargets {
    pub fn new(centroids: Vec<Point3<f64>>, radii: Vec<f64>) -> Result<Self, LossError> {
        if centroids.len() != radii.len() {
            return Err(LossError::LengthMismatch(format!(
                "{} centroids vs {} radii",
                centroids.len(),
                radii.len()
            )));
        }
        if let Some((i, &r)) = radii.iter().enumerate().find(|&(_, &r)| !(r > 0.0)) {
            return Err(LossError::NonPositiveRadius(r, i));
        }
        Ok(CentroidTargets { centroids, radii })
    }
}

/// Per-sample class probabilities with one-hot targets (stored as the target
/// class index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probabilities: Vec<Vec<f64>>,
    pub target_class: Vec<usize>,
}

impl ClassDistribution {
    pub fn new(probabilities: Vec<Vec<f64>>, target_class: Vec<usize>) -> Result<Self, LossError> {
        if probabilities.len() != target_class.len() {
            return Err(LossError::LengthMismatch(format!(
                "{} probability rows vs {} targets",
                probabilities.len(),
                target_class.len()
            )));
        }
        for (s, (p, &t)) in probabilities.iter().zip(&target_class).enumerate() {
            if t >= p.len() {
                return Err(LossError::LengthMismatch(format!(
                    "target class {t} out of range for {} classes at sample {s}",
                    p.len()
                )));
            }
            if let Some(&bad) = p.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
                return Err(LossError::InvalidProbability(bad, s));
            }
        }
        Ok(ClassDistribution {
            probabilities,
            target_class,
        })
    }
}

/// Smooth L1: elementwise 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise, summed.
pub fn smooth_l1(x: &[f64]) -> f64 {
    x.iter()
        .map(|&v| {
            if v.abs() < 1.0 {
                0.5 * v * v
            } else {
                v.abs() - 0.5
            }
        })
        .sum()
}

/// Symmetric unsquared chamfer distance: mean nearest distance A->B plus
/// mean nearest distance B->A.
pub fn chamfer_distance(a: &[Point3<f64>], b: &[Point3<f64>]) -> Result<f64, LossError> {
    if a.is_empty() || b.is_empty() {
        return Err(LossError::EmptyPointSet);
    }
    let mean_nearest = |from: &[Point3<f64>], to: &[Point3<f64>]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / from.len() as f64
    };
    Ok(mean_nearest(a, b) + mean_nearest(b, a))
}

/// Nearest and second-nearest target indices for `p`, ties toward the
/// smaller index.
fn two_nearest(p: &Point3<f64>, centroids: &[Point3<f64>]) -> (usize, usize) {
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (p - centroids[a]).norm();
        let db = (p - centroids[b]).norm();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    (order[0], order[1])
}

/// Centroid prediction loss: mean over predictions of smooth L1 to the
/// nearest target plus `lambda` times the nearest/second-nearest distance
/// ratio, plus the chamfer distance between the two centroid sets.
pub fn igip_centroid_loss(
    predicted: &[Point3<f64>],
    targets: &CentroidTargets,
    lambda: f64,
) -> Result<f64, LossError> {
    Ok(igip_centroid_loss_grad(predicted, targets, lambda)?.0)
}

/// Loss plus analytic gradient with respect to each predicted point. Valid
/// away from nearest-target switch surfaces and coincident points.
pub fn igip_centroid_loss_grad(
    predicted: &[Point3<f64>],
    targets: &CentroidTargets,
    lambda: f64,
) -> Result<(f64, Vec<Vector3<f64>>), LossError> {
    if predicted.is_empty() {
        return Err(LossError::EmptyPointSet);
    }
    if targets.centroids.len() < 2 {
        return Err(LossError::NeedsTwoTargets(targets.centroids.len()));
    }
    let m = predicted.len() as f64;
    let c = &targets.centroids;
    let mut loss = 0.0;
    let mut grad = vec![Vector3::zeros(); predicted.len()];

    for (i, p) in predicted.iter().enumerate() {
        let (j1, j2) = two_nearest(p, c);
        let v1 = p - c[j1];
        let v2 = p - c[j2];
        let (d1, d2) = (v1.norm(), v2.norm());
        // Smooth L1 of the distance, not componentwise: keeps the loss
        // invariant under simultaneous rigid motion of both point sets.
        loss += smooth_l1(&[d1]) / m;
        if d1 > 0.0 {
            grad[i] += if d1 < 1.0 { v1 } else { v1 / d1 } / m;
        }
        if lambda != 0.0 && d2 > 0.0 {
            loss += lambda * d1 / d2 / m;
            if d1 > 0.0 {
                grad[i] += lambda / m * (v1 / (d1 * d2) - d1 * v2 / (d2 * d2 * d2));
            }
        }
    }

    // Chamfer term and its gradient with respect to predictions.
    for (i, p) in predicted.iter().enumerate() {
        let j = (0..c.len())
            .min_by(|&a, &b| {
                let da = (p - c[a]).norm();
                let db = (p - c[b]).norm();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let v = p - c[j];
        let d = v.norm();
        loss += d / m;
        if d > 0.0 {
            grad[i] += v / (d * m);
        }
    }
    let nc = c.len() as f64;
    for q in c {
        let i = (0..predicted.len())
            .min_by(|&a, &b| {
                let da = (predicted[a] - q).norm();
                let db = (predicted[b] - q).norm();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let v = predicted[i] - q;
        let d = v.norm();
        loss += d / nc;
        if d > 0.0 {
            grad[i] += v / (d * nc);
        }
    }
    Ok((loss, grad))
}

/// Offset-regression loss: Normalized Euclidean term (squared distance to
/// the nearest centroid over its radius) plus Separation term (radius ratio
/// times nearest/second-nearest distance ratio), both divided by `k`.
/// Centroid ranks are taken from the shifted point position. A zero
/// second-nearest distance contributes 0 with a diagnostic.
pub fn champers_centroid_loss(
    points: &[Point3<f64>],
    offsets: &[Vector3<f64>],
    targets: &CentroidTargets,
    k: usize,
) -> Result<(f64, Diagnostics), LossError> {
    let (loss, _, diags) = champers_centroid_loss_grad(points, offsets, targets, k)?;
    Ok((loss, diags))
}

/// Loss plus analytic gradient with respect to each offset.
pub fn champers_centroid_loss_grad(
    points: &[Point3<f64>],
    offsets: &[Vector3<f64>],
    targets: &CentroidTargets,
    k: usize,
) -> Result<(f64, Vec<Vector3<f64>>, Diagnostics), LossError> {
    if points.len() != offsets.len() {
        return Err(LossError::LengthMismatch(format!(
            "{} points vs {} offsets",
            points.len(),
            offsets.len()
        )));
    }
    if targets.centroids.len() < 2 {
        return Err(LossError::NeedsTwoTargets(targets.centroids.len()));
    }
    assert!(k >= 1);
    let kf = k as f64;
    let c = &targets.centroids;
    let mut loss = 0.0;
    let mut grad = vec![Vector3::zeros(); points.len()];
    let mut diags = Diagnostics::new();

    for (i, (p, o)) in points.iter().zip(offsets).enumerate() {
        let shifted = p + o;
        let (j1, j2) = two_nearest(&shifted, c);
        let v1 = shifted - c[j1];
        let v2 = shifted - c[j2];
        let (d1, d2) = (v1.norm(), v2.norm());
        let (r1, r2) = (targets.radii[j1], targets.radii[j2]);

        loss += d1 * d1 / r1 / kf;
        grad[i] += 2.0 * v1 / r1 / kf;

        if d2 > 0.0 {
            loss += (r2 / r1) * (d1 / d2) / kf;
            if d1 > 0.0 {
                grad[i] += (r2 / r1) / kf * (v1 / (d1 * d2) - d1 * v2 / (d2 * d2 * d2));
            }
        } else {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "LOSS_SEPARATION_SINGULAR",
                i,
                format!("shifted point {i} coincides with its second-nearest centroid; separation term dropped"),
            ));
        }
    }
    Ok((loss, grad, diags.finish()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiceVariant {
    /// The formula exactly as published: w0 * [2 sum(p y) / (sum(p^2) +
    /// sum(p^2 y^2))] - w1 * sum(y log p).
    Printed,
    /// Conventional Dice loss: w0 * [1 - 2 sum(p y) / (sum(p^2) + sum(y^2))]
    /// - w1 * sum(y log p).
    Standard,
}

/// Weighted Dice + cross-entropy loss over a batch, pooled across samples.
/// A zero probability at a true class makes the CE term +infinity, reported
/// with a diagnostic.
pub fn dice_ce_loss(
    dist: &ClassDistribution,
    w0: f64,
    w1: f64,
    variant: DiceVariant,
) -> (f64, Diagnostics) {
    let mut diags = Diagnostics::new();
    let mut sum_py = 0.0;
    let mut sum_pp = 0.0;
    let mut sum_ppyy = 0.0;
    let mut sum_yy = 0.0;
    let mut ce = 0.0;
    for (s, (p, &t)) in dist
        .probabilities
        .iter()
        .zip(&dist.target_class)
        .enumerate()
    {
        for (cls, &prob) in p.iter().enumerate() {
            let y = f64::from(cls == t);
            sum_py += prob * y;
            sum_pp += prob * prob;
            sum_ppyy += prob * prob * y * y;
            sum_yy += y * y;
        }
        if p[t] > 0.0 {
            ce -= p[t].ln();
        } else {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "LOSS_CE_ZERO_PROBABILITY",
                s,
                format!("sample {s} assigns probability 0 to its true class; cross-entropy is infinite"),
            ));
            ce = f64::INFINITY;
        }
    }
    let dice = match variant {
        DiceVariant::Printed => 2.0 * sum_py / (sum_pp + sum_ppyy),
        DiceVariant::Standard => 1.0 - 2.0 * sum_py / (sum_pp + sum_yy),
    };
    let mut loss = 0.0;
    if w0 != 0.0 {
        loss += w0 * dice;
    }
    if w1 != 0.0 {
        loss += w1 * ce;
    }
    (loss, diags.finish())
}

/// Patch weight exp(-2 * distance); 1 at the predicted centroid, decaying
/// with distance.
pub fn patch_distance_weight(s: &Point3<f64>, predicted_centroid: &Point3<f64>) -> f64 {
    (-2.0 * (s - predicted_centroid).norm()).exp()
}

/// Indices whose predicted arch distance is at most `threshold`.
pub fn periphery_filter(
    points: &[Point3<f64>],
    predicted_distances: &[f64],
    threshold: f64,
) -> Vec<usize> {
    assert_eq!(points.len(), predicted_distances.len());
    predicted_distances
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d <= threshold)
        .map(|(i, _)| i)
        .collect()
}
