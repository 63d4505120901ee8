//! Dental-arch curve fitting and FDI label-sequence correction.
//!
//! Tooth centroids projected to the xOy plane fit a parabola (the arch
//! curve); teeth ordered along it are aligned against the canonical FDI arch
//! sequence by minimal-edit dynamic programming, which removes duplicate
//! labels and repairs order inversions.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{fdi_arch_sequence, Jaw};

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("too many teeth: {0} (an arch holds at most 16)")]
    TooManyTeeth(usize),
}

/// Parabola y = a x^2 + b x + c in the pose-normalized xOy plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sum of squared residuals of the fit.
    pub residual: f64,
}

/// Least-squares parabola through the xy-projections of the centroids.
pub fn fit_arch_curve(centroids: &[Point3<f64>]) -> Result<ArchCurve, ArchError> {
    if centroids.len() < 3 {
        return Err(ArchError::DegenerateFit(format!(
            "{} centroids (need at least 3)",
            centroids.len()
        )));
    }
    // Normal equations for the Vandermonde system.
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for p in centroids {
        let row = Vector3::new(p.x * p.x, p.x, 1.0);
        ata += row * row.transpose();
        atb += row * p.y;
    }
    let coeffs = ata
        .lu()
        .solve(&atb)
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            ArchError::DegenerateFit("normal equations are rank-deficient (need 3 distinct x)".into())
        })?;
    // An exactly repeated x collapses the system numerically but LU may still
    // return something; check conditioning through the residual of ATA.
    if ata.determinant().abs() < 1e-9 * ata.norm().powi(3).max(1e-300) {
        return Err(ArchError::DegenerateFit(
            "normal equations are rank-deficient (need 3 distinct x)".into(),
        ));
    }
    let residual = centroids
        .iter()
        .map(|p| {
            let y = coeffs[0] * p.x * p.x + coeffs[1] * p.x + coeffs[2];
            (p.y - y).powi(2)
        })
        .sum();
    Ok(ArchCurve {
        a: coeffs[0],
        b: coeffs[1],
        c: coeffs[2],
        residual,
    })
}

/// Minimal-cost strictly-increasing assignment of the observed label sequence
/// onto the expected arch sequence. Primary cost: substitutions. Secondary
/// cost: total slot displacement of each label from its canonical position,
/// which keeps equal-substitution ties near the observed labels instead of
/// drifting along the arch. Returns ((substitutions, displacement), slots).
fn align_sequence(observed: &[u32], expected: &[u32]) -> ((usize, usize), Vec<usize>) {
    let n = observed.len();
    let m = expected.len();
    debug_assert!(n <= m);
    let canonical: std::collections::BTreeMap<u32, usize> = expected
        .iter()
        .enumerate()
        .map(|(j, &l)| (l, j))
        .collect();
    let cost_of = |i: usize, j: usize| -> (usize, usize) {
        let sub = usize::from(observed[i] != expected[j]);
        let disp = canonical
            .get(&observed[i])
            .map_or(0, |&cj| cj.abs_diff(j));
        (sub, disp)
    };
    let add = |a: (usize, usize), b: (usize, usize)| (a.0 + b.0, a.1 + b.1);

    const INF: (usize, usize) = (usize::MAX / 2, usize::MAX / 2);
    // dp[i][j]: min cost assigning the first i teeth within the first j slots.
    let mut dp = vec![vec![INF; m + 1]; n + 1];
    for j in 0..=m {
        dp[0][j] = (0, 0);
    }
    for i in 1..=n {
        for j in i..=m {
            let place = add(dp[i - 1][j - 1], cost_of(i - 1, j - 1));
            dp[i][j] = place.min(dp[i][j - 1]);
        }
    }
    // Traceback, preferring to place a tooth in the latest viable slot.
    let mut slots = vec![0usize; n];
    let (mut i, mut j) = (n, m);
    while i > 0 {
        if j > i && dp[i][j] == dp[i][j - 1] {
            j -= 1;
        } else {
            slots[i - 1] = j - 1;
            i -= 1;
            j -= 1;
        }
    }
    (dp[n][m], slots)
}

/// Correct an observed (centroid, label) sequence against the canonical FDI
/// arch order. Teeth are sorted along the arch by the x coordinate of their
/// projection; both arch directions are tried and the cheaper alignment wins
/// (ties keep ascending x against the canonical sequence). The output never
/// contains duplicate FDI labels.
pub fn arch_label_correct(
    teeth: &[(Point3<f64>, u32)],
    _curve: &ArchCurve,
    jaw: Jaw,
) -> Result<Vec<u32>, ArchError> {
    if teeth.len() > 16 {
        return Err(ArchError::TooManyTeeth(teeth.len()));
    }
    if teeth.is_empty() {
        return Ok(Vec::new());
    }
    let expected = fdi_arch_sequence(jaw);

    let mut order: Vec<usize> = (0..teeth.len()).collect();
    order.sort_by(|&a, &b| teeth[a].0.x.partial_cmp(&teeth[b].0.x).unwrap().then(a.cmp(&b)));
    let observed: Vec<u32> = order.iter().map(|&i| teeth[i].1).collect();

    let (cost_fwd, slots_fwd) = align_sequence(&observed, &expected);
    let reversed: Vec<u32> = observed.iter().rev().copied().collect();
    let (cost_rev, slots_rev) = align_sequence(&reversed, &expected);

    let mut corrected = vec![0u32; teeth.len()];
    if cost_fwd <= cost_rev {
        for (pos, &slot) in slots_fwd.iter().enumerate() {
            corrected[order[pos]] = expected[slot];
        }
    } else {
        for (pos, &slot) in slots_rev.iter().enumerate() {
            corrected[order[teeth.len() - 1 - pos]] = expected[slot];
        }
    }
    Ok(corrected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_parabola_recovered() {
        let points: Vec<Point3<f64>> = [-2.0, -1.0, 0.0, 1.5, 3.0]
            .iter()
            .map(|&x: &f64| Point3::new(x, 2.0 * x * x - x + 3.0, 0.7))
            .collect();
        let curve = fit_arch_curve(&points).unwrap();
        assert!((curve.a - 2.0).abs() < 1e-9);
        assert!((curve.b + 1.0).abs() < 1e-9);
        assert!((curve.c - 3.0).abs() < 1e-9);
        assert!(curve.residual < 1e-18);
    }

    #[test]
    fn two_points_degenerate() {
        let points = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 0.0)];
        assert!(matches!(
            fit_arch_curve(&points),
            Err(ArchError::DegenerateFit(_))
        ));
    }

    #[test]
    fn repeated_x_degenerate() {
        let points = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 2.0, 0.0),
            Point3::new(1.0, 5.0, 0.0),
        ];
        assert!(matches!(
            fit_arch_curve(&points),
            Err(ArchError::DegenerateFit(_))
        ));
    }

    fn flat_curve() -> ArchCurve {
        ArchCurve {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            residual: 0.0,
        }
    }

    fn teeth_along_x(labels: &[u32]) -> Vec<(Point3<f64>, u32)> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (Point3::new(i as f64, 0.0, 0.0), l))
            .collect()
    }

    #[test]
    fn sorted_unique_labels_unchanged() {
        let teeth = teeth_along_x(&[17, 16, 15, 14, 13, 12, 11, 21, 22]);
        let out = arch_label_correct(&teeth, &flat_curve(), Jaw::Upper).unwrap();
        assert_eq!(out, vec![17, 16, 15, 14, 13, 12, 11, 21, 22]);
        // Idempotent.
        let teeth2: Vec<_> = teeth
            .iter()
            .zip(&out)
            .map(|(&(p, _), &l)| (p, l))
            .collect();
        assert_eq!(
            arch_label_correct(&teeth2, &flat_curve(), Jaw::Upper).unwrap(),
            out
        );
    }

    #[test]
    fn duplicate_21_flanking_22_resolved() {
        let teeth = teeth_along_x(&[21, 22, 21]);
        let out = arch_label_correct(&teeth, &flat_curve(), Jaw::Upper).unwrap();
        assert_eq!(out, vec![21, 22, 23]);
    }

    #[test]
    fn swapped_pair_corrected_in_context() {
        // Arch order carries 13, then a swapped (11, 12) pair, then 21:
        // the increasing alignment restores 12 before 11.
        let teeth = teeth_along_x(&[13, 11, 12, 21]);
        let out = arch_label_correct(&teeth, &flat_curve(), Jaw::Upper).unwrap();
        assert_eq!(out, vec![13, 12, 11, 21]);
    }

    #[test]
    fn output_never_has_duplicates() {
        let teeth = teeth_along_x(&[14, 14, 14, 14, 14]);
        let out = arch_label_correct(&teeth, &flat_curve(), Jaw::Upper).unwrap();
        let set: std::collections::HashSet<_> = out.iter().collect();
        assert_eq!(set.len(), out.len());
        assert!(out.contains(&14));
    }

    #[test]
    fn reversed_direction_still_aligns() {
        // Same labels laid out with x descending: the reverse trial wins and
        // leaves labels unchanged.
        let labels = [17, 16, 15, 14];
        let teeth: Vec<_> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (Point3::new(-(i as f64), 0.0, 0.0), l))
            .collect();
        let out = arch_label_correct(&teeth, &flat_curve(), Jaw::Upper).unwrap();
        assert_eq!(out, vec![17, 16, 15, 14]);
    }

    #[test]
    fn seventeen_teeth_is_an_error() {
        let teeth = teeth_along_x(&[11; 17]);
        assert!(matches!(
            arch_label_correct(&teeth, &flat_curve(), Jaw::Upper),
            Err(ArchError::TooManyTeeth(17))
        ));
    }
}
