//! Face-label field operations: vote fusion from rendered-view hits, island
//! removal, and per-label morphological closing.

use std::collections::BTreeSet;
use thiserror::Error;

use crate::mesh::TriMesh;

pub const UNASSIGNED: i32 = -1;

/// Per-face integer labels; -1 means unassigned.
pub type LabeledFaceField = Vec<i32>;

#[derive(Debug, Error)]
pub enum LabelFieldError {
    #[error("no anchor: the label field is entirely unassigned")]
    NoAnchor,
    #[error("label field has {got} entries but the mesh has {expected} faces")]
    LengthMismatch { got: usize, expected: usize },
}

/// Weighted majority vote per face over (label, weight) hit records. Faces
/// with no hits stay unassigned (-1); weight ties go to the smaller label.
pub fn majority_vote_fusion(face_hits: &[Vec<(i32, f64)>]) -> LabeledFaceField {
    face_hits
        .iter()
        .map(|hits| {
            let mut totals: std::collections::BTreeMap<i32, f64> = std::collections::BTreeMap::new();
            for &(label, weight) in hits {
                assert!(weight >= 0.0);
                *totals.entry(label).or_default() += weight;
            }
            totals
                .iter()
                // BTreeMap order makes `>` keep the smaller label on ties.
                .fold((UNASSIGNED, f64::NEG_INFINITY), |acc, (&l, &w)| {
                    if w > acc.1 {
                        (l, w)
                    } else {
                        acc
                    }
                })
                .0
        })
        .collect()
}

/// Reassign every unassigned connected component, and every labeled component
/// smaller than `min_island_faces`, to the label of the nearest anchor face
/// by breadth-first hop distance (ties toward the smaller label).
pub fn island_removal(
    mesh: &TriMesh,
    field: &LabeledFaceField,
    min_island_faces: usize,
) -> Result<LabeledFaceField, LabelFieldError> {
    if field.len() != mesh.face_count() {
        return Err(LabelFieldError::LengthMismatch {
            got: field.len(),
            expected: mesh.face_count(),
        });
    }
    let adj = mesh.face_adjacency();
    let n = field.len();

    // Equal-label connected components.
    let mut component = vec![usize::MAX; n];
    let mut comp_faces: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = comp_faces.len();
        let mut faces = vec![start];
        component[start] = id;
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            for &g in &adj[f] {
                if component[g] == usize::MAX && field[g] == field[start] {
                    component[g] = id;
                    stack.push(g);
                    faces.push(g);
                }
            }
        }
        comp_faces.push(faces);
    }

    let relabel: Vec<bool> = comp_faces
        .iter()
        .map(|faces| {
            field[faces[0]] == UNASSIGNED || faces.len() < min_island_faces
        })
        .collect();
    // Anchor faces keep their label and seed the BFS.
    if !(0..n).any(|f| !relabel[component[f]]) {
        return Err(LabelFieldError::NoAnchor);
    }

    // Multi-source sweep from all anchor faces at once; each relabel face
    // takes the (hop distance, label) minimum, so gaps between regions split
    // at their midpoint and hop ties go to the smaller label.
    let mut best: Vec<Option<(usize, i32)>> = vec![None; n];
    let mut frontier: std::collections::BinaryHeap<std::cmp::Reverse<(usize, i32, usize)>> =
        std::collections::BinaryHeap::new();
    for f in 0..n {
        if !relabel[component[f]] {
            best[f] = Some((0, field[f]));
            frontier.push(std::cmp::Reverse((0, field[f], f)));
        }
    }
    while let Some(std::cmp::Reverse((d, label, f))) = frontier.pop() {
        if best[f] != Some((d, label)) {
            continue;
        }
        for &g in &adj[f] {
            if !relabel[component[g]] {
                continue;
            }
            let candidate = (d + 1, label);
            if best[g].map_or(true, |b| candidate < b) {
                best[g] = Some(candidate);
                frontier.push(std::cmp::Reverse((d + 1, label, g)));
            }
        }
    }

    let mut out = field.clone();
    for f in 0..n {
        if relabel[component[f]] {
            let (_, label) = best[f].ok_or(LabelFieldError::NoAnchor)?;
            out[f] = label;
        }
    }
    Ok(out)
}

/// Morphological closing per nonzero label, ascending: `iterations` steps of
/// dilation into gingiva (label 0) faces, then the same number of erosion
/// steps applied to the dilated ring. Other labels are never overwritten and
/// the original extent of each label always survives.
pub fn label_closing(
    mesh: &TriMesh,
    field: &LabeledFaceField,
    iterations: usize,
) -> Result<LabeledFaceField, LabelFieldError> {
    if field.len() != mesh.face_count() {
        return Err(LabelFieldError::LengthMismatch {
            got: field.len(),
            expected: mesh.face_count(),
        });
    }
    if iterations == 0 {
        return Ok(field.clone());
    }
    let adj = mesh.face_adjacency();
    let mut out = field.clone();
    let labels: BTreeSet<i32> = field.iter().copied().filter(|&l| l > 0).collect();
    for label in labels {
        let mut in_set: Vec<bool> = out.iter().map(|&l| l == label).collect();
        let original = in_set.clone();
        // Dilate into gingiva only.
        for _ in 0..iterations {
            let mut grow = Vec::new();
            for f in 0..out.len() {
                if !in_set[f] && out[f] == 0 && adj[f].iter().any(|&g| in_set[g]) {
                    grow.push(f);
                }
            }
            for f in grow {
                in_set[f] = true;
            }
        }
        // Erode the added ring; original faces are kept.
        for _ in 0..iterations {
            let mut shrink = Vec::new();
            for f in 0..out.len() {
                if in_set[f] && !original[f] && adj[f].iter().any(|&g| !in_set[g]) {
                    shrink.push(f);
                }
            }
            for f in shrink {
                in_set[f] = false;
            }
        }
        for f in 0..out.len() {
            if in_set[f] {
                out[f] = label;
            }
        }
    }
    Ok(out)
}
