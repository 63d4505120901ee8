//! Tooth candidate proposals and IoU-based transitive merging.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A candidate tooth: a point subset of a source cloud with per-point
/// segmentation logits and 7 positional class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    /// Unique indices into the source cloud.
    pub indices: Vec<usize>,
    /// Per-point segmentation logits, parallel to `indices`.
    pub seg_logits: Vec<f64>,
    pub class_logits: [f64; 7],
}

impl Proposal {
    /// Points currently considered part of the tooth (logit > 0).
    pub fn foreground(&self) -> Vec<usize> {
        self.indices
            .iter()
            .zip(&self.seg_logits)
            .filter(|&(_, &l)| l > 0.0)
            .map(|(&i, _)| i)
            .collect()
    }
}

fn foreground_iou(a: &[usize], b: &[usize]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let sa: std::collections::BTreeSet<usize> = a.iter().copied().collect();
    let sb: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn merge_pair(a: &Proposal, b: &Proposal) -> Proposal {
    let mut logits: BTreeMap<usize, f64> = a
        .indices
        .iter()
        .copied()
        .zip(a.seg_logits.iter().copied())
        .collect();
    for (&i, &l) in b.indices.iter().zip(&b.seg_logits) {
        *logits.entry(i).or_insert(0.0) += l;
    }
    let mut class_logits = a.class_logits;
    for (c, &v) in class_logits.iter_mut().zip(&b.class_logits) {
        *c += v;
    }
    Proposal {
        indices: logits.keys().copied().collect(),
        seg_logits: logits.values().copied().collect(),
        class_logits,
    }
}

/// Merge proposals whose foregrounds overlap with IoU >= `iou_threshold`,
/// transitively, repeating until no pair qualifies. Shared-point logits sum,
/// others copy; class logits sum. Output order follows the earliest input
/// proposal of each merged group.
pub fn merge_proposals(proposals: &[Proposal], iou_threshold: f64) -> Vec<Proposal> {
    assert!(iou_threshold > 0.0 && iou_threshold <= 1.0);
    let mut current: Vec<Proposal> = proposals.to_vec();
    loop {
        let n = current.len();
        let fg: Vec<Vec<usize>> = current.iter().map(Proposal::foreground).collect();
        // Union-find over qualifying pairs gives the transitive closure.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        let mut merged_any = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if foreground_iou(&fg[i], &fg[j]) >= iou_threshold {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                        merged_any = true;
                    }
                }
            }
        }
        if !merged_any {
            return current;
        }
        let mut groups: BTreeMap<usize, Proposal> = BTreeMap::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            match groups.remove(&root) {
                Some(acc) => {
                    let merged = merge_pair(&acc, &current[i]);
                    groups.insert(root, merged);
                }
                None => {
                    groups.insert(root, current[i].clone());
                }
            }
        }
        current = groups.into_values().collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(indices: &[usize], logit: f64) -> Proposal {
        Proposal {
            indices: indices.to_vec(),
            seg_logits: vec![logit; indices.len()],
            class_logits: [1.0; 7],
        }
    }

    #[test]
    fn identical_proposals_merge_with_doubled_logits() {
        let p = prop(&[0, 1, 2], 0.5);
        let out = merge_proposals(&[p.clone(), p.clone()], 0.35);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].indices, vec![0, 1, 2]);
        assert_eq!(out[0].seg_logits, vec![1.0, 1.0, 1.0]);
        assert_eq!(out[0].class_logits, [2.0; 7]);
    }

    #[test]
    fn disjoint_proposals_unchanged() {
        let a = prop(&[0, 1], 1.0);
        let b = prop(&[2, 3], 1.0);
        let out = merge_proposals(&[a.clone(), b.clone()], 0.35);
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn chain_merges_transitively() {
        // A~B and B~C each share 2 of 5 foreground points (IoU 2/4 = 0.5);
        // A and C are disjoint.
        let a = prop(&[0, 1, 2], 1.0);
        let b = prop(&[1, 2, 3, 4], 1.0);
        let c = prop(&[3, 4, 5], 1.0);
        assert!(foreground_iou(&a.foreground(), &c.foreground()) == 0.0);
        let out = merge_proposals(&[a, b, c], 0.4);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn negative_logit_points_are_not_foreground() {
        let mut a = prop(&[0, 1, 2], 1.0);
        a.seg_logits[2] = -1.0;
        let b = prop(&[2, 3], 1.0);
        // Foregrounds {0,1} and {2,3} are disjoint even though index 2 is
        // shared.
        let out = merge_proposals(&[a.clone(), b.clone()], 0.1);
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn order_independent() {
        let a = prop(&[0, 1, 2], 1.0);
        let b = prop(&[1, 2, 3], 1.0);
        let c = prop(&[7, 8], 1.0);
        let fwd = merge_proposals(&[a.clone(), b.clone(), c.clone()], 0.4);
        let rev = merge_proposals(&[c, b, a], 0.4);
        let key = |p: &Proposal| p.indices.clone();
        let mut fwd_k: Vec<_> = fwd.iter().map(key).collect();
        let mut rev_k: Vec<_> = rev.iter().map(key).collect();
        fwd_k.sort();
        rev_k.sort();
        assert_eq!(fwd_k, rev_k);
    }
}
