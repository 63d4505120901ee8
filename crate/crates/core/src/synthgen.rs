//! Deterministic synthetic jaw scans with exact ground truth, plus
//! perturbation operators whose metric effects are predictable in closed
//! form. This is the test bed standing in for real intra-oral scans.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{fdi_arch_sequence, Jaw, ScanAnnotation};
use crate::instances::{extract_instances, ToothInstance};
use crate::mesh::TriMesh;
use crate::metrics::ToothRecord;
use crate::synth_shapes::icosphere;

/// Teeth are placed along x in [-ARCH_HALF_SPAN, ARCH_HALF_SPAN] mm.
pub const ARCH_HALF_SPAN: f64 = 25.0;
/// Fraction of the radius above the center where the occlusal side is cut.
const OCCLUSAL_CUT: f64 = 0.55;
/// Vertical clearance between the gum band plane and the sphere bottoms.
const GUM_DROP: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("teeth {0} and {1} overlap: centroid spacing {2:.3} <= radius sum {3:.3}")]
    ToothOverlap(usize, usize, f64, f64),
    #[error("perturbation references instance {0}, scan has {1} teeth")]
    BadInstance(u32, usize),
    #[error("erode fraction {0} outside [0, 1)")]
    BadFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub jaw: Jaw,
    pub tooth_count: usize,
    /// Arch parabola y = a x^2 + b x + c in the xy plane (mm).
    pub arch_a: f64,
    pub arch_b: f64,
    pub arch_c: f64,
    /// Per-tooth radii are drawn uniformly from this range (mm).
    pub tooth_radius_range: (f64, f64),
    pub subdivision_level: usize,
    pub gum_band_width: f64,
    pub seed: u64,
    #[serde(default = "default_patient_id")]
    pub patient_id: String,
}

fn default_patient_id() -> String {
    "synthetic".to_string()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            jaw: Jaw::Upper,
            tooth_count: 14,
            arch_a: -0.04,
            arch_b: 0.0,
            arch_c: 25.0,
            tooth_radius_range: (1.0, 1.6),
            subdivision_level: 2,
            gum_band_width: 6.0,
            seed: 0,
            patient_id: default_patient_id(),
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if !(4..=16).contains(&self.tooth_count) {
            return Err(SynthError::InvalidConfig(format!(
                "tooth_count {} outside 4..=16",
                self.tooth_count
            )));
        }
        let (lo, hi) = self.tooth_radius_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(SynthError::InvalidConfig(format!(
                "tooth radius range ({lo}, {hi}) invalid"
            )));
        }
        if self.subdivision_level > 5 {
            return Err(SynthError::InvalidConfig(format!(
                "subdivision level {} too deep",
                self.subdivision_level
            )));
        }
        if !(self.gum_band_width > 0.0) {
            return Err(SynthError::InvalidConfig(format!(
                "gum band width {} must be positive",
                self.gum_band_width
            )));
        }
        Ok(())
    }
}

/// Exact per-scan ground truth carried alongside the generated mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthExtras {
    /// Per tooth in instance order 1..tooth_count.
    pub centroids: Vec<Point3<f64>>,
    /// 2 x max centroid-to-vertex distance per tooth.
    pub sizes: Vec<f64>,
    pub labels: Vec<u32>,
    /// Per vertex: vector to the owning tooth centroid; zero on the gum.
    pub offsets: Vec<Vector3<f64>>,
}

fn arch_y(cfg: &SynthConfig, x: f64) -> f64 {
    cfg.arch_a * x * x + cfg.arch_b * x + cfg.arch_c
}

/// x positions of `n` equal arc-length stations along the arch parabola.
fn arch_stations(cfg: &SynthConfig, n: usize) -> Vec<f64> {
    const STEPS: usize = 4000;
    let h = 2.0 * ARCH_HALF_SPAN / STEPS as f64;
    // Cumulative arc length at each discretization node.
    let mut cum = Vec::with_capacity(STEPS + 1);
    cum.push(0.0);
    let mut total = 0.0;
    for s in 0..STEPS {
        let x = -ARCH_HALF_SPAN + s as f64 * h;
        let slope = 2.0 * cfg.arch_a * (x + 0.5 * h) + cfg.arch_b;
        total += (1.0 + slope * slope).sqrt() * h;
        cum.push(total);
    }
    (0..n)
        .map(|i| {
            let target = (i as f64 + 0.5) / n as f64 * total;
            let k = cum.partition_point(|&c| c < target).max(1);
            let frac = (target - cum[k - 1]) / (cum[k] - cum[k - 1]);
            -ARCH_HALF_SPAN + (k as f64 - 1.0 + frac) * h
        })
        .collect()
}

/// Generate a jaw scan: icosphere teeth with flattened occlusal tops on the
/// arch parabola at equal arc-length spacing, a triangulated gum band under
/// them, FDI labels in arch order, instances 1..tooth_count, and exact
/// ground-truth extras. Byte-deterministic for a given config.
pub fn generate_jaw(
    cfg: &SynthConfig,
) -> Result<(TriMesh, ScanAnnotation, GroundTruthExtras), SynthError> {
    cfg.validate()?;
    let n = cfg.tooth_count;
    let stations = arch_stations(cfg, n);

    // Per-tooth RNG streams: adding teeth must not shift existing geometry.
    let radii: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let (lo, hi) = cfg.tooth_radius_range;
            rng.gen_range(lo..=hi)
        })
        .collect();

    let centers: Vec<Point3<f64>> = stations
        .iter()
        .zip(&radii)
        .map(|(&x, &r)| Point3::new(x, arch_y(cfg, x), GUM_DROP + r))
        .collect();
    for i in 0..n.saturating_sub(1) {
        let spacing = (centers[i + 1] - centers[i]).norm();
        let reach = radii[i] + radii[i + 1];
        if spacing <= reach {
            return Err(SynthError::ToothOverlap(i, i + 1, spacing, reach));
        }
    }

    // FDI window centered on the arch sequence.
    let sequence = fdi_arch_sequence(cfg.jaw);
    let start = (16 - n) / 2;
    let labels_per_tooth: Vec<u32> = sequence[start..start + n].to_vec();

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vertex_labels = Vec::new();
    let mut vertex_instances = Vec::new();

    for (i, (&r, center)) in radii.iter().zip(&centers).enumerate() {
        let sphere = icosphere(r, cfg.subdivision_level as u32);
        let base = vertices.len();
        let cut = center.z + OCCLUSAL_CUT * r;
        for v in &sphere.vertices {
            let mut p = center + v.coords;
            if p.z > cut {
                p.z = cut;
            }
            vertices.push(p);
            vertex_labels.push(labels_per_tooth[i]);
            vertex_instances.push(i as u32 + 1);
        }
        for f in &sphere.faces {
            faces.push([f[0] + base, f[1] + base, f[2] + base]);
        }
    }

    // Gum band: a flat ribbon following the arch at z = 0.
    let band_segments = 8 * n;
    let band_h = 2.0 * ARCH_HALF_SPAN / band_segments as f64;
    let base = vertices.len();
    for s in 0..=band_segments {
        let x = -ARCH_HALF_SPAN + s as f64 * band_h;
        let slope = 2.0 * cfg.arch_a * x + cfg.arch_b;
        let t = Vector3::new(1.0, slope, 0.0).normalize();
        let normal = Vector3::new(-t.y, t.x, 0.0);
        let mid = Point3::new(x, arch_y(cfg, x), 0.0);
        for p in [
            mid - normal * (cfg.gum_band_width / 2.0),
            mid + normal * (cfg.gum_band_width / 2.0),
        ] {
            vertices.push(p);
            vertex_labels.push(0);
            vertex_instances.push(0);
        }
    }
    for s in 0..band_segments {
        let (l0, r0) = (base + 2 * s, base + 2 * s + 1);
        let (l1, r1) = (l0 + 2, r0 + 2);
        faces.push([l0, r0, l1]);
        faces.push([r0, r1, l1]);
    }

    let mesh = TriMesh::new(vertices, faces).expect("generated indices are in range");
    let ann = ScanAnnotation {
        patient_id: cfg.patient_id.clone(),
        jaw: cfg.jaw,
        labels: vertex_labels,
        instances: vertex_instances,
    };

    let mut centroids = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(n);
    let mut offsets = vec![Vector3::zeros(); mesh.vertex_count()];
    for i in 0..n {
        let ids: Vec<usize> = (0..mesh.vertex_count())
            .filter(|&v| ann.instances[v] == i as u32 + 1)
            .collect();
        let mut sum = Vector3::zeros();
        for &v in &ids {
            sum += mesh.vertices[v].coords;
        }
        let centroid = Point3::from(sum / ids.len() as f64);
        let size = 2.0
            * ids
                .iter()
                .map(|&v| (mesh.vertices[v] - centroid).norm())
                .fold(0.0, f64::max);
        for &v in &ids {
            offsets[v] = centroid - mesh.vertices[v];
        }
        centroids.push(centroid);
        sizes.push(size);
    }

    let extras = GroundTruthExtras {
        centroids,
        sizes,
        labels: labels_per_tooth,
        offsets,
    };
    Ok((mesh, ann, extras))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PerturbOp {
    SwapLabels { i: u32, j: u32 },
    DropTooth { i: u32 },
    JitterInstance { i: u32, displacement: f64 },
    ErodeInstance { i: u32, fraction: f64 },
    Relabel { i: u32, new_label: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub operations: Vec<PerturbOp>,
}

/// The analytically expected per-GT-tooth evaluation records after a
/// perturbation, derived from closed-form centroid/overlap arithmetic
/// without running the metrics module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedScanMetrics {
    pub teeth: Vec<ToothRecord>,
}

struct PredTooth {
    vertex_ids: Vec<usize>,
    label: u32,
    translation: Vector3<f64>,
    dropped: bool,
}

/// Apply a perturbation to a scan, returning the perturbed prediction (mesh
/// with moved instance vertices plus relabeled annotation) and the expected
/// evaluation records against the unperturbed source.
pub fn perturb(
    mesh: &TriMesh,
    ann: &ScanAnnotation,
    spec: &PerturbSpec,
    seed: u64,
) -> Result<(TriMesh, ScanAnnotation, ExpectedScanMetrics), SynthError> {
    let (gt_teeth, _) = extract_instances(mesh, ann);
    let index_of = |id: u32| -> Result<usize, SynthError> {
        gt_teeth
            .iter()
            .position(|t| t.instance_id == id)
            .ok_or(SynthError::BadInstance(id, gt_teeth.len()))
    };

    let mut pred: Vec<PredTooth> = gt_teeth
        .iter()
        .map(|t| PredTooth {
            vertex_ids: t.vertex_ids.clone(),
            label: t.label,
            translation: Vector3::zeros(),
            dropped: false,
        })
        .collect();

    for op in &spec.operations {
        match *op {
            PerturbOp::SwapLabels { i, j } => {
                let (a, b) = (index_of(i)?, index_of(j)?);
                let tmp = pred[a].label;
                pred[a].label = pred[b].label;
                pred[b].label = tmp;
            }
            PerturbOp::DropTooth { i } => {
                let a = index_of(i)?;
                pred[a].dropped = true;
                pred[a].vertex_ids.clear();
            }
            PerturbOp::JitterInstance { i, displacement } => {
                let a = index_of(i)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u64::from(i));
                // Uniform direction by normalized Gaussian triple.
                let dir = loop {
                    let v = Vector3::new(
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 2.0 - 1.0,
                        rng.gen::<f64>() * 2.0 - 1.0,
                    );
                    let norm = v.norm();
                    if norm > 1e-3 && norm <= 1.0 {
                        break v / norm;
                    }
                };
                pred[a].translation += dir * displacement;
            }
            PerturbOp::ErodeInstance { i, fraction } => {
                if !(0.0..1.0).contains(&fraction) {
                    return Err(SynthError::BadFraction(fraction));
                }
                let a = index_of(i)?;
                let count = pred[a].vertex_ids.len();
                let remove = (fraction * count as f64).floor() as usize;
                // Deterministic erosion: drop the vertices farthest from the
                // source centroid (ties toward keeping the smaller index).
                let centroid = gt_teeth[a].centroid;
                let mut order = pred[a].vertex_ids.clone();
                order.sort_by(|&u, &v| {
                    let du = (mesh.vertices[u] - centroid).norm();
                    let dv = (mesh.vertices[v] - centroid).norm();
                    dv.partial_cmp(&du).unwrap().then(v.cmp(&u))
                });
                let removed: std::collections::BTreeSet<usize> =
                    order[..remove].iter().copied().collect();
                pred[a].vertex_ids.retain(|v| !removed.contains(v));
            }
            PerturbOp::Relabel { i, new_label } => {
                let a = index_of(i)?;
                pred[a].label = new_label;
            }
        }
    }

    // Assemble the perturbed scan.
    let mut out_vertices = mesh.vertices.clone();
    let mut out_labels = vec![0u32; mesh.vertex_count()];
    let mut out_instances = vec![0u32; mesh.vertex_count()];
    for (t, gt) in pred.iter().zip(&gt_teeth) {
        for &v in &t.vertex_ids {
            out_vertices[v] += t.translation;
            out_labels[v] = t.label;
            out_instances[v] = gt.instance_id;
        }
    }
    let out_mesh = TriMesh::new(out_vertices, mesh.faces.clone()).expect("indices unchanged");
    let out_ann = ScanAnnotation {
        patient_id: ann.patient_id.clone(),
        jaw: ann.jaw,
        labels: out_labels,
        instances: out_instances,
    };

    let expected = expected_records(&gt_teeth, &pred, &out_mesh);
    Ok((out_mesh, out_ann, expected))
}

/// Closed-form expected records: predicted centroids are vertex means of the
/// surviving instance vertices; overlaps reduce to the surviving counts
/// because perturbed instances only shrink within their source tooth.
fn expected_records(
    gt_teeth: &[ToothInstance],
    pred: &[PredTooth],
    out_mesh: &TriMesh,
) -> ExpectedScanMetrics {
    let alive: Vec<usize> = (0..pred.len())
        .filter(|&i| !pred[i].dropped && !pred[i].vertex_ids.is_empty())
        .collect();
    let pred_centroids: Vec<Point3<f64>> = alive
        .iter()
        .map(|&i| {
            let mut sum = Vector3::zeros();
            for &v in &pred[i].vertex_ids {
                sum += out_mesh.vertices[v].coords;
            }
            Point3::from(sum / pred[i].vertex_ids.len() as f64)
        })
        .collect();

    let teeth = gt_teeth
        .iter()
        .enumerate()
        .map(|(g, gt)| {
            if alive.is_empty() {
                return ToothRecord {
                    gt_instance_id: gt.instance_id,
                    gt_label: gt.label,
                    normalized_distance: crate::metrics::MISSING_OUTPUT_PENALTY,
                    f1: 0.0,
                    identified: false,
                };
            }
            let (closest, distance) = alive
                .iter()
                .zip(&pred_centroids)
                .map(|(&i, c)| (i, (c - gt.centroid).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
                .unwrap();
            let f1 = if pred[g].dropped || pred[g].vertex_ids.is_empty() {
                0.0
            } else {
                // Precision 1 (every surviving vertex is from this tooth),
                // recall = surviving fraction.
                let recall = pred[g].vertex_ids.len() as f64 / gt.vertex_ids.len() as f64;
                2.0 * recall / (1.0 + recall)
            };
            let identified = distance < gt.size / 2.0 && pred[closest].label == gt.label;
            ToothRecord {
                gt_instance_id: gt.instance_id,
                gt_label: gt.label,
                normalized_distance: distance / gt.size,
                f1,
                identified,
            }
        })
        .collect();
    ExpectedScanMetrics { teeth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::write_annotation;
    use crate::instances::validate_scan;
    use crate::metrics::{evaluate_scan_pair, EvalConfig};
    use crate::obj::write_obj;

    #[test]
    fn fourteen_upper_teeth_get_the_centered_fdi_window() {
        let cfg = SynthConfig::default();
        let (_, ann, extras) = generate_jaw(&cfg).unwrap();
        assert_eq!(
            extras.labels,
            vec![17, 16, 15, 14, 13, 12, 11, 21, 22, 23, 24, 25, 26, 27]
        );
        assert_eq!(ann.jaw, Jaw::Upper);
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let cfg = SynthConfig {
            seed: 42,
            ..SynthConfig::default()
        };
        let (m1, a1, _) = generate_jaw(&cfg).unwrap();
        let (m2, a2, _) = generate_jaw(&cfg).unwrap();
        assert_eq!(write_obj(&m1), write_obj(&m2));
        assert_eq!(write_annotation(&a1), write_annotation(&a2));
    }

    #[test]
    fn different_seeds_differ() {
        let (m1, _, _) = generate_jaw(&SynthConfig::default()).unwrap();
        let (m2, _, _) = generate_jaw(&SynthConfig {
            seed: 9,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(write_obj(&m1), write_obj(&m2));
    }

    #[test]
    fn generated_scan_validates_cleanly() {
        let (mesh, ann, _) = generate_jaw(&SynthConfig::default()).unwrap();
        let diags = validate_scan(&mesh, &ann);
        assert!(diags.is_empty(), "{}", diags.render_text());
    }

    #[test]
    fn extras_match_extract_instances() {
        let (mesh, ann, extras) = generate_jaw(&SynthConfig::default()).unwrap();
        let (teeth, diags) = extract_instances(&mesh, &ann);
        assert!(diags.is_empty());
        assert_eq!(teeth.len(), extras.centroids.len());
        for (t, (c, s)) in teeth
            .iter()
            .zip(extras.centroids.iter().zip(&extras.sizes))
        {
            assert!((t.centroid - c).norm() < 1e-9);
            assert!((t.size - s).abs() < 1e-9);
        }
        // Offsets point from each tooth vertex to its centroid.
        for (v, off) in extras.offsets.iter().enumerate() {
            let inst = ann.instances[v];
            if inst == 0 {
                assert_eq!(*off, Vector3::zeros());
            } else {
                let c = extras.centroids[inst as usize - 1];
                assert!((mesh.vertices[v] + off - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lower_jaw_uses_lower_quadrants() {
        let cfg = SynthConfig {
            jaw: Jaw::Lower,
            tooth_count: 8,
            ..SynthConfig::default()
        };
        let (_, _, extras) = generate_jaw(&cfg).unwrap();
        assert!(extras.labels.iter().all(|&l| l / 10 == 3 || l / 10 == 4));
        assert_eq!(extras.labels.len(), 8);
    }

    #[test]
    fn overlapping_radii_rejected() {
        let cfg = SynthConfig {
            tooth_count: 16,
            tooth_radius_range: (4.0, 4.0),
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate_jaw(&cfg),
            Err(SynthError::ToothOverlap(..))
        ));
    }

    #[test]
    fn bad_configs_rejected() {
        let bad = SynthConfig {
            tooth_count: 3,
            ..SynthConfig::default()
        };
        assert!(matches!(generate_jaw(&bad), Err(SynthError::InvalidConfig(_))));
        let bad = SynthConfig {
            tooth_radius_range: (0.0, 1.0),
            ..SynthConfig::default()
        };
        assert!(matches!(generate_jaw(&bad), Err(SynthError::InvalidConfig(_))));
    }

    fn eval_against_source(
        mesh: &TriMesh,
        ann: &ScanAnnotation,
        pred_mesh: &TriMesh,
        pred_ann: &ScanAnnotation,
    ) -> Vec<ToothRecord> {
        let (partial, _) = evaluate_scan_pair(
            mesh,
            ann,
            Some((pred_mesh, pred_ann)),
            EvalConfig::default(),
        );
        partial.teeth
    }

    #[test]
    fn empty_perturbation_is_identity() {
        let (mesh, ann, _) = generate_jaw(&SynthConfig::default()).unwrap();
        let (pm, pa, expected) = perturb(&mesh, &ann, &PerturbSpec::default(), 1).unwrap();
        assert_eq!(write_obj(&pm), write_obj(&mesh));
        assert_eq!(pa, ann);
        for t in &expected.teeth {
            assert_eq!(t.normalized_distance, 0.0);
            assert_eq!(t.f1, 1.0);
            assert!(t.identified);
        }
    }

    #[test]
    fn perturbation_oracle_matches_evaluation() {
        let (mesh, ann, extras) = generate_jaw(&SynthConfig {
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let spec = PerturbSpec {
            operations: vec![
                PerturbOp::JitterInstance {
                    i: 2,
                    displacement: 0.3 * extras.sizes[1],
                },
                PerturbOp::DropTooth { i: 5 },
                PerturbOp::Relabel { i: 7, new_label: 48 },
                PerturbOp::ErodeInstance { i: 9, fraction: 0.25 },
                PerturbOp::SwapLabels { i: 11, j: 12 },
            ],
        };
        let (pm, pa, expected) = perturb(&mesh, &ann, &spec, 17).unwrap();
        let got = eval_against_source(&mesh, &ann, &pm, &pa);
        assert_eq!(got.len(), expected.teeth.len());
        for (g, e) in got.iter().zip(&expected.teeth) {
            assert_eq!(g.gt_instance_id, e.gt_instance_id);
            assert!(
                (g.normalized_distance - e.normalized_distance).abs() < 1e-9,
                "instance {}: {} vs {}",
                g.gt_instance_id,
                g.normalized_distance,
                e.normalized_distance
            );
            assert!((g.f1 - e.f1).abs() < 1e-9);
            assert_eq!(g.identified, e.identified);
        }
    }

    #[test]
    fn jitter_expected_distance_is_exact() {
        let (mesh, ann, extras) = generate_jaw(&SynthConfig::default()).unwrap();
        let d = 0.2 * extras.sizes[3];
        let spec = PerturbSpec {
            operations: vec![PerturbOp::JitterInstance { i: 4, displacement: d }],
        };
        let (_, _, expected) = perturb(&mesh, &ann, &spec, 5).unwrap();
        let t = &expected.teeth[3];
        assert!((t.normalized_distance - 0.2).abs() < 1e-9);
        assert!(t.identified, "0.2 of size is under the half-size bound");
        assert_eq!(t.f1, 1.0);
    }

    #[test]
    fn relabel_flips_identified_only() {
        let (mesh, ann, _) = generate_jaw(&SynthConfig::default()).unwrap();
        let spec = PerturbSpec {
            operations: vec![PerturbOp::Relabel { i: 1, new_label: 38 }],
        };
        let (_, _, expected) = perturb(&mesh, &ann, &spec, 5).unwrap();
        assert!(!expected.teeth[0].identified);
        assert_eq!(expected.teeth[0].normalized_distance, 0.0);
        assert_eq!(expected.teeth[0].f1, 1.0);
        assert!(expected.teeth[1..].iter().all(|t| t.identified));
    }

    #[test]
    fn bad_instance_reference_errors() {
        let (mesh, ann, _) = generate_jaw(&SynthConfig::default()).unwrap();
        let spec = PerturbSpec {
            operations: vec![PerturbOp::DropTooth { i: 99 }],
        };
        assert!(matches!(
            perturb(&mesh, &ann, &spec, 0),
            Err(SynthError::BadInstance(99, 14))
        ));
    }
}
