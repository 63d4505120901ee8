//! Benchmarks for the hot paths: scan evaluation, harmonic flattening,
//! clustering, and random-walker labeling.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use dentalscan_bench::sample_jaw;
use dentalscan_core::metrics::{evaluate_scan, EvalConfig};
use dentalscan_core::postproc::{convexity_feature, dbscan, density_peaks, random_walker};
use dentalscan_core::synth_shapes::icosphere;
use dentalscan_core::uvflatten::{crop_sphere, harmonic_flatten};
use nalgebra::Point3;
use std::collections::BTreeMap;

fn bench_evaluate(c: &mut Criterion) {
    let (mesh, ann, _) = sample_jaw(1);
    c.bench_function("evaluate_scan self 14 teeth", |b| {
        b.iter(|| evaluate_scan(&mesh, &ann, Some(black_box(&ann)), EvalConfig::default()))
    });
}

fn bench_flatten(c: &mut Criterion) {
    // Dense spherical cap: a level-4 sphere cropped around a surface point.
    let mesh = icosphere(2.0, 4);
    let sub = crop_sphere(&mesh, Point3::new(0.0, 0.0, -2.0), 1.6).expect("cap crop");
    c.bench_function(
        &format!("harmonic_flatten {} vertices", sub.mesh.vertex_count()),
        |b| b.iter(|| harmonic_flatten(black_box(&sub)).unwrap()),
    );
}

fn bench_clustering(c: &mut Criterion) {
    let (mesh, ann, extras) = sample_jaw(3);
    let points: Vec<Point3<f64>> = mesh
        .vertices
        .iter()
        .zip(&extras.offsets)
        .map(|(p, o)| p + o)
        .collect();
    c.bench_function(&format!("dbscan {} points", points.len()), |b| {
        b.iter(|| dbscan(black_box(&points), 0.5, 5))
    });
    let centroid_cloud: Vec<Point3<f64>> = ann
        .instances
        .iter()
        .zip(&points)
        .filter(|&(&i, _)| i != 0)
        .map(|(_, p)| *p)
        .take(400)
        .collect();
    c.bench_function("density_peaks 400 points k=14", |b| {
        b.iter(|| density_peaks(black_box(&centroid_cloud), 1.0, 14))
    });
}

fn bench_walker(c: &mut Criterion) {
    let mesh = icosphere(2.0, 3);
    let feature = convexity_feature(&mesh);
    let n = mesh.vertex_count();
    let seeds: BTreeMap<usize, u32> = [(0, 1), (n / 3, 2), (2 * n / 3, 3)].into();
    c.bench_function(&format!("random_walker {n} vertices 3 labels"), |b| {
        b.iter(|| random_walker(black_box(&mesh), &seeds, &feature, 1.0).unwrap())
    });
}

criterion_group!(
    benches,
    bench_evaluate,
    bench_flatten,
    bench_clustering,
    bench_walker
);
criterion_main!(benches);
