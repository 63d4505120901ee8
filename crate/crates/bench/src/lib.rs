//! Shared fixtures for the criterion benchmarks.

use dentalscan_core::synthgen::{generate_jaw, GroundTruthExtras, SynthConfig};
use dentalscan_core::{ScanAnnotation, TriMesh};

/// A mid-size deterministic jaw scan (14 teeth, level-2 spheres).
pub fn sample_jaw(seed: u64) -> (TriMesh, ScanAnnotation, GroundTruthExtras) {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    generate_jaw(&cfg).expect("default config is valid")
}
