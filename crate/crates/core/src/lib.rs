//! Geometry, evaluation and post-processing toolkit for intra-oral 3D scan
//! segmentation: challenge-format I/O, the annotation pipeline (cleanup, pose
//! normalization, harmonic flattening, boundary back-projection), the
//! localization/segmentation/identification metrics, a library of classical
//! post-processing algorithms, published loss formulas, and a deterministic
//! synthetic jaw generator used as the test bed.

pub mod annotation;
pub mod diagnostics;
pub mod instances;
pub mod losses;
pub mod mesh;
pub mod metrics;
pub mod curvature;
pub mod obj;
pub mod postproc;
pub mod preprocess;
pub mod sparse;
pub mod synth_shapes;
pub mod synthgen;
pub mod uvflatten;

pub use annotation::{Jaw, ScanAnnotation};
pub use diagnostics::{Diagnostic, Diagnostics, Severity};
pub use instances::{SizeDefinition, ToothInstance};
pub use mesh::TriMesh;
