//! Classical post-processing algorithms used around neural tooth
//! segmentation pipelines: clustering, face-label field repair, point
//! sampling, arch-curve label correction, proposal merging and random-walker
//! labeling. Everything is deterministic; ties break toward smaller
//! indices/labels.

pub mod arch;
pub mod clustering;
pub mod labels;
pub mod proposals;
pub mod sampling;
pub mod walker;

pub use arch::{arch_label_correct, fit_arch_curve, ArchCurve, ArchError};
pub use clustering::{dbscan, density_peaks, offset_shift_cluster, NOISE};
pub use labels::{
    island_removal, label_closing, majority_vote_fusion, LabelFieldError, LabeledFaceField,
    UNASSIGNED,
};
pub use proposals::{merge_proposals, Proposal};
pub use sampling::{
    boundary_aware_sample, farthest_point_sampling, grid_subsample, knn_label_vote,
    knn_logit_interpolate,
};
pub use walker::{convexity_feature, random_walker, random_walker_graph, WalkerError};
