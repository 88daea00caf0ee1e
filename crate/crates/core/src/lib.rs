//! Fixed-length dense fingerprint descriptors.
//!
//! Pipeline: estimate a 2D pose, align the print to a canonical 512x512
//! frame, downsample to 256x256, extract a masked `channels x 16 x 16`
//! descriptor, and compare descriptors by masked cosine with max-fusion over
//! variants. Synthetic prints and degradations stand in for real datasets;
//! [`eval`] turns score sets into Rank-1, TAR@FAR, DET and CMC numbers.

pub mod cli;
pub mod descriptor;
pub mod error;
pub mod eval;
pub mod filters;
pub mod image;
pub mod matching;
pub mod pose;
pub mod synth;

pub use descriptor::{assemble_descriptor, describe_baseline, BranchFeatures, DenseDescriptor};
pub use error::{Error, Result};
pub use image::{GrayImage, Mask};
pub use matching::{fuse_scores, match_score, GalleryIndex, MatchResult};
pub use pose::{align_to_canonical, estimate_pose_baseline, Pose2D};
