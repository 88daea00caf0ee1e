//! Synthetic prints with known pose, plus the degradation and augmentation
//! recipes used to build paired clean/degraded data.

mod degrade;
mod distort;
mod generate;
mod histogram;
mod incomplete;

pub use degrade::{degrade, digit_strokes, line_segments, DegradationRecipe, Overlay, Segment};
pub use distort::{apply_elastic_distortion, DistortionField, FIELD_STRIDE};
pub use generate::{
    generate_synthetic_fingerprint, generate_synthetic_impression, render, RidgePattern, SyntheticPrint,
};
pub use histogram::{histogram_match, histogram_match_lut};
pub use incomplete::{simulate_incomplete, simulate_incomplete_with, MAGNITUDE_RANGE, SHIFT_RANGE};
