//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use densefp::descriptor::{describe_baseline, DenseDescriptor};
use densefp::pose::{align_to_canonical, downsample_half, Pose2D, CANONICAL_SIZE};
use densefp::GrayImage;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Channels of a full descriptor (two branches of six).
pub const CHANNELS: usize = 12;
pub const GRID: usize = 16;

/// Random descriptor with a uniform soft mask; unmasked cells are zero.
pub fn random_descriptor(rng: &mut impl Rng, channels: usize, h: usize, w: usize) -> DenseDescriptor {
    let mask: Vec<f32> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
    with_mask(rng, channels, h, w, mask)
}

/// Random normal values on the cells where `mask` binarizes to foreground.
pub fn with_mask(rng: &mut impl Rng, channels: usize, h: usize, w: usize, mask: Vec<f32>) -> DenseDescriptor {
    let cells = h * w;
    let values = (0..channels * cells)
        .map(|k| {
            if mask[k % cells] >= 0.5 {
                StandardNormal.sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    DenseDescriptor::new(channels, h, w, values, mask).unwrap()
}

/// Values on the grid `k / 64`, `|k| <= 256`: products with small integers
/// and powers of two stay exact in f32.
pub fn dyadic_descriptor(rng: &mut impl Rng, channels: usize, h: usize, w: usize) -> DenseDescriptor {
    let cells = h * w;
    let mask: Vec<f32> = (0..cells).map(|_| rng.gen_range(0..=4) as f32 / 4.0).collect();
    let values = (0..channels * cells)
        .map(|k| {
            if mask[k % cells] >= 0.5 {
                rng.gen_range(-256i32..=256) as f32 / 64.0
            } else {
                0.0
            }
        })
        .collect();
    DenseDescriptor::new(channels, h, w, values, mask).unwrap()
}

/// Align at `pose`, downsample, extract.
pub fn describe(image: &GrayImage, pose: &Pose2D) -> DenseDescriptor {
    let aligned = align_to_canonical(image, pose, CANONICAL_SIZE).unwrap();
    describe_baseline(&downsample_half(&aligned).unwrap()).unwrap()
}

pub fn canvas_center() -> Pose2D {
    let c = CANONICAL_SIZE as f64 / 2.0;
    Pose2D::new(c, c, 0.0).unwrap()
}
