//! Per-image pipeline: pose, align, downsample, enhance, extract.

use crate::descriptor::{describe_baseline, DenseDescriptor};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::pose::{
    align_to_canonical, downsample_half, estimate_pose_baseline, segment_foreground, Pose2D, CANONICAL_SIZE,
};
use crate::synth::{degrade, histogram_match, DegradationRecipe};

use super::config::Enhancement;

/// Smallest accepted input side.
pub const MIN_INPUT_SIDE: usize = 64;

/// An [`Enhancement`] with its reference image or recipe loaded.
#[derive(Clone, Debug)]
pub enum LoadedEnhancement {
    Clean,
    HistMatch(GrayImage),
    Recipe(DegradationRecipe),
}

impl LoadedEnhancement {
    pub fn load(e: &Enhancement) -> Result<LoadedEnhancement> {
        Ok(match e {
            Enhancement::Clean => LoadedEnhancement::Clean,
            Enhancement::HistMatch(p) => LoadedEnhancement::HistMatch(GrayImage::load(p)?),
            Enhancement::Recipe(p) => LoadedEnhancement::Recipe(DegradationRecipe::load(p)?),
        })
    }

    /// Applies to an aligned 256x256 image.
    pub fn apply(&self, image: &GrayImage) -> Result<GrayImage> {
        match self {
            LoadedEnhancement::Clean => Ok(image.clone()),
            LoadedEnhancement::HistMatch(reference) => Ok(histogram_match(image, reference)),
            LoadedEnhancement::Recipe(r) => degrade(image, r),
        }
    }
}

/// Size guard plus a segmented foreground for images read from disk.
pub fn prepare(mut image: GrayImage) -> Result<GrayImage> {
    if image.width() < MIN_INPUT_SIDE || image.height() < MIN_INPUT_SIDE {
        return Err(Error::InvalidArgument(format!(
            "image is {}x{}, smaller than {MIN_INPUT_SIDE}px",
            image.width(),
            image.height()
        )));
    }
    if image.foreground().is_none() {
        let fg = segment_foreground(&image);
        image.set_foreground(Some(fg))?;
    }
    Ok(image)
}

/// Baseline pose of a prepared image.
pub fn baseline_pose(image: &GrayImage) -> Result<Pose2D> {
    estimate_pose_baseline(image)
}

/// Aligns at `pose`, downsamples to the extractor input, enhances, extracts.
pub fn describe_at_pose(image: &GrayImage, pose: &Pose2D, enhance: &LoadedEnhancement) -> Result<DenseDescriptor> {
    let aligned = downsample_half(&align_to_canonical(image, pose, CANONICAL_SIZE)?)?;
    describe_baseline(&enhance.apply(&aligned)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_synthetic_fingerprint;

    #[test]
    fn tiny_image_rejected() {
        assert!(prepare(GrayImage::filled(63, 100, 255)).is_err());
    }

    #[test]
    fn clean_mask_fraction_in_band() {
        let p = generate_synthetic_fingerprint(3, 512).unwrap();
        let mut img = p.image.clone();
        img.take_foreground();
        let img = prepare(img).unwrap();
        let d = describe_at_pose(&img, &p.pose, &LoadedEnhancement::Clean).unwrap();
        let f = d.mask_fraction();
        assert!((0.2..=0.9).contains(&f), "mask fraction {f}");
    }
}
