use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Mask, BACKGROUND};
use crate::pose::segment_foreground;

use super::distort::DistortionField;

/// Elastic magnitude range (pixels) drawn per call.
pub const MAGNITUDE_RANGE: (f64, f64) = (1.0, 4.0);
/// Global intensity shift range (levels) drawn per call.
pub const SHIFT_RANGE: (i32, i32) = (-20, 20);

/// Cuts a rolled print down to a plain-print footprint, then warps it and
/// shifts its foreground intensities, with parameters drawn from `seed`.
pub fn simulate_incomplete(rolled: &GrayImage, plain_mask: &Mask, seed: u64) -> Result<(GrayImage, Mask)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = rng.gen_range(MAGNITUDE_RANGE.0..=MAGNITUDE_RANGE.1);
    let shift = rng.gen_range(SHIFT_RANGE.0..=SHIFT_RANGE.1);
    let field_seed = rng.gen::<u64>();
    simulate_incomplete_with(rolled, plain_mask, magnitude, shift, field_seed)
}

/// Explicit-parameter form of [`simulate_incomplete`].
pub fn simulate_incomplete_with(
    rolled: &GrayImage,
    plain_mask: &Mask,
    magnitude: f64,
    shift: i32,
    field_seed: u64,
) -> Result<(GrayImage, Mask)> {
    if plain_mask.width() != rolled.width() || plain_mask.height() != rolled.height() {
        return Err(Error::SizeMismatch(format!(
            "plain mask {}x{} vs rolled {}x{}",
            plain_mask.width(),
            plain_mask.height(),
            rolled.width(),
            rolled.height()
        )));
    }
    let rolled_fg = match rolled.foreground() {
        Some(m) => m.clone(),
        None => segment_foreground(rolled),
    };
    let overlap = rolled_fg.and(plain_mask)?;
    if overlap.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    let mut cut = GrayImage::from_fn(rolled.width(), rolled.height(), |x, y| {
        if plain_mask.get(x, y) {
            rolled.get(x, y)
        } else {
            BACKGROUND
        }
    })
    .with_ppi(rolled.ppi())?;
    cut.set_foreground(Some(overlap))?;
    let field = DistortionField::random(rolled.width(), rolled.height(), field_seed, magnitude)?;
    let mut warped = field.warp(&cut);
    let mask = warped.take_foreground().expect("foreground carried through warp");
    for (v, &on) in warped.pixels_mut().iter_mut().zip(mask.data()) {
        *v = if on != 0 {
            (*v as i32 + shift).clamp(0, 255) as u8
        } else {
            BACKGROUND
        };
    }
    Ok((warped.with_foreground(mask.clone())?, mask))
}
