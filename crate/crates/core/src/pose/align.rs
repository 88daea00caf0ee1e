use crate::error::{Error, Result};
use crate::filters::to_u8;
use crate::image::{GrayImage, Mask, BACKGROUND};

use super::Pose2D;

/// Side of the aligned crop fed to the downsampler.
pub const CANONICAL_SIZE: usize = 512;

/// Rotation taking canonical offsets to source offsets for a finger turned
/// `theta` degrees counter-clockwise on screen.
#[inline]
fn rotation(theta_deg: f64) -> (f64, f64) {
    let t = theta_deg.to_radians();
    (t.cos(), t.sin())
}

/// Resamples `image` into an `out_size` square canvas whose center is the
/// pose center and whose "up" is the pose direction.
///
/// Intensities are bilinear with `BACKGROUND` fill; the foreground mask, when
/// present, is resampled nearest-neighbour with fill 0.
pub fn align_to_canonical(image: &GrayImage, pose: &Pose2D, out_size: usize) -> Result<GrayImage> {
    if image.is_empty() {
        return Err(Error::InvalidArgument("cannot align an empty image".into()));
    }
    if out_size < 32 {
        return Err(Error::InvalidArgument(format!("out_size {out_size} < 32")));
    }
    check_pose(pose)?;
    let half = out_size as f64 / 2.0;
    Ok(resample(image, out_size, out_size, |u, v| {
        let (c, s) = rotation(pose.theta());
        let (ox, oy) = (u - half, v - half);
        (pose.cx() + c * ox + s * oy, pose.cy() - s * ox + c * oy)
    }))
}

/// Inverse of [`align_to_canonical`] on a same-size canvas: places the
/// canvas-centered content of `canonical` at `pose`.
pub fn transform_by_pose(canonical: &GrayImage, pose: &Pose2D) -> Result<GrayImage> {
    check_pose(pose)?;
    let (hw, hh) = (canonical.width() as f64 / 2.0, canonical.height() as f64 / 2.0);
    Ok(resample(canonical, canonical.width(), canonical.height(), |x, y| {
        let (c, s) = rotation(pose.theta());
        let (dx, dy) = (x - pose.cx(), y - pose.cy());
        // Transpose of the alignment rotation.
        (hw + c * dx - s * dy, hh + s * dx + c * dy)
    }))
}

/// Rotates the image content by `deg` (counter-clockwise on screen) about the
/// canvas center.
pub fn rotate_about_center(image: &GrayImage, deg: f64) -> Result<GrayImage> {
    let pose = Pose2D::new(image.width() as f64 / 2.0, image.height() as f64 / 2.0, deg)?;
    transform_by_pose(image, &pose)
}

fn check_pose(pose: &Pose2D) -> Result<()> {
    if pose.cx().is_finite() && pose.cy().is_finite() && pose.theta().is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPose(format!("{pose:?}")))
    }
}

fn resample(src: &GrayImage, out_w: usize, out_h: usize, map: impl Fn(f64, f64) -> (f64, f64)) -> GrayImage {
    let mut out = GrayImage::filled(out_w, out_h, BACKGROUND);
    let mut mask = src.foreground().map(|_| Mask::new(out_w, out_h));
    for v in 0..out_h {
        for u in 0..out_w {
            let (sx, sy) = map(u as f64, v as f64);
            if sx <= -1.0 || sy <= -1.0 || sx >= src.width() as f64 || sy >= src.height() as f64 {
                continue;
            }
            out.set(u, v, to_u8(src.sample_bilinear(sx, sy)));
            if let (Some(m), Some(fg)) = (mask.as_mut(), src.foreground()) {
                let (nx, ny) = ((sx + 0.5).floor(), (sy + 0.5).floor());
                if nx >= 0.0 && ny >= 0.0 && (nx as usize) < src.width() && (ny as usize) < src.height() {
                    m.set(u, v, fg.get(nx as usize, ny as usize));
                }
            }
        }
    }
    let out = out.with_ppi(src.ppi()).expect("source ppi is valid");
    match mask {
        Some(m) => out.with_foreground(m).expect("mask sized to output"),
        None => out,
    }
}

/// 2x2 box-average downsampling of a 512x512 aligned crop (round half up);
/// the mask keeps a cell only when all four pixels are set.
pub fn downsample_half(image: &GrayImage) -> Result<GrayImage> {
    if image.width() != CANONICAL_SIZE || image.height() != CANONICAL_SIZE {
        return Err(Error::SizeMismatch(format!(
            "downsample expects {CANONICAL_SIZE}x{CANONICAL_SIZE}, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let n = CANONICAL_SIZE / 2;
    let out = GrayImage::from_fn(n, n, |x, y| {
        let s = image.get(2 * x, 2 * y) as u32
            + image.get(2 * x + 1, 2 * y) as u32
            + image.get(2 * x, 2 * y + 1) as u32
            + image.get(2 * x + 1, 2 * y + 1) as u32;
        ((s + 2) / 4) as u8
    });
    let out = out.with_ppi(image.ppi() / 2.0)?;
    match image.foreground() {
        Some(fg) => out.with_foreground(Mask::from_fn(n, n, |x, y| {
            fg.get(2 * x, 2 * y) && fg.get(2 * x + 1, 2 * y) && fg.get(2 * x, 2 * y + 1) && fg.get(2 * x + 1, 2 * y + 1)
        })),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 251) as u8)
    }

    #[test]
    fn identity_pose_is_byte_equal() {
        let img = gradient_image(512, 512);
        let pose = Pose2D::new(256.0, 256.0, 0.0).unwrap();
        let out = align_to_canonical(&img, &pose, 512).unwrap();
        assert_eq!(out.pixels(), img.pixels());
    }

    #[test]
    fn corner_pose_places_upper_left_quadrant_at_center() {
        let img = gradient_image(100, 100);
        let pose = Pose2D::new(0.0, 0.0, 0.0).unwrap();
        let out = align_to_canonical(&img, &pose, 100).unwrap();
        for y in 0..100 {
            for x in 0..100 {
                let v = out.get(x, y);
                if x >= 50 && y >= 50 {
                    assert_eq!(v, img.get(x - 50, y - 50));
                } else {
                    assert_eq!(v, BACKGROUND, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn finger_direction_maps_up() {
        // A dark dot 40 px to the left of center; a finger rotated 90 deg CCW
        // points left, so after alignment the dot sits above the center.
        let mut img = GrayImage::filled(200, 200, 255);
        img.set(60, 100, 0);
        let pose = Pose2D::new(100.0, 100.0, 90.0).unwrap();
        let out = align_to_canonical(&img, &pose, 200).unwrap();
        assert_eq!(out.get(100, 60), 0);
    }

    #[test]
    fn transform_then_align_round_trips_interior() {
        let img = GrayImage::from_fn(128, 128, |x, y| {
            (128.0 + 100.0 * ((x as f64) * 0.2).sin() * ((y as f64) * 0.15).cos()) as u8
        });
        let pose = Pose2D::new(70.0, 60.0, 25.0).unwrap();
        let moved = transform_by_pose(&img, &pose).unwrap();
        let back = align_to_canonical(&moved, &pose, 128).unwrap();
        let mut sum = 0.0;
        let mut n = 0.0;
        for y in 40..88 {
            for x in 40..88 {
                sum += (back.get(x, y) as f64 - img.get(x, y) as f64).abs();
                n += 1.0;
            }
        }
        assert!(sum / n < 3.0, "mean abs diff {}", sum / n);
    }

    #[test]
    fn mask_stays_binary_and_follows() {
        let img = GrayImage::filled(64, 64, 0)
            .with_foreground(Mask::from_fn(64, 64, |x, _| x < 32))
            .unwrap();
        let pose = Pose2D::new(32.0, 32.0, 180.0).unwrap();
        let out = align_to_canonical(&img, &pose, 64).unwrap();
        let m = out.foreground().unwrap();
        assert!(m.get(60, 32) && !m.get(3, 32));
    }

    #[test]
    fn downsample_rules() {
        let img = GrayImage::filled(512, 512, 128);
        let d = downsample_half(&img).unwrap();
        assert_eq!((d.width(), d.height()), (256, 256));
        assert!(d.pixels().iter().all(|&v| v == 128));

        let mut img = GrayImage::filled(512, 512, 0);
        img.set(0, 1, 255);
        img.set(1, 1, 255);
        let mut mask = Mask::filled(512, 512);
        mask.set(1, 1, false);
        let d = downsample_half(&img.with_foreground(mask).unwrap()).unwrap();
        assert_eq!(d.get(0, 0), 128);
        let m = d.foreground().unwrap();
        assert!(!m.get(0, 0));
        assert!(m.get(1, 0));
    }

    #[test]
    fn downsample_wrong_size() {
        let img = GrayImage::filled(500, 512, 0);
        assert!(matches!(downsample_half(&img), Err(Error::SizeMismatch(_))));
    }

    #[test]
    fn out_size_guard() {
        let img = GrayImage::filled(64, 64, 0);
        let pose = Pose2D::new(1.0, 1.0, 0.0).unwrap();
        assert!(align_to_canonical(&img, &pose, 16).is_err());
    }
}
