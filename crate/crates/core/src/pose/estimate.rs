use crate::error::{Error, Result};
use crate::image::{GrayImage, Mask, BACKGROUND};

use super::Pose2D;

const WINDOW: usize = 16;
const STD_THRESHOLD: f64 = 12.0;
const CLOSING_RADIUS: usize = 4;

/// Foreground by local contrast: a pixel is foreground when the standard
/// deviation of the 16x16 window anchored on it exceeds 12 levels, followed
/// by one square closing. Off-canvas samples read as background white, so
/// the result is exactly translation-equivariant for prints clear of the
/// border.
pub fn segment_foreground(image: &GrayImage) -> Mask {
    let (w, h) = (image.width(), image.height());
    let half = (WINDOW / 2) as isize;
    // Integral images over a canvas padded by the window on every side.
    let pw = w + 2 * WINDOW + 1;
    let ph = h + 2 * WINDOW + 1;
    let mut sum = vec![0u64; pw * ph];
    let mut sq = vec![0u64; pw * ph];
    for py in 1..ph {
        let mut row_s = 0u64;
        let mut row_q = 0u64;
        for px in 1..pw {
            let v =
                image.get_or_background(px as isize - 1 - WINDOW as isize, py as isize - 1 - WINDOW as isize) as u64;
            row_s += v;
            row_q += v * v;
            sum[py * pw + px] = sum[(py - 1) * pw + px] + row_s;
            sq[py * pw + px] = sq[(py - 1) * pw + px] + row_q;
        }
    }
    let rect = |t: &[u64], x0: usize, y0: usize, x1: usize, y1: usize| {
        t[y1 * pw + x1] + t[y0 * pw + x0] - t[y0 * pw + x1] - t[y1 * pw + x0]
    };
    let n = (WINDOW * WINDOW) as f64;
    let raw = Mask::from_fn(w, h, |x, y| {
        // Window covers [x - 8, x + 8) in image coordinates.
        let x0 = (x as isize - half + WINDOW as isize) as usize;
        let y0 = (y as isize - half + WINDOW as isize) as usize;
        let (x1, y1) = (x0 + WINDOW, y0 + WINDOW);
        let s = rect(&sum, x0, y0, x1, y1) as f64;
        let q = rect(&sq, x0, y0, x1, y1) as f64;
        let var = (q / n - (s / n).powi(2)).max(0.0);
        var.sqrt() > STD_THRESHOLD
    });
    raw.close(CLOSING_RADIUS)
}

/// Moment-based pose: centroid of the foreground and the direction of its
/// principal axis, reported modulo 180 in `[-90, 90)`. Near-isotropic
/// foregrounds (eigenvalues within 1%) get orientation 0.
pub fn estimate_pose_baseline(image: &GrayImage) -> Result<Pose2D> {
    let owned;
    let mask = match image.foreground() {
        Some(m) if !m.is_empty() => m,
        _ => {
            if image.pixels().iter().all(|&v| v == BACKGROUND) {
                return Err(Error::NoForeground);
            }
            owned = segment_foreground(image);
            &owned
        }
    };
    let (mut n, mut sx, mut sy) = (0u64, 0u64, 0u64);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                n += 1;
                sx += x as u64;
                sy += y as u64;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoForeground);
    }
    let cx = sx as f64 / n as f64;
    let cy = sy as f64 / n as f64;
    let (mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                mxx += dx * dx;
                myy += dy * dy;
                mxy += dx * dy;
            }
        }
    }
    let nf = n as f64;
    let (mxx, myy, mxy) = (mxx / nf, myy / nf, mxy / nf);
    let tr = mxx + myy;
    let disc = ((mxx - myy).powi(2) + 4.0 * mxy * mxy).sqrt();
    let l_max = 0.5 * (tr + disc);
    let l_min = 0.5 * (tr - disc);
    if l_max <= 0.0 || l_max - l_min <= 0.01 * l_max {
        return Pose2D::new(cx, cy, 0.0);
    }
    // Major-axis direction in image coordinates.
    let phi = 0.5 * (2.0 * mxy).atan2(mxx - myy);
    let (vx, vy) = (phi.cos(), phi.sin());
    // Pose direction (-sin t, -cos t) parallel to (vx, vy).
    let theta = (-vx).atan2(-vy).to_degrees();
    let theta = (theta + 90.0).rem_euclid(180.0) - 90.0;
    Pose2D::new(cx, cy, theta)
}
