use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Mask, BACKGROUND};
use crate::pose::Pose2D;

/// A generated print with its ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticPrint {
    pub image: GrayImage,
    pub pose: Pose2D,
    pub mask: Mask,
    /// Nominal ridge period in pixels.
    pub period: f64,
}

/// Ridge pattern defined in the finger's own frame (x right, y toward the
/// fingertip is negative), so every rendering of it shares one identity.
#[derive(Clone, Debug)]
pub struct RidgePattern {
    period: f64,
    direction: (f64, f64),
    whorl_weight: f64,
    whorl_center: (f64, f64),
    waves: Vec<Wave>,
    vortices: Vec<Vortex>,
    ridge_level: f64,
    valley_level: f64,
}

#[derive(Clone, Debug)]
struct Wave {
    amplitude: f64,
    k: (f64, f64),
    phase: f64,
}

#[derive(Clone, Debug)]
struct Vortex {
    at: (f64, f64),
    charge: f64,
}

impl RidgePattern {
    pub fn random(rng: &mut impl Rng, extent: f64) -> RidgePattern {
        let period = rng.gen_range(7.0..=11.0);
        let alpha = rng.gen_range(0.0..PI);
        let waves = (0..3)
            .map(|_| {
                let len = rng.gen_range(120.0..300.0);
                let dir = rng.gen_range(0.0..TAU);
                Wave {
                    amplitude: rng.gen_range(0.0..2.5),
                    k: (dir.cos() * TAU / len, dir.sin() * TAU / len),
                    phase: rng.gen_range(0.0..TAU),
                }
            })
            .collect();
        let n_singular = rng.gen_range(0..=2);
        let vortices = (0..n_singular)
            .map(|_| Vortex {
                at: (rng.gen_range(-0.4..0.4) * extent, rng.gen_range(-0.5..0.5) * extent),
                charge: if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            })
            .collect();
        RidgePattern {
            period,
            direction: (alpha.cos(), alpha.sin()),
            whorl_weight: rng.gen_range(0.0..0.3),
            whorl_center: (rng.gen_range(-0.2..0.2) * extent, rng.gen_range(-0.3..0.1) * extent),
            waves,
            vortices,
            ridge_level: rng.gen_range(20.0..50.0),
            valley_level: rng.gen_range(220.0..245.0),
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Ridge phase at finger-frame coordinates.
    pub fn phase(&self, qx: f64, qy: f64) -> f64 {
        let lin = qx * self.direction.0 + qy * self.direction.1;
        let r = (qx - self.whorl_center.0).hypot(qy - self.whorl_center.1);
        let mut ph = TAU / self.period * ((1.0 - self.whorl_weight) * lin + self.whorl_weight * r);
        for w in &self.waves {
            ph += w.amplitude * (w.k.0 * qx + w.k.1 * qy + w.phase).sin();
        }
        for v in &self.vortices {
            ph += v.charge * (qy - v.at.1).atan2(qx - v.at.0);
        }
        ph
    }

    /// Intensity of the soft-thresholded sinusoid at finger-frame coordinates.
    pub fn intensity(&self, qx: f64, qy: f64) -> f64 {
        let v = self.phase(qx, qy).cos();
        let ink = ((v + 0.25) / 0.5).clamp(0.0, 1.0);
        self.valley_level - ink * (self.valley_level - self.ridge_level)
    }
}

/// Renders a random ridge pattern inside an elliptical foreground.
///
/// The returned pose is the ellipse center with orientation along the long
/// axis; the generator always picks the sign pointing into the upper half
/// plane, `theta` in `[-30, 30]`.
pub fn generate_synthetic_fingerprint(seed: u64, size: usize) -> Result<SyntheticPrint> {
    generate_impression(seed, size, None)
}

/// Another impression of finger `seed`: the same ridge pattern and outline
/// rendered at `pose` instead of the generator's own pose.
pub fn generate_synthetic_impression(seed: u64, size: usize, pose: &Pose2D) -> Result<SyntheticPrint> {
    generate_impression(seed, size, Some(*pose))
}

fn generate_impression(seed: u64, size: usize, pose: Option<Pose2D>) -> Result<SyntheticPrint> {
    if size < 128 {
        return Err(Error::InvalidArgument(format!("synthetic size {size} < 128")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let cx = s / 2.0 + rng.gen_range(-0.06..0.06) * s;
    let cy = s / 2.0 + rng.gen_range(-0.06..0.06) * s;
    let theta = rng.gen_range(-30.0..=30.0);
    let semi_long = s * rng.gen_range(0.34..0.40);
    let semi_short = semi_long * rng.gen_range(0.62..0.78);
    let pattern = RidgePattern::random(&mut rng, semi_long);
    let pose = match pose {
        Some(p) => p,
        None => Pose2D::new(cx, cy, theta)?,
    };
    let (image, mask) = render(&pattern, &pose, size, semi_short, semi_long);
    Ok(SyntheticPrint {
        image: image.with_foreground(mask.clone())?,
        pose,
        mask,
        period: pattern.period(),
    })
}

/// Renders `pattern` in an ellipse placed at `pose` on a `size` canvas.
pub fn render(
    pattern: &RidgePattern,
    pose: &Pose2D,
    size: usize,
    semi_short: f64,
    semi_long: f64,
) -> (GrayImage, Mask) {
    let (c, s) = {
        let t = pose.theta().to_radians();
        (t.cos(), t.sin())
    };
    let to_finger = |x: f64, y: f64| {
        let (dx, dy) = (x - pose.cx(), y - pose.cy());
        (c * dx - s * dy, s * dx + c * dy)
    };
    let mask = Mask::from_fn(size, size, |x, y| {
        let (qx, qy) = to_finger(x as f64, y as f64);
        (qx / semi_short).powi(2) + (qy / semi_long).powi(2) <= 1.0
    });
    let image = GrayImage::from_fn(size, size, |x, y| {
        if !mask.get(x, y) {
            return BACKGROUND;
        }
        let (qx, qy) = to_finger(x as f64, y as f64);
        crate::filters::to_u8(pattern.intensity(qx, qy))
    });
    (image, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic_fingerprint(7, 256).unwrap();
        let b = generate_synthetic_fingerprint(7, 256).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.pose, b.pose);
    }

    #[test]
    fn seeds_differ_on_foreground() {
        let a = generate_synthetic_fingerprint(1, 256).unwrap();
        let b = generate_synthetic_fingerprint(2, 256).unwrap();
        let fg = a.mask.and(&b.mask).unwrap();
        let mut diff = 0usize;
        for y in 0..256 {
            for x in 0..256 {
                if fg.get(x, y) && a.image.get(x, y).abs_diff(b.image.get(x, y)) > 20 {
                    diff += 1;
                }
            }
        }
        assert!(diff as f64 > 0.1 * fg.count() as f64);
    }

    #[test]
    fn impression_at_own_pose_is_identical() {
        let a = generate_synthetic_fingerprint(5, 256).unwrap();
        let b = generate_synthetic_impression(5, 256, &a.pose).unwrap();
        assert_eq!(a.image, b.image);
        let moved = a.pose.perturb(10.0, -4.0, 12.0).unwrap();
        let c = generate_synthetic_impression(5, 256, &moved).unwrap();
        assert_eq!(c.pose, moved);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn size_guard() {
        assert!(generate_synthetic_fingerprint(0, 64).is_err());
    }

    #[test]
    fn foreground_fraction_at_128() {
        for seed in 0..100 {
            let p = generate_synthetic_fingerprint(seed, 128).unwrap();
            let f = p.mask.count() as f64 / (128.0 * 128.0);
            assert!((0.2..=0.8).contains(&f), "seed {seed}: {f}");
        }
    }

    #[test]
    fn pose_inside_canvas_and_range() {
        for seed in 0..20 {
            let p = generate_synthetic_fingerprint(seed, 512).unwrap();
            assert!(p.pose.theta().abs() <= 30.0);
            assert!((7.0..=11.0).contains(&p.period));
            assert!(p.mask.get(p.pose.cx() as usize, p.pose.cy() as usize));
        }
    }
}
