//! 2D fingerprint pose and canonical alignment.
//!
//! Orientation is measured in degrees, counter-clockwise positive as seen on
//! screen (image y axis points down), with 0 meaning the finger points up.

mod align;
mod estimate;
mod file;

pub use align::{align_to_canonical, downsample_half, rotate_about_center, transform_by_pose, CANONICAL_SIZE};
pub use estimate::{estimate_pose_baseline, segment_foreground};
pub use file::{read_pose_file, write_pose_file, PoseTable};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2D {
    cx: f64,
    cy: f64,
    theta: f64,
}

impl Pose2D {
    pub fn new(cx: f64, cy: f64, theta: f64) -> Result<Self> {
        if !(cx.is_finite() && cy.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidPose(format!("({cx}, {cy}, {theta})")));
        }
        Ok(Pose2D {
            cx,
            cy,
            theta: normalize_angle(theta),
        })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    /// Orientation in `[-180, 180)` degrees.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn perturb(&self, dx: f64, dy: f64, dtheta: f64) -> Result<Pose2D> {
        perturb_pose(self, dx, dy, dtheta)
    }
}

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn normalize_angle(deg: f64) -> f64 {
    let mut a = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360.0 for tiny negative inputs after rounding.
    if a >= 180.0 {
        a -= 360.0;
    }
    a
}

pub fn perturb_pose(pose: &Pose2D, dx: f64, dy: f64, dtheta: f64) -> Result<Pose2D> {
    Pose2D::new(pose.cx + dx, pose.cy + dy, pose.theta + dtheta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perturb_examples() {
        let p = Pose2D::new(100.0, 100.0, 0.0).unwrap();
        assert_eq!(perturb_pose(&p, 0.0, 0.0, 0.0).unwrap(), p);
        let q = Pose2D::new(100.0, 100.0, 170.0).unwrap();
        let r = perturb_pose(&q, 0.0, 0.0, 20.0).unwrap();
        assert_eq!((r.cx(), r.cy(), r.theta()), (100.0, 100.0, -170.0));
        let s = perturb_pose(&p, -80.0, 80.0, 45.0).unwrap();
        assert_eq!((s.cx(), s.cy(), s.theta()), (20.0, 180.0, 45.0));
    }

    #[test]
    fn wrap_boundaries() {
        assert_eq!(normalize_angle(180.0), -180.0);
        assert_eq!(normalize_angle(-180.0), -180.0);
        assert_eq!(normalize_angle(540.0), -180.0);
        assert_eq!(normalize_angle(-190.0), 170.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(Pose2D::new(f64::NAN, 0.0, 0.0), Err(Error::InvalidPose(_))));
        assert!(Pose2D::new(0.0, 0.0, f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn normalization_idempotent(a in -1e6f64..1e6) {
            let n = normalize_angle(a);
            prop_assert!((-180.0..180.0).contains(&n));
            prop_assert_eq!(normalize_angle(n), n);
        }
    }
}
