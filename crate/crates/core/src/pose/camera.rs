use crate::error::{Error, Result};
use crate::pose::{Pose2D, Pose3D};

/// Pinhole intrinsics in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub focal: (f64, f64),
    pub principal: (f64, f64),
}

impl CameraIntrinsics {
    pub fn new(focal: (f64, f64), principal: (f64, f64)) -> Result<Self> {
        if !(focal.0 > 0.0 && focal.1 > 0.0) || !focal.0.is_finite() || !focal.1.is_finite() {
            return Err(Error::InvalidConfig(format!("focal lengths must be positive, got {focal:?}")));
        }
        if !principal.0.is_finite() || !principal.1.is_finite() {
            return Err(Error::InvalidConfig("principal point must be finite".into()));
        }
        Ok(CameraIntrinsics { focal, principal })
    }
}

impl Default for CameraIntrinsics {
    /// A Human3.6M-like configuration, not a calibrated camera.
    fn default() -> Self {
        CameraIntrinsics {
            focal: (1145.0, 1145.0),
            principal: (512.0, 512.0),
        }
    }
}

/// `u = c_x + f_x x / z`, `v = c_y + f_y y / z` for every joint.
pub fn project_perspective(pose: &Pose3D, cam: &CameraIntrinsics) -> Result<Pose2D> {
    let mut out = Vec::with_capacity(pose.num_joints());
    for (j, p) in pose.joints().iter().enumerate() {
        let z = p[2];
        if !(z > 0.0) {
            return Err(Error::NonPositiveDepth { joint: j, depth: z });
        }
        out.push([
            cam.principal.0 + cam.focal.0 * p[0] / z,
            cam.principal.1 + cam.focal.1 * p[1] / z,
        ]);
    }
    Pose2D::new(out)
}
