//! Skeletons, pose containers and the geometric operations on them.
//!
//! Units are millimeters in 3D (camera frame, `z` pointing away from the
//! camera, `y` pointing down) and pixels in 2D.

mod camera;
mod norm;
pub mod poseset;
pub mod skeleton;

pub use camera::{project_perspective, CameraIntrinsics};
pub use norm::{fit_norm_stats, NormSpace, NormStats};
pub use skeleton::Skeleton;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Pose3D {
    joints: Vec<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pose2D {
    joints: Vec<[f64; 2]>,
}

impl Pose3D {
    pub fn new(joints: Vec<[f64; 3]>) -> Result<Self> {
        if let Some(j) = joints.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite(format!("3D joint {j}")));
        }
        Ok(Pose3D { joints })
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 3 != 0 {
            return Err(Error::ShapeMismatch(format!("{} values is not a multiple of 3", flat.len())));
        }
        Pose3D::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Pose3D {
            joints: vec![[0.0; 3]; n],
        }
    }

    pub fn joints(&self) -> &[[f64; 3]] {
        &self.joints
    }

    pub fn joint(&self, j: usize) -> [f64; 3] {
        self.joints[j]
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.joints.iter().flatten().copied().collect()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.joints.iter().map(|p| p[2]).collect()
    }

    pub fn translated(&self, t: [f64; 3]) -> Pose3D {
        Pose3D {
            joints: self
                .joints
                .iter()
                .map(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]])
                .collect(),
        }
    }

    /// Flattened coordinates of every joint except `root`; the layout the
    /// networks regress.
    pub fn to_rootless_flat(&self, root: usize) -> Vec<f64> {
        self.joints
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != root)
            .flat_map(|(_, p)| p.iter().copied())
            .collect()
    }

    /// Inverse of [`to_rootless_flat`](Self::to_rootless_flat); the root is
    /// placed at the origin.
    pub fn from_rootless_flat(flat: &[f64], root: usize) -> Result<Self> {
        if flat.len() % 3 != 0 {
            return Err(Error::ShapeMismatch(format!("{} values is not a multiple of 3", flat.len())));
        }
        let mut joints: Vec<[f64; 3]> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        if root > joints.len() {
            return Err(Error::ShapeMismatch(format!("root {root} out of range")));
        }
        joints.insert(root, [0.0; 3]);
        Pose3D::new(joints)
    }

    pub(crate) fn check_bound(&self, skeleton: &Skeleton) -> Result<()> {
        if self.num_joints() != skeleton.num_joints() {
            return Err(Error::DimensionMismatch {
                expected: skeleton.num_joints(),
                got: self.num_joints(),
            });
        }
        Ok(())
    }
}

impl Pose2D {
    pub fn new(joints: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(j) = joints.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite(format!("2D joint {j}")));
        }
        Ok(Pose2D { joints })
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::ShapeMismatch(format!("{} values is not a multiple of 2", flat.len())));
        }
        Pose2D::new(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn joints(&self) -> &[[f64; 2]] {
        &self.joints
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.joints.iter().flatten().copied().collect()
    }

    /// Picks the 2D joints that have a 3D counterpart, in 2D order.
    pub fn select_mapped(&self, skeleton: &Skeleton) -> Result<Pose2D> {
        if self.num_joints() != skeleton.num_joints() {
            return Err(Error::DimensionMismatch {
                expected: skeleton.num_joints(),
                got: self.num_joints(),
            });
        }
        Ok(Pose2D {
            joints: skeleton.joint_map_2d3d().iter().map(|&j| self.joints[j]).collect(),
        })
    }
}

/// Translates the pose so the root joint sits exactly at the origin.
pub fn center_at_hip(pose: &Pose3D, skeleton: &Skeleton) -> Result<Pose3D> {
    pose.check_bound(skeleton)?;
    let r = pose.joints[skeleton.root()];
    let mut out = pose.translated([-r[0], -r[1], -r[2]]);
    out.joints[skeleton.root()] = [0.0; 3];
    Ok(out)
}

/// Rigid rotation about the vertical (`y`) axis through the root joint.
pub fn rotate_about_vertical(pose: &Pose3D, degrees: f64, skeleton: &Skeleton) -> Result<Pose3D> {
    pose.check_bound(skeleton)?;
    if !degrees.is_finite() {
        return Err(Error::NonFinite("rotation angle".into()));
    }
    if degrees.rem_euclid(360.0) == 0.0 {
        return Ok(pose.clone());
    }
    let (s, c) = degrees.to_radians().sin_cos();
    let r = pose.joints[skeleton.root()];
    let joints = pose
        .joints
        .iter()
        .map(|p| {
            let (x, z) = (p[0] - r[0], p[2] - r[2]);
            [r[0] + c * x + s * z, p[1], r[2] - s * x + c * z]
        })
        .collect();
    Ok(Pose3D { joints })
}

/// Euclidean length of every bone, in `skeleton.bone_pairs()` order.
pub fn bone_lengths(pose: &Pose3D, skeleton: &Skeleton) -> Result<Vec<f64>> {
    pose.check_bound(skeleton)?;
    Ok(skeleton
        .bone_pairs()
        .iter()
        .map(|&(c, p)| distance(&pose.joints[c], &pose.joints[p]))
        .collect())
}

pub(crate) fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}
