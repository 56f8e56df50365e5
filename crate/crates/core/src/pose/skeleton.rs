//! Joint tables.
//!
//! Canonical 17-joint 3D ordering and the 16-joint 2D subset:
//!
//! | idx | joint      | parent | 2D idx |
//! |-----|------------|--------|--------|
//! | 0   | hip        | 0      | 0      |
//! | 1   | r_hip      | 0      | 1      |
//! | 2   | r_knee     | 1      | 2      |
//! | 3   | r_ankle    | 2      | 3      |
//! | 4   | l_hip      | 0      | 4      |
//! | 5   | l_knee     | 4      | 5      |
//! | 6   | l_ankle    | 5      | 6      |
//! | 7   | spine      | 0      | 7      |
//! | 8   | thorax     | 7      | 8      |
//! | 9   | neck_nose  | 8      | -      |
//! | 10  | head       | 9      | 9      |
//! | 11  | l_shoulder | 8      | 10     |
//! | 12  | l_elbow    | 11     | 11     |
//! | 13  | l_wrist    | 12     | 12     |
//! | 14  | r_shoulder | 8      | 13     |
//! | 15  | r_elbow    | 14     | 14     |
//! | 16  | r_wrist    | 15     | 15     |
//!
//! `neck_nose` is the extra 3D joint with no 2D counterpart. It never enters
//! an ordinal matrix.

use crate::error::{Error, Result};

pub const JOINT_NAMES: [&str; 17] = [
    "hip",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_hip",
    "l_knee",
    "l_ankle",
    "spine",
    "thorax",
    "neck_nose",
    "head",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
];

pub const PARENTS: [usize; 17] = [0, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15];

pub const ROOT: usize = 0;
pub const EXTRA_JOINT: usize = 9;
pub const NUM_JOINTS_3D: usize = 17;
pub const NUM_JOINTS_2D: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    joint_names: Vec<String>,
    parent_index: Vec<usize>,
    root_index: usize,
    bone_pairs: Vec<(usize, usize)>,
    /// 2D joint index -> 3D joint index.
    joint_map_2d3d: Vec<usize>,
}

impl Skeleton {
    pub fn new(
        joint_names: Vec<String>,
        parent_index: Vec<usize>,
        root_index: usize,
        joint_map_2d3d: Vec<usize>,
    ) -> Result<Self> {
        let n = joint_names.len();
        if parent_index.len() != n {
            return Err(Error::InvalidSkeleton(format!(
                "{} names but {} parents",
                n,
                parent_index.len()
            )));
        }
        if root_index >= n || parent_index[root_index] != root_index {
            return Err(Error::InvalidSkeleton("root must be its own parent".into()));
        }
        // every joint must reach the root without cycles
        for start in 0..n {
            let mut j = start;
            let mut steps = 0;
            while j != root_index {
                let p = parent_index[j];
                if p >= n || p == j {
                    return Err(Error::InvalidSkeleton(format!("joint {start} is not attached to the root")));
                }
                j = p;
                steps += 1;
                if steps > n {
                    return Err(Error::InvalidSkeleton(format!("cycle through joint {start}")));
                }
            }
        }
        let mut seen = vec![false; n];
        for &j in &joint_map_2d3d {
            if j >= n || seen[j] {
                return Err(Error::InvalidSkeleton(format!("2D->3D map is not injective at {j}")));
            }
            seen[j] = true;
        }
        if seen.iter().filter(|s| !**s).count() != 1 {
            return Err(Error::InvalidSkeleton(
                "exactly one 3D joint must lack a 2D counterpart".into(),
            ));
        }
        let bone_pairs = (0..n)
            .filter(|&j| j != root_index)
            .map(|j| (j, parent_index[j]))
            .collect();
        Ok(Skeleton {
            joint_names,
            parent_index,
            root_index,
            bone_pairs,
            joint_map_2d3d,
        })
    }

    /// The canonical 17-joint skeleton.
    pub fn h36m17() -> Self {
        let map = (0..NUM_JOINTS_3D).filter(|&j| j != EXTRA_JOINT).collect();
        Skeleton::new(
            JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
            PARENTS.to_vec(),
            ROOT,
            map,
        )
        .expect("canonical skeleton is valid")
    }

    pub fn num_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn num_joints_2d(&self) -> usize {
        self.joint_map_2d3d.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn parent(&self, j: usize) -> usize {
        self.parent_index[j]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent_index
    }

    pub fn root(&self) -> usize {
        self.root_index
    }

    pub fn bone_pairs(&self) -> &[(usize, usize)] {
        &self.bone_pairs
    }

    pub fn joint_map_2d3d(&self) -> &[usize] {
        &self.joint_map_2d3d
    }

    /// 3D joints that have a 2D counterpart, in 2D order. These are the
    /// joints used for ordinal scoring.
    pub fn scoring_joints(&self) -> &[usize] {
        &self.joint_map_2d3d
    }

    pub fn unmapped_joint(&self) -> usize {
        (0..self.num_joints())
            .find(|j| !self.joint_map_2d3d.contains(j))
            .expect("validated on construction")
    }

    /// Joints in an order where every parent precedes its children.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.num_joints();
        let depth = |mut j: usize| {
            let mut d = 0;
            while j != self.root_index {
                j = self.parent_index[j];
                d += 1;
            }
            d
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| (depth(j), j));
        order
    }
}

impl Default for Skeleton {
    fn default() -> Self {
        Skeleton::h36m17()
    }
}
