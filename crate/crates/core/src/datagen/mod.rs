//! Synthetic pose generation with depth-ambiguous mirror pairs.

mod config;
mod dataset;
mod kinematics;

pub use config::{BoneLengths, JointLimits, Range, Scenario, SynthConfig};
pub use dataset::{
    build_dataset, read_dataset, read_dataset_file, split, write_dataset, write_dataset_file, DatasetRecord,
};
pub use kinematics::{forward_kinematics, generate_synthetic, mirror_chains, PoseAngles, SynthPose, MIRROR_CHAINS};
