use crate::error::{Error, Result};

/// Segment lengths in millimeters. Human-plausible defaults, not measured
/// values.
#[derive(Clone, Debug, PartialEq)]
pub struct BoneLengths {
    /// Pelvis center to each hip joint.
    pub hip: f64,
    pub femur: f64,
    pub tibia: f64,
    /// Pelvis to spine joint.
    pub spine: f64,
    /// Spine joint to thorax.
    pub thorax: f64,
    /// Thorax to neck/nose.
    pub neck: f64,
    /// Neck/nose to head top.
    pub head: f64,
    /// Thorax to each shoulder.
    pub shoulder: f64,
    pub upper_arm: f64,
    pub forearm: f64,
}

impl Default for BoneLengths {
    fn default() -> Self {
        BoneLengths {
            hip: 130.0,
            femur: 450.0,
            tibia: 440.0,
            spine: 240.0,
            thorax: 250.0,
            neck: 110.0,
            head: 115.0,
            shoulder: 150.0,
            upper_arm: 280.0,
            forearm: 250.0,
        }
    }
}

impl BoneLengths {
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.hip,
            self.femur,
            self.tibia,
            self.spine,
            self.thorax,
            self.neck,
            self.head,
            self.shoulder,
            self.upper_arm,
            self.forearm,
        ]
    }
}

/// Closed interval in degrees.
pub type Range = (f64, f64);

/// Per-articulation angle ranges (degrees). Zero everywhere is the rest
/// pose: upright, legs straight down, arms straight out to the sides.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLimits {
    /// Forward lean of the whole body about the pelvis.
    pub torso_pitch: Range,
    /// Sideways lean of the whole body about the pelvis.
    pub torso_roll: Range,
    /// Forward bend at the spine joint.
    pub spine_pitch: Range,
    /// Sideways bend at the spine joint.
    pub spine_roll: Range,
    /// Twist of the upper body about the spine.
    pub spine_yaw: Range,
    /// Forward bend at the thorax.
    pub thorax_pitch: Range,
    pub neck_pitch: Range,
    pub neck_yaw: Range,
    /// Forward swing of the thigh.
    pub hip_flex: Range,
    /// Outward swing of the thigh.
    pub hip_abduct: Range,
    /// Backward bend of the shank.
    pub knee_flex: Range,
    /// Upward swing of the upper arm in the frontal plane (negative = down).
    pub shoulder_elevate: Range,
    /// Forward swing of the upper arm about the vertical.
    pub shoulder_swing: Range,
    /// Forward bend of the forearm.
    pub elbow_flex: Range,
}

impl JointLimits {
    /// Anatomical bounds every scenario must respect.
    pub fn anatomical() -> Self {
        JointLimits {
            torso_pitch: (-30.0, 90.0),
            torso_roll: (-30.0, 30.0),
            spine_pitch: (-30.0, 60.0),
            spine_roll: (-30.0, 30.0),
            spine_yaw: (-45.0, 45.0),
            thorax_pitch: (-20.0, 30.0),
            neck_pitch: (-40.0, 60.0),
            neck_yaw: (-70.0, 70.0),
            hip_flex: (-40.0, 120.0),
            hip_abduct: (-20.0, 60.0),
            knee_flex: (0.0, 150.0),
            shoulder_elevate: (-85.0, 90.0),
            shoulder_swing: (-60.0, 120.0),
            elbow_flex: (0.0, 150.0),
        }
    }

    /// The rest pose only.
    pub fn zero() -> Self {
        let z = (0.0, 0.0);
        JointLimits {
            torso_pitch: z,
            torso_roll: z,
            spine_pitch: z,
            spine_roll: z,
            spine_yaw: z,
            thorax_pitch: z,
            neck_pitch: z,
            neck_yaw: z,
            hip_flex: z,
            hip_abduct: z,
            knee_flex: z,
            shoulder_elevate: z,
            shoulder_swing: z,
            elbow_flex: z,
        }
    }

    pub fn ranges(&self) -> [(&'static str, Range); 14] {
        [
            ("torso_pitch", self.torso_pitch),
            ("torso_roll", self.torso_roll),
            ("spine_pitch", self.spine_pitch),
            ("spine_roll", self.spine_roll),
            ("spine_yaw", self.spine_yaw),
            ("thorax_pitch", self.thorax_pitch),
            ("neck_pitch", self.neck_pitch),
            ("neck_yaw", self.neck_yaw),
            ("hip_flex", self.hip_flex),
            ("hip_abduct", self.hip_abduct),
            ("knee_flex", self.knee_flex),
            ("shoulder_elevate", self.shoulder_elevate),
            ("shoulder_swing", self.shoulder_swing),
            ("elbow_flex", self.elbow_flex),
        ]
    }

    pub fn contains(&self, other: &JointLimits) -> bool {
        self.ranges()
            .iter()
            .zip(other.ranges().iter())
            .all(|((_, a), (_, b))| a.0 <= b.0 && b.1 <= a.1)
    }
}

/// A named family of poses with its own angle ranges. The name becomes the
/// action label of every record it produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub limits: JointLimits,
}

impl Scenario {
    pub fn defaults() -> Vec<Scenario> {
        let a = JointLimits::anatomical();
        vec![
            Scenario {
                name: "standing".into(),
                limits: JointLimits {
                    torso_pitch: (-10.0, 15.0),
                    spine_pitch: (-10.0, 20.0),
                    hip_flex: (-15.0, 30.0),
                    hip_abduct: (-5.0, 25.0),
                    knee_flex: (0.0, 40.0),
                    shoulder_elevate: (-85.0, 30.0),
                    shoulder_swing: (-40.0, 90.0),
                    elbow_flex: (0.0, 120.0),
                    ..a.clone()
                },
            },
            Scenario {
                name: "walking".into(),
                limits: JointLimits {
                    torso_pitch: (-5.0, 15.0),
                    torso_roll: (-10.0, 10.0),
                    spine_pitch: (-5.0, 15.0),
                    spine_roll: (-10.0, 10.0),
                    spine_yaw: (-20.0, 20.0),
                    hip_flex: (-35.0, 45.0),
                    hip_abduct: (-5.0, 15.0),
                    knee_flex: (0.0, 70.0),
                    shoulder_elevate: (-85.0, -50.0),
                    shoulder_swing: (-50.0, 60.0),
                    elbow_flex: (0.0, 90.0),
                    ..a.clone()
                },
            },
            Scenario {
                name: "crouching".into(),
                limits: JointLimits {
                    torso_pitch: (0.0, 60.0),
                    spine_pitch: (0.0, 50.0),
                    hip_flex: (40.0, 120.0),
                    hip_abduct: (0.0, 40.0),
                    knee_flex: (50.0, 150.0),
                    shoulder_elevate: (-85.0, 40.0),
                    shoulder_swing: (0.0, 110.0),
                    elbow_flex: (0.0, 140.0),
                    ..a.clone()
                },
            },
            Scenario {
                name: "reaching".into(),
                limits: JointLimits {
                    torso_pitch: (-15.0, 45.0),
                    hip_flex: (-20.0, 60.0),
                    knee_flex: (0.0, 60.0),
                    shoulder_elevate: (-20.0, 90.0),
                    shoulder_swing: (-30.0, 120.0),
                    elbow_flex: (0.0, 80.0),
                    ..a
                },
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Number of generated 3D poses (mirror pairs count twice).
    pub num_poses: usize,
    /// Fraction of poses generated as members of depth-ambiguous mirror
    /// pairs.
    pub mirror_fraction: f64,
    pub bones: BoneLengths,
    pub anatomical: JointLimits,
    pub scenarios: Vec<Scenario>,
    /// Pelvis depth in the camera frame (mm).
    pub camera_distance: f64,
    /// Half-widths (mm) of the uniform horizontal and vertical pelvis
    /// offset from the optical axis.
    pub placement_jitter: (f64, f64),
    /// Extra copies per pose, rotated about the vertical axis (degrees).
    pub rotations: Vec<f64>,
    /// Minimum MPJPE (mm) between the two members of a mirror pair.
    pub min_mirror_separation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            num_poses: 1000,
            mirror_fraction: 0.5,
            bones: BoneLengths::default(),
            anatomical: JointLimits::anatomical(),
            scenarios: Scenario::defaults(),
            camera_distance: 5500.0,
            placement_jitter: (400.0, 200.0),
            rotations: vec![90.0, 180.0, 270.0],
            min_mirror_separation: 50.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_poses == 0 {
            return bad("pose count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.mirror_fraction) {
            return bad(format!("mirror fraction {} outside [0, 1]", self.mirror_fraction));
        }
        if self.bones.as_array().iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return bad("bone lengths must be positive".into());
        }
        if !(self.camera_distance > 0.0) || !self.camera_distance.is_finite() {
            return bad("camera distance must be positive".into());
        }
        let (jx, jy) = self.placement_jitter;
        if !(jx >= 0.0 && jy >= 0.0) || !jx.is_finite() || !jy.is_finite() {
            return bad("placement jitter must be non-negative".into());
        }
        if self.scenarios.is_empty() {
            return bad("at least one scenario is required".into());
        }
        for s in &self.scenarios {
            if s.name.is_empty() || s.name.contains(char::is_whitespace) || s.name.contains(',') {
                return bad(format!("scenario name '{}' must be a non-empty token", s.name));
            }
            for (name, (lo, hi)) in s.limits.ranges() {
                if !(lo <= hi) {
                    return bad(format!("scenario {}: {name} range is empty", s.name));
                }
            }
            if !self.anatomical.contains(&s.limits) {
                return bad(format!("scenario {} exceeds the anatomical limits", s.name));
            }
        }
        if self.rotations.iter().any(|r| !r.is_finite()) {
            return bad("rotations must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SynthConfig::default().validate().unwrap();
        for s in Scenario::defaults() {
            assert!(JointLimits::anatomical().contains(&s.limits), "{}", s.name);
        }
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut c = SynthConfig::default();
        c.bones.femur = 0.0;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.num_poses = 0;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.scenarios[0].limits.knee_flex = (-10.0, 20.0);
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.scenarios[0].limits.knee_flex = (30.0, 20.0);
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.mirror_fraction = 1.5;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.scenarios[0].name = "two words".into();
        assert!(c.validate().is_err());
    }
}
