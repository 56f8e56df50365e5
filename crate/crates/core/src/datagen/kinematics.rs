use crate::datagen::config::{JointLimits, Range, SynthConfig};
use crate::error::{Error, Result};
use crate::nn::RngStream;
use crate::pose::skeleton::PARENTS;
use crate::pose::{Pose3D, Skeleton};

type Mat = [[f64; 3]; 3];
type Vec3 = [f64; 3];

const IDENTITY: Mat = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const UP: Vec3 = [0.0, -1.0, 0.0];
const DOWN: Vec3 = [0.0, 1.0, 0.0];
const LEFT: Vec3 = [1.0, 0.0, 0.0];
const RIGHT: Vec3 = [-1.0, 0.0, 0.0];

fn rx(deg: f64) -> Mat {
    let (s, c) = deg.to_radians().sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

fn ry(deg: f64) -> Mat {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rz(deg: f64) -> Mat {
    let (s, c) = deg.to_radians().sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn apply(m: &Mat, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn step(from: &Vec3, m: &Mat, dir: &Vec3, len: f64) -> Vec3 {
    let d = apply(m, dir);
    [from[0] + len * d[0], from[1] + len * d[1], from[2] + len * d[2]]
}

fn chain(ms: &[Mat]) -> Mat {
    ms.iter().fold(IDENTITY, |acc, m| mul(&acc, m))
}

/// Joint angles (degrees) for one pose. Left and right limbs are drawn
/// independently.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoseAngles {
    pub azimuth: f64,
    pub torso_pitch: f64,
    pub torso_roll: f64,
    pub spine_pitch: f64,
    pub spine_roll: f64,
    pub spine_yaw: f64,
    pub thorax_pitch: f64,
    pub neck_pitch: f64,
    pub neck_yaw: f64,
    /// `[right, left]` for every limb angle below.
    pub hip_flex: [f64; 2],
    pub hip_abduct: [f64; 2],
    pub knee_flex: [f64; 2],
    pub shoulder_elevate: [f64; 2],
    pub shoulder_swing: [f64; 2],
    pub elbow_flex: [f64; 2],
}

impl PoseAngles {
    /// Uniform draws within `limits`; azimuth uniform over the full circle.
    pub fn sample(limits: &JointLimits, rng: &mut RngStream) -> Self {
        let mut u = |r: Range| if r.0 == r.1 { r.0 } else { rng.uniform_range(r.0, r.1) };
        let azimuth = u((0.0, 360.0));
        let torso_pitch = u(limits.torso_pitch);
        let torso_roll = u(limits.torso_roll);
        let spine_pitch = u(limits.spine_pitch);
        let spine_roll = u(limits.spine_roll);
        let spine_yaw = u(limits.spine_yaw);
        let thorax_pitch = u(limits.thorax_pitch);
        let neck_pitch = u(limits.neck_pitch);
        let neck_yaw = u(limits.neck_yaw);
        let mut pair = |r: Range| [u(r), u(r)];
        PoseAngles {
            azimuth,
            torso_pitch,
            torso_roll,
            spine_pitch,
            spine_roll,
            spine_yaw,
            thorax_pitch,
            neck_pitch,
            neck_yaw,
            hip_flex: pair(limits.hip_flex),
            hip_abduct: pair(limits.hip_abduct),
            knee_flex: pair(limits.knee_flex),
            shoulder_elevate: pair(limits.shoulder_elevate),
            shoulder_swing: pair(limits.shoulder_swing),
            elbow_flex: pair(limits.elbow_flex),
        }
    }
}

/// Forward kinematics on the canonical skeleton, pelvis at the origin, in
/// the camera axis convention (`y` down, `z` away from the camera). At
/// zero azimuth the body faces the camera.
pub fn forward_kinematics(a: &PoseAngles, bones: &crate::datagen::config::BoneLengths) -> Pose3D {
    let mut j = [[0.0; 3]; 17];
    let body = chain(&[ry(a.azimuth), rx(a.torso_pitch), rz(a.torso_roll)]);
    let spine = chain(&[body, rx(a.spine_pitch), rz(a.spine_roll), ry(a.spine_yaw)]);
    let upper = mul(&spine, &rx(a.thorax_pitch));
    let head = chain(&[upper, ry(a.neck_yaw), rx(a.neck_pitch)]);

    // side 0 = right (-x), side 1 = left (+x)
    for side in 0..2 {
        let (hip, knee, ankle) = if side == 0 { (1, 2, 3) } else { (4, 5, 6) };
        let (out, s) = if side == 0 { (RIGHT, 1.0) } else { (LEFT, -1.0) };
        j[hip] = step(&j[0], &body, &out, bones.hip);
        let thigh = chain(&[body, rx(-a.hip_flex[side]), rz(s * a.hip_abduct[side])]);
        j[knee] = step(&j[hip], &thigh, &DOWN, bones.femur);
        let shank = mul(&thigh, &rx(a.knee_flex[side]));
        j[ankle] = step(&j[knee], &shank, &DOWN, bones.tibia);
    }
    j[7] = step(&j[0], &body, &UP, bones.spine);
    j[8] = step(&j[7], &spine, &UP, bones.thorax);
    j[9] = step(&j[8], &head, &UP, bones.neck);
    j[10] = step(&j[9], &head, &UP, bones.head);
    for side in 0..2 {
        let (shoulder, elbow, wrist) = if side == 0 { (14, 15, 16) } else { (11, 12, 13) };
        let (out, s) = if side == 0 { (RIGHT, 1.0) } else { (LEFT, -1.0) };
        j[shoulder] = step(&j[8], &upper, &out, bones.shoulder);
        let arm = chain(&[upper, ry(-s * a.shoulder_swing[side]), rz(s * a.shoulder_elevate[side])]);
        j[elbow] = step(&j[shoulder], &arm, &out, bones.upper_arm);
        let fore = mul(&arm, &ry(-s * a.elbow_flex[side]));
        j[wrist] = step(&j[elbow], &fore, &out, bones.forearm);
    }
    Pose3D::new(j.to_vec()).expect("finite kinematics")
}

/// Limb chains that can be depth-flipped: (joint, joint) from proximal to
/// distal, each with a fixed parent.
pub const MIRROR_CHAINS: [[usize; 2]; 4] = [[2, 3], [5, 6], [12, 13], [15, 16]];

/// Moves every joint of the selected chains to the other point on its
/// camera ray at the correct distance from its (possibly moved) parent.
/// The input is in the camera frame; the projection of every joint is
/// unchanged. Returns `None` when some ray cannot be reached.
pub fn mirror_chains(pose: &Pose3D, chains: &[usize]) -> Option<Pose3D> {
    let mut joints = pose.joints().to_vec();
    for &c in chains {
        for &j in &MIRROR_CHAINS[c] {
            let x = pose.joint(j);
            let parent = joints[PARENTS[j]];
            let orig_parent = pose.joint(PARENTS[j]);
            let len = crate::pose::distance(&x, &orig_parent);
            let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let r = [x[0] / norm, x[1] / norm, x[2] / norm];
            let b = r[0] * parent[0] + r[1] * parent[1] + r[2] * parent[2];
            let pp = parent[0] * parent[0] + parent[1] * parent[1] + parent[2] * parent[2];
            let disc = b * b - pp + len * len;
            if disc < 0.0 {
                return None;
            }
            let roots = [b - disc.sqrt(), b + disc.sqrt()];
            let t = if (roots[0] - norm).abs() >= (roots[1] - norm).abs() {
                roots[0]
            } else {
                roots[1]
            };
            if !(t > 0.0) {
                return None;
            }
            joints[j] = [t * r[0], t * r[1], t * r[2]];
        }
    }
    Pose3D::new(joints).ok()
}

/// A generated pose (pelvis at the origin) with its scenario label. Members
/// of a mirror pair share `group` and `placement`.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthPose {
    pub pose: Pose3D,
    /// Pelvis position in the camera frame (mm).
    pub placement: [f64; 3],
    pub action: String,
    pub group: usize,
    pub member: usize,
}

fn mean_joint_distance(a: &Pose3D, b: &Pose3D) -> f64 {
    a.joints()
        .iter()
        .zip(b.joints())
        .map(|(p, q)| crate::pose::distance(p, q))
        .sum::<f64>()
        / a.num_joints() as f64
}

fn check_skeleton(skeleton: &Skeleton) -> Result<()> {
    if skeleton.parents() != PARENTS || skeleton.root() != 0 {
        return Err(Error::InvalidSkeleton(
            "synthetic generation requires the canonical 17-joint skeleton".into(),
        ));
    }
    Ok(())
}

/// Draws `config.num_poses` poses. Every pose gets its own sub-stream, so
/// the output depends only on the configuration.
pub fn generate_synthetic(config: &SynthConfig, skeleton: &Skeleton) -> Result<Vec<SynthPose>> {
    config.validate()?;
    check_skeleton(skeleton)?;
    let root = RngStream::new(config.seed);
    let mut out = Vec::with_capacity(config.num_poses);
    let mut group = 0;
    while out.len() < config.num_poses {
        let mut rng = root.derive_indexed("pose", group as u64);
        let scenario = &config.scenarios[rng.below(config.scenarios.len())];
        let want_pair = config.num_poses - out.len() >= 2 && rng.uniform() < config.mirror_fraction;
        let (jx, jy) = config.placement_jitter;
        let placement = [
            if jx > 0.0 { rng.uniform_range(-jx, jx) } else { 0.0 },
            if jy > 0.0 { rng.uniform_range(-jy, jy) } else { 0.0 },
            config.camera_distance,
        ];
        let mut pair = None;
        if want_pair {
            for _ in 0..200 {
                let base = forward_kinematics(&PoseAngles::sample(&scenario.limits, &mut rng), &config.bones);
                let mut chains: Vec<usize> = Vec::new();
                while chains.is_empty() {
                    chains = (0..MIRROR_CHAINS.len()).filter(|_| rng.bernoulli(0.5)).collect();
                }
                let placed = base.translated(placement);
                if let Some(m) = mirror_chains(&placed, &chains) {
                    let m = m.translated([-placement[0], -placement[1], -placement[2]]);
                    if mean_joint_distance(&base, &m) > config.min_mirror_separation {
                        pair = Some((base, m));
                        break;
                    }
                }
            }
        }
        match pair {
            Some((a, b)) => {
                for (member, pose) in [a, b].into_iter().enumerate() {
                    out.push(SynthPose {
                        pose,
                        placement,
                        action: scenario.name.clone(),
                        group,
                        member,
                    });
                }
            }
            None => out.push(SynthPose {
                pose: forward_kinematics(&PoseAngles::sample(&scenario.limits, &mut rng), &config.bones),
                placement,
                action: scenario.name.clone(),
                group,
                member: 0,
            }),
        }
        group += 1;
    }
    Ok(out)
}
