//! Camera-frame dataset records and the `POSESET dataset` file format.
//!
//! ```text
//! POSESET dataset <num_joints_3d> <num_records>
//! REC <id> <action>
//! <3D joints, camera frame, mm>
//! <2D joints, pixels>
//! ORDINAL <N> <eps>        (optional block)
//! ...
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::iter::Peekable;

use crate::datagen::kinematics::SynthPose;
use crate::datagen::config::SynthConfig;
use crate::error::{Error, Result};
use crate::nn::RngStream;
use crate::ordinal::{numbered_lines, OrdinalMatrix};
use crate::pose::poseset::{parse_floats, parse_header, write_floats};
use crate::pose::{project_perspective, rotate_about_vertical, CameraIntrinsics, Pose2D, Pose3D, Skeleton};

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    /// `<group>.<member>.<rotation>`; records sharing the group prefix come
    /// from the same generated pose or mirror pair.
    pub id: String,
    pub action: String,
    /// Camera frame, millimetres.
    pub pose3d: Pose3D,
    /// Pixels, 2D joint order of the skeleton.
    pub pose2d: Pose2D,
    pub ordinal: Option<OrdinalMatrix>,
}

impl DatasetRecord {
    /// Group prefix of the id (text before the first `.`).
    pub fn group(&self) -> &str {
        self.id.split('.').next().unwrap_or(&self.id)
    }
}

/// Places every pose (and its rotated copies) in front of the camera,
/// projects it, and attaches ground-truth ordinals at `epsilon` mm.
pub fn build_dataset(
    poses: &[SynthPose],
    config: &SynthConfig,
    skeleton: &Skeleton,
    camera: &CameraIntrinsics,
    epsilon: f64,
) -> Result<Vec<DatasetRecord>> {
    let mut angles = vec![0.0];
    angles.extend(config.rotations.iter().copied());
    let mut out = Vec::with_capacity(poses.len() * angles.len());
    for p in poses {
        for &deg in &angles {
            let pose3d = rotate_about_vertical(&p.pose, deg, skeleton)?.translated(p.placement);
            let pose2d = project_perspective(&pose3d, camera)?.select_mapped(skeleton)?;
            let ordinal = OrdinalMatrix::from_pose(&pose3d, epsilon, skeleton.scoring_joints())?;
            out.push(DatasetRecord {
                id: format!("{:06}.{}.{:03}", p.group, p.member, deg.rem_euclid(360.0).round() as i64),
                action: p.action.clone(),
                pose3d,
                pose2d,
                ordinal: Some(ordinal),
            });
        }
    }
    Ok(out)
}

/// Splits by group so no pose (or mirror partner, or rotated copy) appears
/// on both sides. Groups are shuffled, then assigned to train until it
/// holds at least `train_fraction` of the records.
pub fn split(
    records: Vec<DatasetRecord>,
    train_fraction: f64,
    rng: &mut RngStream,
) -> Result<(Vec<DatasetRecord>, Vec<DatasetRecord>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let total = records.len();
    let mut groups: BTreeMap<String, Vec<DatasetRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.group().to_string()).or_default().push(r);
    }
    let mut groups: Vec<Vec<DatasetRecord>> = groups.into_values().collect();
    rng.shuffle(&mut groups);
    let target = (train_fraction * total as f64).ceil() as usize;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for g in groups {
        if train.len() < target {
            train.extend(g);
        } else {
            test.extend(g);
        }
    }
    Ok((train, test))
}

pub fn write_dataset<W: Write>(records: &[DatasetRecord], mut w: W) -> Result<()> {
    let joints = records.first().map_or(0, |r| r.pose3d.num_joints());
    writeln!(w, "POSESET dataset {} {}", joints, records.len())?;
    for r in records {
        if r.pose3d.num_joints() != joints || r.pose2d.num_joints() + 1 != joints {
            return Err(Error::DimensionMismatch {
                expected: joints,
                got: r.pose3d.num_joints(),
            });
        }
        if r.id.contains(char::is_whitespace) || r.action.contains(char::is_whitespace) || r.id.is_empty() {
            return Err(Error::InvalidConfig(format!("record id '{}' or action must be tokens", r.id)));
        }
        writeln!(w, "REC {} {}", r.id, r.action)?;
        write_floats(&mut w, &r.pose3d.to_flat())?;
        write_floats(&mut w, &r.pose2d.to_flat())?;
        if let Some(m) = &r.ordinal {
            m.write(&mut w)?;
        }
    }
    Ok(())
}

fn next_line<I: Iterator<Item = Result<(usize, String)>>>(
    lines: &mut Peekable<I>,
    last: usize,
) -> Result<(usize, String)> {
    lines
        .next()
        .unwrap_or_else(|| Err(Error::parse(last + 1, "unexpected end of file")))
}

pub fn read_dataset<R: BufRead>(r: R) -> Result<Vec<DatasetRecord>> {
    let mut lines = numbered_lines(r).peekable();
    let (n, header) = next_line(&mut lines, 0)?;
    let (space, joints, count) = parse_header(&header, n)?;
    if space != "dataset" {
        return Err(Error::parse(n, format!("expected a dataset file, found '{space}'")));
    }
    if joints < 2 && count > 0 {
        return Err(Error::parse(n, "dataset needs at least two joints"));
    }
    let mut out = Vec::with_capacity(count);
    let mut last = n;
    for _ in 0..count {
        let (n, rec) = next_line(&mut lines, last)?;
        let fields: Vec<&str> = rec.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "REC" {
            return Err(Error::parse(n, "expected 'REC <id> <action>'"));
        }
        let (n3, l3) = next_line(&mut lines, n)?;
        let pose3d = Pose3D::from_flat(&parse_floats(&l3, 3 * joints, n3)?)?;
        let (n2, l2) = next_line(&mut lines, n3)?;
        let pose2d = Pose2D::from_flat(&parse_floats(&l2, 2 * (joints - 1), n2)?)?;
        last = n2;
        let has_block = matches!(lines.peek(), Some(Ok((_, l))) if l.starts_with("ORDINAL"));
        let ordinal = if has_block {
            let (nh, h) = next_line(&mut lines, last)?;
            let m = OrdinalMatrix::parse_block(&h, nh, &mut lines)?;
            last = nh + m.size();
            Some(m)
        } else {
            None
        };
        out.push(DatasetRecord {
            id: fields[1].to_string(),
            action: fields[2].to_string(),
            pose3d,
            pose2d,
            ordinal,
        });
    }
    for item in lines {
        let (n, line) = item?;
        if !line.trim().is_empty() {
            return Err(Error::parse(n, "trailing data after last record"));
        }
    }
    Ok(out)
}

pub fn read_dataset_file(path: &std::path::Path) -> Result<Vec<DatasetRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::from(e).with_path(path))?;
    read_dataset(std::io::BufReader::new(f)).map_err(|e| e.with_path(path))
}

pub fn write_dataset_file(records: &[DatasetRecord], path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::from(e).with_path(path))?;
    let mut w = std::io::BufWriter::new(f);
    write_dataset(records, &mut w)?;
    w.flush()?;
    Ok(())
}
