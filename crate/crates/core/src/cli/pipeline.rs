//! Building blocks shared by the subcommands: training from dataset
//! records, candidate draws, reference ordinals and temperature sweeps.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::datagen::DatasetRecord;
use crate::error::{Error, Result};
use crate::eval::{estimate, pose_error, AblationItem, Method, ScoringConfig};
use crate::lifter::{
    baseline_gaussian_sample, sample_candidates, train_baseline, train_cvae, BaselineModel, CvaeConfig, CvaeModel,
    PoseNormalizer, SampleSet, TrainLog, TrainingSet,
};
use crate::nn::RngStream;
use crate::ordinal::{corrupt_ordinals, numbered_lines, OrdinalMatrix};
use crate::pose::{center_at_hip, Pose2D, Pose3D, Skeleton};

/// Where the reference ordinals for scoring come from.
#[derive(Clone, Debug, PartialEq)]
pub enum OrdinalSource {
    /// Computed from the ground-truth pose.
    Gt,
    /// Ground truth corrupted to the given pairwise accuracy.
    Noisy { accuracy: f64 },
    /// Read from an ordinal file, keyed by item id.
    File(BTreeMap<String, OrdinalMatrix>),
}

fn inputs(records: &[DatasetRecord]) -> (Vec<Pose2D>, Vec<Pose3D>) {
    records.iter().map(|r| (r.pose2d.clone(), r.pose3d.clone())).unzip()
}

/// Fits normalization statistics and trains a CVAE on `records`.
pub fn fit_cvae(
    records: &[DatasetRecord],
    config: &CvaeConfig,
    skeleton: &Skeleton,
    seed: u64,
    progress: impl FnMut(usize, f64),
) -> Result<(CvaeModel<f32>, TrainLog)> {
    let (p2d, p3d) = inputs(records);
    let norm = PoseNormalizer::fit(&p2d, &p3d, skeleton)?;
    let data = TrainingSet::build(&norm, &p2d, &p3d)?;
    let root = RngStream::new(seed);
    let mut model = CvaeModel::new(config.clone(), norm, &mut root.derive("init"))?;
    let log = train_cvae(&mut model, &data, &root.derive("train"), progress)?;
    Ok((model, log))
}

/// Same data pipeline and schedule as [`fit_cvae`] for the regressor.
pub fn fit_baseline(
    records: &[DatasetRecord],
    config: &CvaeConfig,
    skeleton: &Skeleton,
    seed: u64,
    progress: impl FnMut(usize, f64),
) -> Result<(BaselineModel<f32>, TrainLog)> {
    let (p2d, p3d) = inputs(records);
    let norm = PoseNormalizer::fit(&p2d, &p3d, skeleton)?;
    let data = TrainingSet::build(&norm, &p2d, &p3d)?;
    let root = RngStream::new(seed);
    let mut model = BaselineModel::new(config.clone(), norm, &mut root.derive("init"))?;
    let log = train_baseline(&mut model, &data, &root.derive("train"), progress)?;
    Ok((model, log))
}

/// Root-centred ground truth of every record.
pub fn ground_truths(records: &[DatasetRecord], skeleton: &Skeleton) -> Result<Vec<Pose3D>> {
    records.iter().map(|r| center_at_hip(&r.pose3d, skeleton)).collect()
}

/// `k` candidates per record. Item `i` draws from its own sub-stream, so
/// results do not depend on which other items are processed.
pub fn draw_samples(model: &CvaeModel<f32>, records: &[DatasetRecord], k: usize, seed: u64) -> Result<Vec<SampleSet>> {
    let root = RngStream::new(seed).derive("samples");
    records
        .iter()
        .enumerate()
        .map(|(i, r)| sample_candidates(model, &r.pose2d, k, &mut root.derive_indexed("item", i as u64)))
        .collect()
}

pub fn baseline_predictions(model: &BaselineModel<f32>, records: &[DatasetRecord]) -> Result<Vec<Pose3D>> {
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(512) {
        let p2d: Vec<Pose2D> = chunk.iter().map(|r| r.pose2d.clone()).collect();
        out.extend(model.regress_batch(&p2d)?);
    }
    Ok(out)
}

/// Gaussian perturbations of the regressed poses, `k` per item.
pub fn baseline_samples(
    predictions: &[Pose3D],
    variance: f64,
    k: usize,
    root_joint: usize,
    seed: u64,
) -> Result<Vec<SampleSet>> {
    let root = RngStream::new(seed).derive("baseline-samples");
    predictions
        .iter()
        .enumerate()
        .map(|(i, p)| baseline_gaussian_sample(p, variance, k, root_joint, &mut root.derive_indexed("item", i as u64)))
        .collect()
}

pub fn gt_ordinals(records: &[DatasetRecord], epsilon: f64, skeleton: &Skeleton) -> Result<Vec<OrdinalMatrix>> {
    records
        .iter()
        .map(|r| OrdinalMatrix::from_pose(&r.pose3d, epsilon, skeleton.scoring_joints()))
        .collect()
}

/// Corrupts each matrix on its own sub-stream of `seed`.
pub fn noisy_ordinals(gt: &[OrdinalMatrix], accuracy: f64, seed: u64) -> Result<Vec<OrdinalMatrix>> {
    let root = RngStream::new(seed).derive("ordinal-noise");
    gt.iter()
        .enumerate()
        .map(|(i, m)| corrupt_ordinals(m, accuracy, &mut root.derive_indexed("item", i as u64)))
        .collect()
}

pub fn reference_ordinals(
    records: &[DatasetRecord],
    source: &OrdinalSource,
    epsilon: f64,
    skeleton: &Skeleton,
    seed: u64,
) -> Result<Vec<OrdinalMatrix>> {
    match source {
        OrdinalSource::Gt => gt_ordinals(records, epsilon, skeleton),
        OrdinalSource::Noisy { accuracy } => noisy_ordinals(&gt_ordinals(records, epsilon, skeleton)?, *accuracy, seed),
        OrdinalSource::File(map) => records
            .iter()
            .map(|r| {
                map.get(&r.id)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("ordinal file has no entry for item {}", r.id)))
            })
            .collect(),
    }
}

/// Ordinal file: repeated `ITEM <id>` lines, each followed by an `ORDINAL`
/// block. Inconsistent pairs are masked on read.
pub fn read_ordinal_file<R: BufRead>(r: R) -> Result<BTreeMap<String, OrdinalMatrix>> {
    let mut lines = numbered_lines(r);
    let mut out = BTreeMap::new();
    while let Some(item) = lines.next() {
        let (n, line) = item?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 || fields[0] != "ITEM" {
            return Err(Error::parse(n, "expected 'ITEM <id>'"));
        }
        let (nh, header) = lines.next().unwrap_or_else(|| Err(Error::parse(n + 1, "missing ORDINAL block")))?;
        let m = OrdinalMatrix::parse_block(&header, nh, &mut lines)?;
        if out.insert(fields[1].to_string(), m).is_some() {
            return Err(Error::parse(n, format!("duplicate item {}", fields[1])));
        }
    }
    Ok(out)
}

pub fn write_ordinal_file<W: Write>(entries: &[(String, OrdinalMatrix)], mut w: W) -> Result<()> {
    for (id, m) in entries {
        writeln!(w, "ITEM {id}")?;
        m.write(&mut w)?;
    }
    Ok(())
}

/// Mean error of `method` over `items` with every temperature in `grid`
/// (the temperature of that method's ordinal source is overridden).
pub fn temperature_sweep(items: &[AblationItem], method: Method, grid: &[f64], cfg: &ScoringConfig) -> Result<Vec<(f64, f64)>> {
    if !matches!(method, Method::OrdinalGt | Method::OrdinalPred) {
        return Err(Error::InvalidConfig(format!("method {method} has no temperature")));
    }
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if grid.is_empty() {
        return Err(Error::EmptyList);
    }
    grid.iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.temperature_gt = t;
            c.temperature_pred = t;
            let mut total = 0.0;
            for item in items {
                let pose = estimate(item, &item.samples, method, &c)?;
                total += pose_error(&pose, &item.ground_truth, c.metric, c.with_scale)?;
            }
            Ok((t, total / items.len() as f64))
        })
        .collect()
}

/// Lowest-error grid point; the earliest wins ties.
pub fn best_temperature(sweep: &[(f64, f64)]) -> Option<(f64, f64)> {
    sweep
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.1 <= p.1 => Some(b),
            _ => Some(p),
        })
}
