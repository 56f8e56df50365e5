use crate::error::{Error, Result};
use crate::lifter::SampleSet;
use crate::ordinal::matrix::OrdinalMatrix;
use crate::pose::Pose3D;

/// Default softmax temperature for ground-truth reference ordinals.
pub const TEMPERATURE_GT: f64 = 0.9;
/// Default softmax temperature for predicted or simulated ordinals.
pub const TEMPERATURE_PREDICTED: f64 = 0.3;
/// Default tolerance (mm) of the "roughly equal" depth relation.
pub const DEFAULT_EPSILON_MM: f64 = 100.0;

/// Number of ordered pairs `i != j`, unmasked in `reference`, on which the
/// two matrices agree.
pub fn score(candidate: &OrdinalMatrix, reference: &OrdinalMatrix) -> Result<usize> {
    if candidate.size() != reference.size() {
        return Err(Error::DimensionMismatch {
            expected: reference.size(),
            got: candidate.size(),
        });
    }
    let n = reference.size();
    let (c, r) = (candidate.raw_codes(), reference.raw_codes());
    let mut hits = 0;
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if i != j && r[k] != 0 && c[k] == r[k] {
                hits += 1;
            }
        }
    }
    Ok(hits)
}

/// `w_k = exp(T * s_k) / sum_l exp(T * s_l)`, evaluated after subtracting
/// the maximum score.
pub fn softmax_weights(scores: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyList);
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidConfig(format!("temperature must be finite and >= 0, got {temperature}")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (temperature * (s - max)).exp()).collect();
    let sum: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / sum).collect())
}

/// Weighted per-joint average of the candidates. The result is clamped to
/// the coordinate-wise range of the candidates.
pub fn aggregate(samples: &SampleSet, weights: &[f64]) -> Result<Pose3D> {
    if weights.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: samples.len(),
            got: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("weights must be a distribution (sum {sum})")));
    }
    let nj = samples.num_joints();
    let cands = samples.candidates();
    let mut out = vec![[0.0; 3]; nj];
    for (j, o) in out.iter_mut().enumerate() {
        for a in 0..3 {
            let mut acc = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (c, w) in cands.iter().zip(weights) {
                let v = c.joint(j)[a];
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            o[a] = acc.clamp(lo, hi);
        }
    }
    Pose3D::new(out)
}

/// Uniform average of all candidates.
pub fn mean_pose(samples: &SampleSet) -> Pose3D {
    let k = samples.len();
    aggregate(samples, &vec![1.0 / k as f64; k]).expect("uniform weights are valid")
}

/// Euclidean norm of the flattened difference of two poses.
pub fn flat_distance(a: &Pose3D, b: &Pose3D) -> Result<f64> {
    if a.num_joints() != b.num_joints() {
        return Err(Error::DimensionMismatch {
            expected: b.num_joints(),
            got: a.num_joints(),
        });
    }
    Ok(a
        .joints()
        .iter()
        .zip(b.joints())
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt())
}

/// The candidate closest to `ground_truth` in flattened Euclidean norm;
/// ties go to the lowest index.
pub fn oracle_select(samples: &SampleSet, ground_truth: &Pose3D) -> Result<(usize, Pose3D)> {
    let mut best = (0, f64::INFINITY);
    for (k, c) in samples.candidates().iter().enumerate() {
        let d = flat_distance(c, ground_truth)?;
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok((best.0, samples.candidates()[best.0].clone()))
}

/// A sample set together with its ordinal scores and softmax weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSamples {
    pub samples: SampleSet,
    pub scores: Vec<usize>,
    pub weights: Vec<f64>,
    pub temperature: f64,
}

impl ScoredSamples {
    pub fn estimate(&self) -> Pose3D {
        aggregate(&self.samples, &self.weights).expect("weights validated at construction")
    }
}

/// Scores every candidate against `reference` and converts the scores to
/// weights. A reference with no usable pair yields uniform weights.
pub fn score_samples(
    samples: &SampleSet,
    reference: &OrdinalMatrix,
    epsilon: f64,
    scoring_joints: &[usize],
    temperature: f64,
) -> Result<ScoredSamples> {
    let scores = samples
        .candidates()
        .iter()
        .map(|c| score(&OrdinalMatrix::from_pose(c, epsilon, scoring_joints)?, reference))
        .collect::<Result<Vec<_>>>()?;
    let weights = if reference.unmasked_pairs() == 0 {
        log::warn!("reference ordinal matrix is fully masked; using uniform weights");
        vec![1.0 / samples.len() as f64; samples.len()]
    } else {
        softmax_weights(&scores.iter().map(|&s| s as f64).collect::<Vec<_>>(), temperature)?
    };
    let mut samples = samples.clone();
    samples.set_scores(scores.iter().map(|&s| s as f64).collect())?;
    samples.set_weights(weights.clone())?;
    Ok(ScoredSamples {
        samples,
        scores,
        weights,
        temperature,
    })
}
