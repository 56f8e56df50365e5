use crate::error::{Error, Result};
use crate::lifter::cvae::{normal_matrix, CvaeModel};
use crate::nn::{Matrix, Real, RngStream};
use crate::pose::{Pose2D, Pose3D};

/// An ordered set of root-centered candidate poses with optional scores and
/// weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    candidates: Vec<Pose3D>,
    scores: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(candidates: Vec<Pose3D>) -> Result<Self> {
        let first = candidates.first().ok_or(Error::EmptyList)?;
        if let Some(c) = candidates.iter().find(|c| c.num_joints() != first.num_joints()) {
            return Err(Error::DimensionMismatch {
                expected: first.num_joints(),
                got: c.num_joints(),
            });
        }
        Ok(SampleSet {
            candidates,
            scores: None,
            weights: None,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        self.candidates[0].num_joints()
    }

    pub fn candidates(&self) -> &[Pose3D] {
        &self.candidates
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn set_scores(&mut self, scores: Vec<f64>) -> Result<()> {
        if scores.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: scores.len(),
            });
        }
        self.scores = Some(scores);
        Ok(())
    }

    /// Weights must be non-negative and sum to one within `1e-9`.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("weights must be a distribution (sum {sum})")));
        }
        self.weights = Some(weights);
        Ok(())
    }

    /// The first `k` candidates (scores and weights dropped).
    pub fn prefix(&self, k: usize) -> Result<SampleSet> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidConfig(format!("prefix {k} of a {}-sample set", self.len())));
        }
        SampleSet::new(self.candidates[..k].to_vec())
    }
}

/// Decodes `k` prior draws conditioned on `p2d`. Latents are drawn from
/// `rng` in candidate order, so a longer draw extends a shorter one.
pub fn sample_candidates<T: Real>(model: &CvaeModel<T>, p2d: &Pose2D, k: usize, rng: &mut RngStream) -> Result<SampleSet> {
    if k == 0 {
        return Err(Error::EmptyList);
    }
    let x: Matrix<T> = model.norm.encode_2d_batch(std::slice::from_ref(p2d))?;
    let z = normal_matrix::<T>(rng, k, model.latent_dim());
    let out = model.decode(&z, &x.tile_rows(k))?;
    SampleSet::new(model.norm.decode_3d_batch(&out)?)
}

/// Perturbs every non-root joint coordinate of `base` with independent
/// `N(0, variance)` noise (variance in mm^2). The root stays at its place.
pub fn baseline_gaussian_sample(
    base: &Pose3D,
    variance: f64,
    k: usize,
    root: usize,
    rng: &mut RngStream,
) -> Result<SampleSet> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::NonPositiveVariance(variance));
    }
    if k == 0 {
        return Err(Error::EmptyList);
    }
    let sd = variance.sqrt();
    let candidates = (0..k)
        .map(|_| {
            let joints = base
                .joints()
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    if j == root {
                        *p
                    } else {
                        [p[0] + sd * rng.normal(), p[1] + sd * rng.normal(), p[2] + sd * rng.normal()]
                    }
                })
                .collect();
            Pose3D::new(joints)
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSet::new(candidates)
}
