use crate::error::{Error, Result};
use crate::nn::{Matrix, Real};
use crate::pose::{center_at_hip, fit_norm_stats, NormSpace, NormStats, Pose2D, Pose3D, Skeleton};

/// Maps poses to and from the normalized vectors the networks see.
///
/// 2D input: all 2D joints, flattened. 3D output: every joint except the
/// root after hip-centering (the root is identically zero), flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseNormalizer {
    stats2d: NormStats,
    stats3d: NormStats,
    root: usize,
}

impl PoseNormalizer {
    pub fn new(stats2d: NormStats, stats3d: NormStats, root: usize) -> Result<Self> {
        if stats3d.dim() % 3 != 0 || stats2d.dim() % 2 != 0 {
            return Err(Error::ShapeMismatch("normalization dimensions do not match pose layouts".into()));
        }
        Ok(PoseNormalizer { stats2d, stats3d, root })
    }

    pub fn fit(p2d: &[Pose2D], p3d: &[Pose3D], skeleton: &Skeleton) -> Result<Self> {
        if p2d.len() != p3d.len() {
            return Err(Error::DimensionMismatch {
                expected: p2d.len(),
                got: p3d.len(),
            });
        }
        if p2d.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let flat2: Vec<Vec<f64>> = p2d.iter().map(Pose2D::to_flat).collect();
        let flat3: Vec<Vec<f64>> = p3d
            .iter()
            .map(|p| Ok(center_at_hip(p, skeleton)?.to_rootless_flat(skeleton.root())))
            .collect::<Result<_>>()?;
        Ok(PoseNormalizer {
            stats2d: fit_norm_stats(flat2.iter().map(Vec::as_slice), NormSpace::Pose2D)?,
            stats3d: fit_norm_stats(flat3.iter().map(Vec::as_slice), NormSpace::Pose3DRootCentered)?,
            root: skeleton.root(),
        })
    }

    /// Unit statistics: normalization is the identity.
    pub fn identity(dim2: usize, dim3: usize, root: usize) -> Self {
        PoseNormalizer {
            stats2d: NormStats::new(vec![0.0; dim2], vec![1.0; dim2], NormSpace::Pose2D).unwrap(),
            stats3d: NormStats::new(vec![0.0; dim3], vec![1.0; dim3], NormSpace::Pose3DRootCentered).unwrap(),
            root,
        }
    }

    pub fn stats2d(&self) -> &NormStats {
        &self.stats2d
    }

    pub fn stats3d(&self) -> &NormStats {
        &self.stats3d
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn dim2(&self) -> usize {
        self.stats2d.dim()
    }

    pub fn dim3(&self) -> usize {
        self.stats3d.dim()
    }

    pub fn encode_2d(&self, p: &Pose2D) -> Result<Vec<f64>> {
        self.stats2d.normalize(&p.to_flat())
    }

    pub fn encode_3d(&self, p: &Pose3D) -> Result<Vec<f64>> {
        if self.root >= p.num_joints() {
            return Err(Error::DimensionMismatch {
                expected: self.dim3() / 3 + 1,
                got: p.num_joints(),
            });
        }
        let r = p.joint(self.root);
        let centered = p.translated([-r[0], -r[1], -r[2]]);
        self.stats3d.normalize(&centered.to_rootless_flat(self.root))
    }

    pub fn decode_3d(&self, v: &[f64]) -> Result<Pose3D> {
        Pose3D::from_rootless_flat(&self.stats3d.denormalize(v)?, self.root)
    }

    pub fn encode_2d_batch<T: Real>(&self, poses: &[Pose2D]) -> Result<Matrix<T>> {
        let mut data = Vec::with_capacity(poses.len() * self.dim2());
        for p in poses {
            data.extend(self.encode_2d(p)?.into_iter().map(T::of));
        }
        Matrix::from_vec(poses.len(), self.dim2(), data)
    }

    pub fn encode_3d_batch<T: Real>(&self, poses: &[Pose3D]) -> Result<Matrix<T>> {
        let mut data = Vec::with_capacity(poses.len() * self.dim3());
        for p in poses {
            data.extend(self.encode_3d(p)?.into_iter().map(T::of));
        }
        Matrix::from_vec(poses.len(), self.dim3(), data)
    }

    pub fn decode_3d_batch<T: Real>(&self, m: &Matrix<T>) -> Result<Vec<Pose3D>> {
        (0..m.rows())
            .map(|r| {
                let v: Vec<f64> = m.row(r).iter().map(|x| x.as_f64()).collect();
                self.decode_3d(&v)
            })
            .collect()
    }
}

/// Normalized `(2D input, 3D target)` rows.
#[derive(Clone, Debug)]
pub struct TrainingSet<T: Real> {
    pub inputs: Matrix<T>,
    pub targets: Matrix<T>,
}

impl<T: Real> TrainingSet<T> {
    pub fn build(norm: &PoseNormalizer, p2d: &[Pose2D], p3d: &[Pose3D]) -> Result<Self> {
        if p2d.len() != p3d.len() {
            return Err(Error::DimensionMismatch {
                expected: p2d.len(),
                got: p3d.len(),
            });
        }
        Ok(TrainingSet {
            inputs: norm.encode_2d_batch(p2d)?,
            targets: norm.encode_3d_batch(p3d)?,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn batch(&self, rows: &[usize]) -> TrainingSet<T> {
        TrainingSet {
            inputs: self.inputs.select_rows(rows),
            targets: self.targets.select_rows(rows),
        }
    }
}
