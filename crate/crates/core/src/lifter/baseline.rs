use crate::error::Result;
use crate::lifter::config::CvaeConfig;
use crate::lifter::normalizer::PoseNormalizer;
use crate::nn::{Matrix, Network, Parameterized, Real, RngStream};
use crate::pose::{Pose2D, Pose3D};

/// Deterministic 2D-to-3D regressor with the same residual topology as the
/// CVAE decoder but no latent input.
#[derive(Clone, Debug)]
pub struct BaselineModel<T: Real = f32> {
    pub net: Network<T>,
    pub norm: PoseNormalizer,
    pub config: CvaeConfig,
}

impl<T: Real> BaselineModel<T> {
    pub fn new(config: CvaeConfig, norm: PoseNormalizer, rng: &mut RngStream) -> Result<Self> {
        config.validate()?;
        let net = Network::residual_mlp(&config.mlp(norm.dim2(), norm.dim3()), &mut rng.derive("baseline"));
        Ok(BaselineModel { net, norm, config })
    }

    pub fn regress_batch(&self, poses: &[Pose2D]) -> Result<Vec<Pose3D>> {
        let x: Matrix<T> = self.norm.encode_2d_batch(poses)?;
        self.norm.decode_3d_batch(&self.net.infer(&x)?)
    }
}

impl<T: Real> Parameterized<T> for BaselineModel<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        self.net.visit_params(f);
    }
}

/// Single deterministic prediction, root-centered, in millimeters.
pub fn baseline_regress<T: Real>(model: &BaselineModel<T>, p2d: &Pose2D) -> Result<Pose3D> {
    Ok(model.regress_batch(std::slice::from_ref(p2d))?.remove(0))
}
