//! 2D-to-3D lifting models: the multi-hypothesis CVAE and the deterministic
//! baseline regressor, their objectives, training loops and sampling.

mod baseline;
mod config;
mod cvae;
mod io;
mod normalizer;
mod sampling;
mod train;

pub use baseline::{baseline_regress, BaselineModel};
pub use config::CvaeConfig;
pub use cvae::{
    cvae_loss, cvae_loss_with, gsnn_loss, gsnn_loss_with, hybrid_loss, hybrid_loss_with, kl_divergence,
    reparameterize, CvaeLoss, CvaeModel, HybridLoss, LatentGaussian, LossNoise, LOG_VAR_MAX, LOG_VAR_MIN,
};
pub use io::LifterModel;
pub use normalizer::{PoseNormalizer, TrainingSet};
pub use sampling::{baseline_gaussian_sample, sample_candidates, SampleSet};
pub use train::{train_baseline, train_cvae, TrainLog};

#[cfg(test)]
mod tests;
