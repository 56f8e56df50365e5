//! The conditional VAE and its training objectives.
//!
//! Encoder: `[P3D | P2D] -> [mu | log_var]`. Decoder: `[z | P2D] -> P3D`.
//! All reconstruction errors are squared Euclidean norms of flattened,
//! normalized root-relative poses, averaged over samples and batch rows; the
//! KL term is summed over latent dimensions and averaged over batch rows.

use crate::error::{Error, Result};
use crate::lifter::config::CvaeConfig;
use crate::lifter::normalizer::{PoseNormalizer, TrainingSet};
use crate::nn::{Matrix, Mode, Network, Parameterized, Real, RngStream};

pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;

/// Diagonal Gaussian posterior.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentGaussian {
    mu: Vec<f64>,
    log_var: Vec<f64>,
}

impl LatentGaussian {
    /// `log_var` is clamped to `[-10, 10]`.
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mu.len() != log_var.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: log_var.len(),
            });
        }
        if mu.iter().any(|v| !v.is_finite()) || log_var.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("latent gaussian".into()));
        }
        let log_var = log_var.into_iter().map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX)).collect();
        Ok(LatentGaussian { mu, log_var })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// `KL(q || N(0, I)) = 0.5 * sum(mu^2 + var - log var - 1)`.
pub fn kl_divergence(q: &LatentGaussian) -> f64 {
    q.mu
        .iter()
        .zip(&q.log_var)
        .map(|(m, lv)| 0.5 * (m * m + lv.exp() - lv - 1.0))
        .sum()
}

/// `z = mu + exp(log_var / 2) * eps`, `eps ~ N(0, I)`.
pub fn reparameterize(q: &LatentGaussian, rng: &mut RngStream) -> Vec<f64> {
    q.mu
        .iter()
        .zip(&q.log_var)
        .map(|(m, lv)| m + (0.5 * lv).exp() * rng.normal())
        .collect()
}

#[derive(Clone, Debug)]
pub struct CvaeModel<T: Real = f32> {
    pub encoder: Network<T>,
    pub decoder: Network<T>,
    pub norm: PoseNormalizer,
    pub config: CvaeConfig,
}

impl<T: Real> CvaeModel<T> {
    pub fn new(config: CvaeConfig, norm: PoseNormalizer, rng: &mut RngStream) -> Result<Self> {
        config.validate()?;
        let (d2, d3, l) = (norm.dim2(), norm.dim3(), config.latent_dim);
        let encoder = Network::residual_mlp(&config.mlp(d3 + d2, 2 * l), &mut rng.derive("encoder"));
        let decoder = Network::residual_mlp(&config.mlp(l + d2, d3), &mut rng.derive("decoder"));
        Ok(CvaeModel {
            encoder,
            decoder,
            norm,
            config,
        })
    }

    /// Assembles a model from existing networks, checking widths.
    pub fn from_parts(encoder: Network<T>, decoder: Network<T>, norm: PoseNormalizer, config: CvaeConfig) -> Result<Self> {
        let (d2, d3, l) = (norm.dim2(), norm.dim3(), config.latent_dim);
        if encoder.input_dim() != d3 + d2 || encoder.output_dim() != 2 * l {
            return Err(Error::ShapeMismatch("encoder widths do not match the configuration".into()));
        }
        if decoder.input_dim() != l + d2 || decoder.output_dim() != d3 {
            return Err(Error::ShapeMismatch("decoder widths do not match the configuration".into()));
        }
        Ok(CvaeModel {
            encoder,
            decoder,
            norm,
            config,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn check_batch(&self, batch: &TrainingSet<T>) -> Result<()> {
        if batch.inputs.cols() != self.norm.dim2() || batch.targets.cols() != self.norm.dim3() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {}/{} columns, model expects {}/{}",
                batch.inputs.cols(),
                batch.targets.cols(),
                self.norm.dim2(),
                self.norm.dim3()
            )));
        }
        if batch.inputs.rows() != batch.targets.rows() {
            return Err(Error::ShapeMismatch("input and target row counts differ".into()));
        }
        Ok(())
    }

    /// Posterior for each batch row (eval mode).
    pub fn encode(&self, batch: &TrainingSet<T>) -> Result<Vec<LatentGaussian>> {
        self.check_batch(batch)?;
        let out = self.encoder.infer(&batch.targets.hconcat(&batch.inputs)?)?;
        let l = self.latent_dim();
        (0..out.rows())
            .map(|r| {
                let row: Vec<f64> = out.row(r).iter().map(|v| v.as_f64()).collect();
                LatentGaussian::new(row[..l].to_vec(), row[l..].to_vec())
            })
            .collect()
    }

    /// Decodes `[z | x2d]` rows in eval mode.
    pub fn decode(&self, z: &Matrix<T>, x2d: &Matrix<T>) -> Result<Matrix<T>> {
        self.decoder.infer(&z.hconcat(x2d)?)
    }
}

impl<T: Real> Parameterized<T> for CvaeModel<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        self.encoder.visit_params(f);
        self.decoder.visit_params(f);
    }
}

/// Standard-normal draws for one evaluation of the hybrid objective. Both
/// matrices are `(k_train * batch) x latent_dim`, sample-major.
#[derive(Clone, Debug)]
pub struct LossNoise<T: Real> {
    pub posterior: Matrix<T>,
    pub prior: Matrix<T>,
}

impl<T: Real> LossNoise<T> {
    pub fn draw(rng: &mut RngStream, k: usize, batch: usize, latent: usize) -> Self {
        LossNoise {
            posterior: normal_matrix(rng, k * batch, latent),
            prior: normal_matrix(rng, k * batch, latent),
        }
    }
}

pub(crate) fn normal_matrix<T: Real>(rng: &mut RngStream, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| T::of(rng.normal())).collect())
        .expect("sized by construction")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvaeLoss {
    pub total: f64,
    pub kl: f64,
    pub recon: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HybridLoss {
    pub total: f64,
    pub cvae: CvaeLoss,
    pub gsnn: f64,
}

/// Mean squared row norm of `out - target`, and `scale * d/d out`.
fn reconstruction<T: Real>(out: &Matrix<T>, target: &Matrix<T>, scale: f64) -> (f64, Matrix<T>) {
    let n = out.rows() as f64;
    let g = T::of(2.0 * scale / n);
    let mut grad = Matrix::zeros(out.rows(), out.cols());
    let mut sum = 0.0;
    for ((o, &y), &t) in grad.data_mut().iter_mut().zip(out.data()).zip(target.data()) {
        let d = y - t;
        sum += d.as_f64() * d.as_f64();
        *o = g * d;
    }
    (sum / n, grad)
}

/// `lambda1 * KL + lambda2 * E_q ||P3D - Dec(z, P2D)||^2` with
/// `z = mu + sigma * eps` for the given `eps`.
///
/// Gradients, scaled by `weight`, are accumulated into encoder and decoder.
pub fn cvae_loss_with<T: Real>(
    model: &mut CvaeModel<T>,
    batch: &TrainingSet<T>,
    eps: &Matrix<T>,
    weight: f64,
    rng: &mut RngStream,
) -> Result<CvaeLoss> {
    model.check_batch(batch)?;
    let b = batch.len();
    let l = model.latent_dim();
    if eps.cols() != l || eps.rows() == 0 || eps.rows() % b.max(1) != 0 {
        return Err(Error::ShapeMismatch(format!(
            "noise is {:?}, expected (k * {b}) x {l}",
            eps.shape()
        )));
    }
    let k = eps.rows() / b;
    let (l1, l2) = (model.config.lambda1, model.config.lambda2);

    let enc_out = model
        .encoder
        .forward(&batch.targets.hconcat(&batch.inputs)?, Mode::Train, rng)?;
    let (mu, raw_lv) = enc_out.hsplit(l);
    let (lo, hi) = (T::of(LOG_VAR_MIN), T::of(LOG_VAR_MAX));
    let log_var = raw_lv.map(|v| v.max(lo).min(hi));
    let sigma = log_var.map(|v| (v * T::of(0.5)).exp());

    let mut z = Matrix::zeros(k * b, l);
    for s in 0..k {
        for r in 0..b {
            let row = s * b + r;
            for d in 0..l {
                z.set(row, d, mu.get(r, d) + sigma.get(r, d) * eps.get(row, d));
            }
        }
    }
    let out = model
        .decoder
        .forward(&z.hconcat(&batch.inputs.tile_rows(k))?, Mode::Train, rng)?;
    let (recon, d_out) = reconstruction(&out, &batch.targets.tile_rows(k), weight * l2);

    let mut kl = 0.0;
    for (m, lv) in mu.data().iter().zip(log_var.data()) {
        let (m, lv) = (m.as_f64(), lv.as_f64());
        kl += 0.5 * (m * m + lv.exp() - lv - 1.0);
    }
    kl /= b as f64;

    let d_in = model.decoder.backward(&d_out)?;
    let (dz, _) = d_in.hsplit(l);
    let kl_scale = T::of(weight * l1 / b as f64);
    let half = T::of(0.5);
    let mut d_enc = Matrix::zeros(b, 2 * l);
    for r in 0..b {
        for d in 0..l {
            let (m, lv, sg) = (mu.get(r, d), log_var.get(r, d), sigma.get(r, d));
            let mut dmu = kl_scale * m;
            let mut dlv = kl_scale * half * (lv.exp() - T::one());
            for s in 0..k {
                let row = s * b + r;
                let g = dz.get(row, d);
                dmu = dmu + g;
                dlv = dlv + g * eps.get(row, d) * sg * half;
            }
            let raw = raw_lv.get(r, d);
            if raw < lo || raw > hi {
                dlv = T::zero();
            }
            d_enc.set(r, d, dmu);
            d_enc.set(r, l + d, dlv);
        }
    }
    model.encoder.backward(&d_enc)?;

    Ok(CvaeLoss {
        total: l1 * kl + l2 * recon,
        kl,
        recon,
    })
}

/// `E_{z ~ N(0, I)} ||P3D - Dec(z, P2D)||^2` for the given prior draws.
/// Only the decoder receives gradients (scaled by `weight`).
pub fn gsnn_loss_with<T: Real>(
    model: &mut CvaeModel<T>,
    batch: &TrainingSet<T>,
    z: &Matrix<T>,
    weight: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    model.check_batch(batch)?;
    let b = batch.len();
    if z.cols() != model.latent_dim() || z.rows() == 0 || z.rows() % b.max(1) != 0 {
        return Err(Error::ShapeMismatch(format!("prior draws are {:?}", z.shape())));
    }
    let k = z.rows() / b;
    let out = model
        .decoder
        .forward(&z.hconcat(&batch.inputs.tile_rows(k))?, Mode::Train, rng)?;
    let (recon, d_out) = reconstruction(&out, &batch.targets.tile_rows(k), weight);
    model.decoder.backward(&d_out)?;
    Ok(recon)
}

/// `alpha * L_cvae + (1 - alpha) * L_gsnn` with frozen noise.
pub fn hybrid_loss_with<T: Real>(
    model: &mut CvaeModel<T>,
    batch: &TrainingSet<T>,
    noise: &LossNoise<T>,
    rng: &mut RngStream,
) -> Result<HybridLoss> {
    let alpha = model.config.alpha;
    let cvae = cvae_loss_with(model, batch, &noise.posterior, alpha, rng)?;
    let gsnn = gsnn_loss_with(model, batch, &noise.prior, 1.0 - alpha, rng)?;
    Ok(HybridLoss {
        total: alpha * cvae.total + (1.0 - alpha) * gsnn,
        cvae,
        gsnn,
    })
}

pub fn cvae_loss<T: Real>(model: &mut CvaeModel<T>, batch: &TrainingSet<T>, rng: &mut RngStream) -> Result<CvaeLoss> {
    let eps = normal_matrix(rng, model.config.k_train * batch.len(), model.latent_dim());
    cvae_loss_with(model, batch, &eps, 1.0, rng)
}

pub fn gsnn_loss<T: Real>(model: &mut CvaeModel<T>, batch: &TrainingSet<T>, rng: &mut RngStream) -> Result<f64> {
    let z = normal_matrix(rng, model.config.k_train * batch.len(), model.latent_dim());
    gsnn_loss_with(model, batch, &z, 1.0, rng)
}

pub fn hybrid_loss<T: Real>(model: &mut CvaeModel<T>, batch: &TrainingSet<T>, rng: &mut RngStream) -> Result<HybridLoss> {
    let noise = LossNoise::draw(rng, model.config.k_train, batch.len(), model.latent_dim());
    hybrid_loss_with(model, batch, &noise, rng)
}
