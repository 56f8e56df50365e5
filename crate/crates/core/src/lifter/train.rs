use crate::error::{Error, Result};
use crate::lifter::baseline::BaselineModel;
use crate::lifter::config::CvaeConfig;
use crate::lifter::cvae::{hybrid_loss_with, CvaeModel, LossNoise};
use crate::lifter::normalizer::TrainingSet;
use crate::nn::{squared_error, Adam, Mode, Parameterized, Real, RngStream};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Mean mini-batch objective per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Shuffled mini-batches; a trailing batch with fewer than two rows is
/// dropped because batch normalization needs two.
pub(crate) fn minibatches(n: usize, batch_size: usize, rng: &mut RngStream) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    order
        .chunks(batch_size.max(2))
        .filter(|c| c.len() >= 2)
        .map(<[usize]>::to_vec)
        .collect()
}

fn run_epochs<T, M, F>(
    model: &mut M,
    data: &TrainingSet<T>,
    config: &CvaeConfig,
    rng: &RngStream,
    mut step: F,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<TrainLog>
where
    T: Real,
    M: Parameterized<T>,
    F: FnMut(&mut M, &TrainingSet<T>, &mut RngStream) -> Result<f64>,
{
    if data.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    let mut adam = Adam::new(config.adam());
    let mut step_rng = rng.derive("step");
    let mut log = TrainLog::default();
    for epoch in 0..config.epochs {
        adam.set_epoch(epoch);
        let mut shuffle = rng.derive_indexed("shuffle", epoch as u64);
        let batches = minibatches(data.len(), config.batch_size, &mut shuffle);
        let mut total = 0.0;
        for rows in &batches {
            let batch = data.batch(rows);
            model.zero_grad();
            total += step(model, &batch, &mut step_rng)?;
            adam.step(model);
        }
        let mean = total / batches.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        log.epoch_losses.push(mean);
        progress(epoch, mean);
    }
    Ok(log)
}

/// Mini-batch Adam on the hybrid objective. The model is left in a state
/// suitable for eval-mode inference.
pub fn train_cvae<T: Real>(
    model: &mut CvaeModel<T>,
    data: &TrainingSet<T>,
    rng: &RngStream,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainLog> {
    let config = model.config.clone();
    config.validate()?;
    run_epochs(
        model,
        data,
        &config,
        rng,
        |m, batch, r| {
            let noise = LossNoise::draw(r, config.k_train, batch.len(), config.latent_dim);
            Ok(hybrid_loss_with(m, batch, &noise, r)?.total)
        },
        &mut progress,
    )
}

/// Plain squared-error regression with the same schedule as the CVAE.
pub fn train_baseline<T: Real>(
    model: &mut BaselineModel<T>,
    data: &TrainingSet<T>,
    rng: &RngStream,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainLog> {
    let config = model.config.clone();
    config.validate()?;
    run_epochs(
        model,
        data,
        &config,
        rng,
        |m, batch, r| {
            let out = m.net.forward(&batch.inputs, Mode::Train, r)?;
            let (loss, grad) = squared_error(&out, &batch.targets)?;
            m.net.backward(&grad)?;
            Ok(loss)
        },
        &mut progress,
    )
}
