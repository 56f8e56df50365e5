//! Dense network engine: linear, batch norm, ReLU, dropout and residual
//! layers with hand-written backward passes, Adam, gradient checking and
//! checkpoints.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod layers;
mod matrix;
mod network;
mod rng;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, ABS_FLOOR};
pub use layers::{BatchNorm, Dropout, Layer, Linear, Mode, Relu, ResidualBlock};
pub use matrix::{Matrix, Real};
pub use network::{MlpSpec, Network, Parameterized};
pub use rng::RngStream;

use crate::error::{Error, Result};

/// Mean over rows of the squared Euclidean row error, and its gradient
/// w.r.t. `pred`.
pub fn squared_error<T: Real>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(f64, Matrix<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.rows().max(1) as f64;
    let scale = T::of(2.0 / n);
    let mut sum = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        sum += d.as_f64() * d.as_f64();
        *g = scale * d;
    }
    Ok((sum / n, grad))
}
