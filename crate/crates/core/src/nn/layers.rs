//! Layer kinds. Each layer caches what its backward pass needs during
//! `forward`; `infer` is the cache-free eval-mode path.

use crate::error::{Error, Result};
use crate::nn::matrix::{Matrix, Real};
use crate::nn::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug)]
pub struct Linear<T: Real> {
    /// `out x in`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub grad_weight: Matrix<T>,
    pub grad_bias: Vec<T>,
    input: Option<Matrix<T>>,
}

impl<T: Real> Linear<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Linear {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![T::zero(); outputs],
            grad_weight: Matrix::zeros(outputs, inputs),
            grad_bias: vec![T::zero(); outputs],
            input: None,
        }
    }

    /// Kaiming-uniform weights (`U(-sqrt(6/fan_in), sqrt(6/fan_in))`), zero bias.
    pub fn kaiming(inputs: usize, outputs: usize, rng: &mut RngStream) -> Self {
        let mut l = Linear::zeros(inputs, outputs);
        let bound = (6.0 / inputs as f64).sqrt();
        for w in l.weight.data_mut() {
            *w = T::of(rng.uniform_range(-bound, bound));
        }
        l
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut y = x.matmul_nt(&self.weight)?;
        for r in 0..y.rows() {
            for (v, b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v = *v + *b;
            }
        }
        Ok(y)
    }

    fn forward(&mut self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let y = self.apply(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        let x = self.input.as_ref().ok_or(Error::BackwardBeforeForward)?;
        let gw = dy.matmul_tn(x)?;
        for (g, d) in self.grad_weight.data_mut().iter_mut().zip(gw.data()) {
            *g = *g + *d;
        }
        for (g, d) in self.grad_bias.iter_mut().zip(dy.sum_rows()) {
            *g = *g + d;
        }
        dy.matmul(&self.weight)
    }
}

#[derive(Clone, Debug)]
pub struct BatchNorm<T: Real> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub grad_gamma: Vec<T>,
    pub grad_beta: Vec<T>,
    pub momentum: f64,
    pub epsilon: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    xhat: Matrix<T>,
    inv_std: Vec<T>,
    mode: Mode,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(features: usize, momentum: f64, epsilon: f64) -> Self {
        BatchNorm {
            gamma: vec![T::one(); features],
            beta: vec![T::zero(); features],
            running_mean: vec![T::zero(); features],
            running_var: vec![T::one(); features],
            grad_gamma: vec![T::zero(); features],
            grad_beta: vec![T::zero(); features],
            momentum,
            epsilon,
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    fn eval_inv_std(&self) -> Vec<T> {
        let eps = T::of(self.epsilon);
        self.running_var.iter().map(|v| T::one() / (*v + eps).sqrt()).collect()
    }

    fn normalize(&self, x: &Matrix<T>, mean: &[T], inv_std: &[T]) -> (Matrix<T>, Matrix<T>) {
        let mut xhat = x.clone();
        let mut y = x.clone();
        for r in 0..x.rows() {
            let (xr, yr) = (xhat.row_mut(r), y.row_mut(r));
            for c in 0..xr.len() {
                let h = (xr[c] - mean[c]) * inv_std[c];
                xr[c] = h;
                yr[c] = self.gamma[c] * h + self.beta[c];
            }
        }
        (xhat, y)
    }

    fn infer(&self, x: &Matrix<T>) -> Matrix<T> {
        self.normalize(x, &self.running_mean, &self.eval_inv_std()).1
    }

    fn forward(&mut self, x: &Matrix<T>, mode: Mode) -> Result<Matrix<T>> {
        let (mean, inv_std) = match mode {
            Mode::Eval => (self.running_mean.clone(), self.eval_inv_std()),
            Mode::Train => {
                let n = x.rows();
                if n < 2 {
                    return Err(Error::ShapeMismatch(
                        "batch normalization needs at least 2 rows in train mode".into(),
                    ));
                }
                let nf = T::of(n as f64);
                let mean: Vec<T> = x.sum_rows().into_iter().map(|s| s / nf).collect();
                let mut var = vec![T::zero(); x.cols()];
                for r in 0..n {
                    for ((v, &xv), &m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                        let d = xv - m;
                        *v = *v + d * d;
                    }
                }
                var.iter_mut().for_each(|v| *v = *v / nf);
                let mom = T::of(self.momentum);
                let unbias = T::of(n as f64 / (n as f64 - 1.0));
                for c in 0..x.cols() {
                    self.running_mean[c] = (T::one() - mom) * self.running_mean[c] + mom * mean[c];
                    self.running_var[c] = (T::one() - mom) * self.running_var[c] + mom * var[c] * unbias;
                }
                let eps = T::of(self.epsilon);
                let inv: Vec<T> = var.iter().map(|v| T::one() / (*v + eps).sqrt()).collect();
                (mean, inv)
            }
        };
        let (xhat, y) = self.normalize(x, &mean, &inv_std);
        self.cache = Some(BnCache { xhat, inv_std, mode });
        Ok(y)
    }

    fn backward(&mut self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        let cache = self.cache.as_ref().ok_or(Error::BackwardBeforeForward)?;
        let (n, f) = dy.shape();
        let mut sum_dy = vec![T::zero(); f];
        let mut sum_dy_xhat = vec![T::zero(); f];
        for r in 0..n {
            for ((c, &d), &h) in dy.row(r).iter().enumerate().zip(cache.xhat.row(r)) {
                sum_dy[c] = sum_dy[c] + d;
                sum_dy_xhat[c] = sum_dy_xhat[c] + d * h;
            }
        }
        for c in 0..f {
            self.grad_gamma[c] = self.grad_gamma[c] + sum_dy_xhat[c];
            self.grad_beta[c] = self.grad_beta[c] + sum_dy[c];
        }
        let mut dx = Matrix::zeros(n, f);
        match cache.mode {
            Mode::Eval => {
                for r in 0..n {
                    for (c, (o, &d)) in dx.row_mut(r).iter_mut().zip(dy.row(r)).enumerate() {
                        *o = d * self.gamma[c] * cache.inv_std[c];
                    }
                }
            }
            Mode::Train => {
                // dx = gamma * inv_std / n * (n dy - sum(dy) - xhat sum(dy xhat))
                let nf = T::of(n as f64);
                for r in 0..n {
                    let (dyr, hr) = (dy.row(r), cache.xhat.row(r));
                    for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                        let k = self.gamma[c] * cache.inv_std[c] / nf;
                        *o = k * (nf * dyr[c] - sum_dy[c] - hr[c] * sum_dy_xhat[c]);
                    }
                }
            }
        }
        Ok(dx)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    fn infer<T: Real>(x: &Matrix<T>) -> Matrix<T> {
        x.map(|v| if v > T::zero() { v } else { T::zero() })
    }

    fn forward<T: Real>(&mut self, x: &Matrix<T>) -> Matrix<T> {
        self.mask = Some(x.data().iter().map(|&v| v > T::zero()).collect());
        Relu::infer(x)
    }

    fn backward<T: Real>(&self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        let mask = self.mask.as_ref().ok_or(Error::BackwardBeforeForward)?;
        let mut dx = dy.clone();
        for (d, &m) in dx.data_mut().iter_mut().zip(mask) {
            if !m {
                *d = T::zero();
            }
        }
        Ok(dx)
    }
}

/// Inverted dropout: survivors are scaled by `1/(1-rate)` in train mode so
/// eval mode is the identity.
#[derive(Clone, Debug)]
pub struct Dropout<T: Real> {
    pub rate: f64,
    scale: Option<Vec<T>>,
    forwarded: bool,
}

impl<T: Real> Dropout<T> {
    pub fn new(rate: f64) -> Self {
        Dropout {
            rate,
            scale: None,
            forwarded: false,
        }
    }

    fn forward(&mut self, x: &Matrix<T>, mode: Mode, rng: &mut RngStream) -> Matrix<T> {
        self.forwarded = true;
        if mode == Mode::Eval || self.rate <= 0.0 {
            self.scale = None;
            return x.clone();
        }
        let keep = T::of(1.0 / (1.0 - self.rate));
        let scale: Vec<T> = (0..x.data().len())
            .map(|_| if rng.bernoulli(self.rate) { T::zero() } else { keep })
            .collect();
        let mut y = x.clone();
        for (v, s) in y.data_mut().iter_mut().zip(&scale) {
            *v = *v * *s;
        }
        self.scale = Some(scale);
        y
    }

    fn backward(&self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        if !self.forwarded {
            return Err(Error::BackwardBeforeForward);
        }
        let mut dx = dy.clone();
        if let Some(scale) = &self.scale {
            for (d, s) in dx.data_mut().iter_mut().zip(scale) {
                *d = *d * *s;
            }
        }
        Ok(dx)
    }
}

/// `y = x + F(x)` where `F` is two (Linear, BatchNorm, ReLU, Dropout) stacks.
#[derive(Clone, Debug)]
pub struct ResidualBlock<T: Real> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Real> ResidualBlock<T> {
    pub fn new(width: usize, dropout: f64, bn_momentum: f64, bn_eps: f64, rng: &mut RngStream) -> Self {
        let mut layers = Vec::with_capacity(8);
        for _ in 0..2 {
            layers.push(Layer::Linear(Linear::kaiming(width, width, rng)));
            layers.push(Layer::BatchNorm(BatchNorm::new(width, bn_momentum, bn_eps)));
            layers.push(Layer::Relu(Relu::default()));
            layers.push(Layer::Dropout(Dropout::new(dropout)));
        }
        ResidualBlock { layers }
    }
}

#[derive(Clone, Debug)]
pub enum Layer<T: Real> {
    Linear(Linear<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Relu),
    Dropout(Dropout<T>),
    Residual(ResidualBlock<T>),
}

impl<T: Real> Layer<T> {
    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode, rng: &mut RngStream) -> Result<Matrix<T>> {
        match self {
            Layer::Linear(l) => l.forward(x),
            Layer::BatchNorm(b) => b.forward(x, mode),
            Layer::Relu(r) => Ok(r.forward(x)),
            Layer::Dropout(d) => Ok(d.forward(x, mode, rng)),
            Layer::Residual(block) => {
                let mut h = x.clone();
                for l in &mut block.layers {
                    h = l.forward(&h, mode, rng)?;
                }
                add_in_place(&mut h, x);
                Ok(h)
            }
        }
    }

    pub fn backward(&mut self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        match self {
            Layer::Linear(l) => l.backward(dy),
            Layer::BatchNorm(b) => b.backward(dy),
            Layer::Relu(r) => r.backward(dy),
            Layer::Dropout(d) => d.backward(dy),
            Layer::Residual(block) => {
                let mut g = dy.clone();
                for l in block.layers.iter_mut().rev() {
                    g = l.backward(&g)?;
                }
                add_in_place(&mut g, dy);
                Ok(g)
            }
        }
    }

    pub fn infer(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        match self {
            Layer::Linear(l) => l.apply(x),
            Layer::BatchNorm(b) => Ok(b.infer(x)),
            Layer::Relu(_) => Ok(Relu::infer(x)),
            Layer::Dropout(_) => Ok(x.clone()),
            Layer::Residual(block) => {
                let mut h = x.clone();
                for l in &block.layers {
                    h = l.infer(&h)?;
                }
                add_in_place(&mut h, x);
                Ok(h)
            }
        }
    }

    /// Width this layer expects, when it constrains one.
    pub fn input_width(&self) -> Option<usize> {
        match self {
            Layer::Linear(l) => Some(l.inputs()),
            Layer::BatchNorm(b) => Some(b.features()),
            Layer::Residual(block) => block.layers.iter().find_map(|l| l.input_width()),
            _ => None,
        }
    }

    pub fn output_width(&self) -> Option<usize> {
        match self {
            Layer::Linear(l) => Some(l.outputs()),
            Layer::BatchNorm(b) => Some(b.features()),
            Layer::Residual(block) => block.layers.iter().find_map(|l| l.input_width()),
            _ => None,
        }
    }

    /// Trainable `(value, gradient)` pairs.
    pub fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        match self {
            Layer::Linear(l) => {
                f(l.weight.data_mut(), l.grad_weight.data_mut());
                f(&mut l.bias, &mut l.grad_bias);
            }
            Layer::BatchNorm(b) => {
                f(&mut b.gamma, &mut b.grad_gamma);
                f(&mut b.beta, &mut b.grad_beta);
            }
            Layer::Residual(block) => block.layers.iter_mut().for_each(|l| l.visit_params(f)),
            Layer::Relu(_) | Layer::Dropout(_) => {}
        }
    }

    /// Everything a checkpoint must persist: parameters plus running statistics.
    pub fn visit_state(&self, f: &mut dyn FnMut(&[T])) {
        match self {
            Layer::Linear(l) => {
                f(l.weight.data());
                f(&l.bias);
            }
            Layer::BatchNorm(b) => {
                f(&b.gamma);
                f(&b.beta);
                f(&b.running_mean);
                f(&b.running_var);
            }
            Layer::Residual(block) => block.layers.iter().for_each(|l| l.visit_state(f)),
            Layer::Relu(_) | Layer::Dropout(_) => {}
        }
    }

    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        match self {
            Layer::Linear(l) => {
                f(l.weight.data_mut());
                f(&mut l.bias);
            }
            Layer::BatchNorm(b) => {
                f(&mut b.gamma);
                f(&mut b.beta);
                f(&mut b.running_mean);
                f(&mut b.running_var);
            }
            Layer::Residual(block) => block.layers.iter_mut().for_each(|l| l.visit_state_mut(f)),
            Layer::Relu(_) | Layer::Dropout(_) => {}
        }
    }

    pub fn set_dropout(&mut self, rate: f64) {
        match self {
            Layer::Dropout(d) => d.rate = rate,
            Layer::Residual(block) => block.layers.iter_mut().for_each(|l| l.set_dropout(rate)),
            _ => {}
        }
    }
}

fn add_in_place<T: Real>(a: &mut Matrix<T>, b: &Matrix<T>) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x = *x + *y;
    }
}
