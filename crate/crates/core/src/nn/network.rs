use crate::error::{Error, Result};
use crate::nn::layers::{BatchNorm, Dropout, Layer, Linear, Mode, Relu, ResidualBlock};
use crate::nn::matrix::{Matrix, Real};
use crate::nn::rng::RngStream;

/// Anything holding trainable parameters with matching gradient buffers.
/// Visit order must be stable: optimizers and gradient checks index by it.
pub trait Parameterized<T: Real> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T]));

    fn zero_grad(&mut self) {
        self.visit_params(&mut |_, g| g.iter_mut().for_each(|v| *v = T::zero()));
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p, _| n += p.len());
        n
    }

    fn param_values(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_params(&mut |p, _| out.extend_from_slice(p));
        out
    }

    fn grad_values(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, g| out.extend_from_slice(g));
        out
    }

    /// Applies `f` to the parameter at flat index `index`.
    fn with_param(&mut self, index: usize, f: &mut dyn FnMut(&mut T)) {
        let mut offset = 0;
        let mut done = false;
        self.visit_params(&mut |p, _| {
            if !done && index < offset + p.len() {
                f(&mut p[index - offset]);
                done = true;
            }
            offset += p.len();
        });
        assert!(done, "parameter index {index} out of range");
    }
}

/// Shape and regularization of a residual MLP:
/// `Linear -> BN -> ReLU -> Dropout -> [ResidualBlock] x blocks -> Linear`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub blocks: usize,
    pub dropout: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: usize, output: usize, blocks: usize) -> Self {
        MlpSpec {
            input,
            hidden,
            output,
            blocks,
            dropout: 0.5,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Network<T: Real> {
    layers: Vec<Layer<T>>,
    input_dim: usize,
    output_dim: usize,
}

impl<T: Real> Network<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        let mut width: Option<usize> = None;
        let mut input_dim = None;
        for (i, l) in layers.iter().enumerate() {
            if let Some(w) = l.input_width() {
                if let Some(cur) = width {
                    if cur != w {
                        return Err(Error::ShapeMismatch(format!(
                            "layer {i} expects width {w} but receives {cur}"
                        )));
                    }
                }
                input_dim.get_or_insert(w);
            }
            if let Some(w) = l.output_width() {
                width = Some(w);
            }
        }
        match (input_dim, width) {
            (Some(i), Some(o)) => Ok(Network {
                layers,
                input_dim: i,
                output_dim: o,
            }),
            _ => Err(Error::ShapeMismatch("network needs at least one sized layer".into())),
        }
    }

    pub fn residual_mlp(spec: &MlpSpec, rng: &mut RngStream) -> Self {
        let mut layers = vec![
            Layer::Linear(Linear::kaiming(spec.input, spec.hidden, rng)),
            Layer::BatchNorm(BatchNorm::new(spec.hidden, spec.bn_momentum, spec.bn_eps)),
            Layer::Relu(Relu::default()),
            Layer::Dropout(Dropout::new(spec.dropout)),
        ];
        for _ in 0..spec.blocks {
            layers.push(Layer::Residual(ResidualBlock::new(
                spec.hidden,
                spec.dropout,
                spec.bn_momentum,
                spec.bn_eps,
                rng,
            )));
        }
        layers.push(Layer::Linear(Linear::kaiming(spec.hidden, spec.output, rng)));
        Network::new(layers).expect("residual MLP widths are consistent")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.input_dim,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Forward pass that records what `backward` needs.
    pub fn forward(&mut self, x: &Matrix<T>, mode: Mode, rng: &mut RngStream) -> Result<Matrix<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for l in &mut self.layers {
            h = l.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    /// Propagates `dy` back through the last `forward`, accumulating
    /// parameter gradients, and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, dy: &Matrix<T>) -> Result<Matrix<T>> {
        if dy.cols() != self.output_dim {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient has {} columns, network outputs {}",
                dy.cols(),
                self.output_dim
            )));
        }
        let mut g = dy.clone();
        for l in self.layers.iter_mut().rev() {
            g = l.backward(&g)?;
        }
        Ok(g)
    }

    /// Eval-mode forward without touching any cache.
    pub fn infer(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for l in &self.layers {
            h = l.infer(&h)?;
        }
        Ok(h)
    }

    pub fn set_dropout(&mut self, rate: f64) {
        self.layers.iter_mut().for_each(|l| l.set_dropout(rate));
    }

    pub fn visit_state(&self, f: &mut dyn FnMut(&[T])) {
        self.layers.iter().for_each(|l| l.visit_state(f));
    }

    pub fn visit_state_mut(&mut self, f: &mut dyn FnMut(&mut [T])) {
        self.layers.iter_mut().for_each(|l| l.visit_state_mut(f));
    }

    /// Converts parameters and running statistics to another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        fn conv<T: Real, U: Real>(l: &Layer<T>) -> Layer<U> {
            let v = |s: &[T]| s.iter().map(|x| U::of(x.as_f64())).collect::<Vec<U>>();
            match l {
                Layer::Linear(lin) => {
                    let mut o = Linear::zeros(lin.inputs(), lin.outputs());
                    o.weight = lin.weight.cast();
                    o.bias = v(&lin.bias);
                    Layer::Linear(o)
                }
                Layer::BatchNorm(b) => {
                    let mut o = BatchNorm::new(b.features(), b.momentum, b.epsilon);
                    o.gamma = v(&b.gamma);
                    o.beta = v(&b.beta);
                    o.running_mean = v(&b.running_mean);
                    o.running_var = v(&b.running_var);
                    Layer::BatchNorm(o)
                }
                Layer::Relu(_) => Layer::Relu(Relu::default()),
                Layer::Dropout(d) => Layer::Dropout(Dropout::new(d.rate)),
                Layer::Residual(block) => Layer::Residual(ResidualBlock {
                    layers: block.layers.iter().map(conv).collect(),
                }),
            }
        }
        Network {
            layers: self.layers.iter().map(conv).collect(),
            input_dim: self.input_dim,
            output_dim: self.output_dim,
        }
    }
}

impl<T: Real> Parameterized<T> for Network<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut [T], &mut [T])) {
        self.layers.iter_mut().for_each(|l| l.visit_params(f));
    }
}
