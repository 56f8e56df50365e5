use crate::nn::matrix::Real;
use crate::nn::network::Parameterized;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning rate is multiplied by this every `decay_every` epochs.
    pub decay_rate: f64,
    pub decay_every: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 2.5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay_rate: 0.96,
            decay_every: 4,
        }
    }
}

/// Adam with bias correction and a stepwise exponential learning-rate decay.
#[derive(Clone, Debug)]
pub struct Adam<T: Real> {
    config: AdamConfig,
    lr: f64,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            lr: config.learning_rate,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Sets the decayed learning rate for a 0-based epoch.
    pub fn set_epoch(&mut self, epoch: usize) {
        let every = self.config.decay_every.max(1);
        self.lr = self.config.learning_rate * self.config.decay_rate.powi((epoch / every) as i32);
    }

    pub fn step<P: Parameterized<T> + ?Sized>(&mut self, model: &mut P) {
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (one_b1, one_b2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
        let bc1 = T::of(1.0 - c.beta1.powi(t));
        let bc2 = T::of(1.0 - c.beta2.powi(t));
        let lr = T::of(self.lr);
        let eps = T::of(c.epsilon);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut slot = 0;
        model.visit_params(&mut |p, g| {
            if ms.len() <= slot {
                ms.push(vec![T::zero(); p.len()]);
                vs.push(vec![T::zero(); p.len()]);
            }
            let (m, v) = (&mut ms[slot], &mut vs[slot]);
            assert_eq!(m.len(), p.len(), "parameter layout changed between steps");
            for i in 0..p.len() {
                m[i] = b1 * m[i] + one_b1 * g[i];
                v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] = p[i] - lr * mhat / (vhat.sqrt() + eps);
            }
            slot += 1;
        });
    }
}
