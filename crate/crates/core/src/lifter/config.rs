use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, MlpSpec};

/// Hyperparameters shared by the CVAE and the baseline regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct CvaeConfig {
    /// KL weight.
    pub lambda1: f64,
    /// Reconstruction weight.
    pub lambda2: f64,
    /// Mixing weight between the CVAE and GSNN objectives.
    pub alpha: f64,
    pub k_train: usize,
    pub k_test: usize,
    pub latent_dim: usize,
    pub hidden_dim: usize,
    pub blocks: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub decay_rate: f64,
    pub decay_every: usize,
}

impl Default for CvaeConfig {
    fn default() -> Self {
        CvaeConfig {
            lambda1: 10.0,
            lambda2: 100.0,
            alpha: 0.5,
            k_train: 10,
            k_test: 200,
            latent_dim: 48,
            hidden_dim: 1024,
            blocks: 2,
            dropout: 0.5,
            epochs: 200,
            batch_size: 256,
            base_lr: 2.5e-4,
            decay_rate: 0.96,
            decay_every: 4,
        }
    }
}

impl CvaeConfig {
    /// Small preset that trains on one CPU core in minutes.
    pub fn desk() -> Self {
        CvaeConfig {
            latent_dim: 16,
            hidden_dim: 256,
            blocks: 1,
            epochs: 50,
            ..CvaeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return bad("lambda1 and lambda2 must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.k_train == 0 || self.k_test == 0 {
            return bad("k_train and k_test must be at least 1");
        }
        if self.latent_dim == 0 || self.hidden_dim == 0 {
            return bad("latent_dim and hidden_dim must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if !(self.base_lr > 0.0) || !(self.decay_rate > 0.0) {
            return bad("learning rate and decay must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.base_lr,
            decay_rate: self.decay_rate,
            decay_every: self.decay_every,
            ..AdamConfig::default()
        }
    }

    pub(crate) fn mlp(&self, input: usize, output: usize) -> MlpSpec {
        MlpSpec {
            dropout: self.dropout,
            ..MlpSpec::new(input, self.hidden_dim, output, self.blocks)
        }
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda1", self.lambda1.to_string()),
            ("lambda2", self.lambda2.to_string()),
            ("alpha", self.alpha.to_string()),
            ("k_train", self.k_train.to_string()),
            ("k_test", self.k_test.to_string()),
            ("latent_dim", self.latent_dim.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("blocks", self.blocks.to_string()),
            ("dropout", self.dropout.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("base_lr", self.base_lr.to_string()),
            ("decay_rate", self.decay_rate.to_string()),
            ("decay_every", self.decay_every.to_string()),
        ]
    }

    /// Overrides fields from `key=value` pairs; unknown keys are an error.
    pub fn apply_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        fn p<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value '{v}' for {k}")))
        }
        for (k, v) in pairs {
            match k {
                "lambda1" => self.lambda1 = p(k, v)?,
                "lambda2" => self.lambda2 = p(k, v)?,
                "alpha" => self.alpha = p(k, v)?,
                "k_train" => self.k_train = p(k, v)?,
                "k_test" => self.k_test = p(k, v)?,
                "latent_dim" => self.latent_dim = p(k, v)?,
                "hidden_dim" => self.hidden_dim = p(k, v)?,
                "blocks" => self.blocks = p(k, v)?,
                "dropout" => self.dropout = p(k, v)?,
                "epochs" => self.epochs = p(k, v)?,
                "batch_size" => self.batch_size = p(k, v)?,
                "base_lr" => self.base_lr = p(k, v)?,
                "decay_rate" => self.decay_rate = p(k, v)?,
                "decay_every" => self.decay_every = p(k, v)?,
                _ => return Err(Error::InvalidConfig(format!("unknown model key '{k}'"))),
            }
        }
        Ok(())
    }

    pub(crate) fn from_manifest(fields: &[String]) -> Result<Self> {
        let map: BTreeMap<&str, &str> = fields
            .iter()
            .filter_map(|f| f.split_once('='))
            .collect();
        let mut c = CvaeConfig::default();
        c.apply_pairs(map.into_iter())?;
        c.validate()?;
        Ok(c)
    }
}
