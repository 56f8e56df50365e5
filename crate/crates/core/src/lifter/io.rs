//! Model checkpoints: the network checkpoint format plus `model`, `config`,
//! `norm` and `root` manifest lines.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lifter::baseline::BaselineModel;
use crate::lifter::config::CvaeConfig;
use crate::lifter::cvae::CvaeModel;
use crate::lifter::normalizer::PoseNormalizer;
use crate::nn::checkpoint::{CheckpointReader, CheckpointWriter};
use crate::pose::{NormSpace, NormStats};

#[derive(Clone, Debug)]
pub enum LifterModel {
    Cvae(CvaeModel<f32>),
    Baseline(BaselineModel<f32>),
}

impl LifterModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LifterModel::Cvae(_) => "cvae",
            LifterModel::Baseline(_) => "baseline",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = CheckpointWriter::new();
        w.line(format!("model {}", self.kind()));
        let (config, norm) = match self {
            LifterModel::Cvae(m) => (&m.config, &m.norm),
            LifterModel::Baseline(m) => (&m.config, &m.norm),
        };
        let pairs: Vec<String> = config.to_pairs().iter().map(|(k, v)| format!("{k}={v}")).collect();
        w.line(format!("config {}", pairs.join(" ")));
        for stats in [norm.stats2d(), norm.stats3d()] {
            w.line(format!("norm {} {}", stats.space(), stats.dim()));
            w.line(format!("mean {}", join(stats.mean())));
            w.line(format!("std {}", join(stats.std())));
        }
        w.line(format!("root {}", norm.root()));
        match self {
            LifterModel::Cvae(m) => {
                w.network("encoder", &m.encoder);
                w.network("decoder", &m.decoder);
            }
            LifterModel::Baseline(m) => w.network("regressor", &m.net),
        }
        w.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = CheckpointReader::parse(bytes)?;
        let kind = r.expect("model")?;
        let config = CvaeConfig::from_manifest(&r.expect("config")?)?;
        let stats2d = read_stats(&mut r)?;
        let stats3d = read_stats(&mut r)?;
        let root = r.expect("root")?;
        let root: usize = root
            .first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Checkpoint("bad root line".into()))?;
        let norm = PoseNormalizer::new(stats2d, stats3d, root)?;
        let model = match kind.first().map(String::as_str) {
            Some("cvae") => {
                let encoder = r.network("encoder")?;
                let decoder = r.network("decoder")?;
                LifterModel::Cvae(CvaeModel::from_parts(encoder, decoder, norm, config)?)
            }
            Some("baseline") => {
                let net = r.network("regressor")?;
                if net.input_dim() != norm.dim2() || net.output_dim() != norm.dim3() {
                    return Err(Error::Checkpoint("regressor widths do not match normalization".into()));
                }
                LifterModel::Baseline(BaselineModel { net, norm, config })
            }
            _ => return Err(Error::Checkpoint(format!("unknown model kind {kind:?}"))),
        };
        r.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn into_cvae(self) -> Result<CvaeModel<f32>> {
        match self {
            LifterModel::Cvae(m) => Ok(m),
            other => Err(Error::Checkpoint(format!("expected a cvae checkpoint, found {}", other.kind()))),
        }
    }

    pub fn into_baseline(self) -> Result<BaselineModel<f32>> {
        match self {
            LifterModel::Baseline(m) => Ok(m),
            other => Err(Error::Checkpoint(format!(
                "expected a baseline checkpoint, found {}",
                other.kind()
            ))),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn read_stats(r: &mut CheckpointReader) -> Result<NormStats> {
    let head = r.expect("norm")?;
    if head.len() != 2 {
        return Err(Error::Checkpoint("bad norm line".into()));
    }
    let space: NormSpace = head[0].parse()?;
    let dim: usize = head[1]
        .parse()
        .map_err(|_| Error::Checkpoint("bad norm dimension".into()))?;
    let mut vec = |key: &str| -> Result<Vec<f64>> {
        let v = r
            .expect(key)?
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Checkpoint(format!("bad {key} value '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != dim {
            return Err(Error::Checkpoint(format!("{key} has {} values, expected {dim}", v.len())));
        }
        Ok(v)
    };
    let mean = vec("mean")?;
    let std = vec("std")?;
    NormStats::new(mean, std, space)
}
