//! Binary checkpoints.
//!
//! ```text
//! PL3D-CKPT v1
//! <manifest lines>
//! payload <float count>
//! END
//! <raw little-endian f32 values in manifest order>
//! ```
//!
//! A network is described as `network <name> <layer count>` followed by one
//! line per layer (`linear <in> <out>`, `batchnorm <n> <momentum> <eps>`,
//! `relu`, `dropout <rate>`, `residual <inner count>` then its inner layers).
//! Its arrays are, per layer in order: linear weight and bias; batch-norm
//! gamma, beta, running mean, running variance.

use std::io::Write;

use crate::error::{Error, Result};
use crate::nn::layers::{BatchNorm, Dropout, Layer, Linear, Relu, ResidualBlock};
use crate::nn::network::Network;

pub const MAGIC: &str = "PL3D-CKPT v1";
const END: &[u8] = b"\nEND\n";

#[derive(Debug, Default)]
pub struct CheckpointWriter {
    manifest: Vec<String>,
    payload: Vec<f32>,
}

impl CheckpointWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn line(&mut self, line: impl Into<String>) {
        let line = line.into();
        debug_assert!(!line.contains('\n') && line != "END");
        self.manifest.push(line);
    }

    pub fn network(&mut self, name: &str, net: &Network<f32>) {
        self.line(format!("network {name} {}", net.layers().len()));
        for l in net.layers() {
            self.layer(l);
        }
        net.visit_state(&mut |s| self.payload.extend_from_slice(s));
    }

    fn layer(&mut self, l: &Layer<f32>) {
        match l {
            Layer::Linear(lin) => self.line(format!("linear {} {}", lin.inputs(), lin.outputs())),
            Layer::BatchNorm(b) => self.line(format!("batchnorm {} {} {}", b.features(), b.momentum, b.epsilon)),
            Layer::Relu(_) => self.line("relu"),
            Layer::Dropout(d) => self.line(format!("dropout {}", d.rate)),
            Layer::Residual(block) => {
                self.line(format!("residual {}", block.layers.len()));
                for inner in &block.layers {
                    self.layer(inner);
                }
            }
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for l in &self.manifest {
            writeln!(w, "{l}")?;
        }
        write!(w, "payload {}", self.payload.len())?;
        w.write_all(END)?;
        let mut bytes = Vec::with_capacity(self.payload.len() * 4);
        for v in &self.payload {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

#[derive(Debug)]
pub struct CheckpointReader {
    lines: Vec<String>,
    pos: usize,
    payload: Vec<f32>,
    offset: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl CheckpointReader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .windows(END.len())
            .position(|w| w == END)
            .ok_or_else(|| bad("missing END marker"))?;
        let text = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("manifest is not UTF-8"))?;
        let mut lines: Vec<String> = text.split('\n').map(str::to_string).collect();
        if lines.first().map(String::as_str) != Some(MAGIC) {
            return Err(bad(format!("missing '{MAGIC}' header")));
        }
        let count_line = lines.pop().ok_or_else(|| bad("empty manifest"))?;
        let count: usize = count_line
            .strip_prefix("payload ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| bad("missing payload count"))?;
        let raw = &bytes[split + END.len()..];
        if raw.len() != count * 4 {
            return Err(bad(format!("payload holds {} bytes, manifest says {}", raw.len(), count * 4)));
        }
        let payload = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(CheckpointReader {
            lines,
            pos: 1,
            payload,
            offset: 0,
        })
    }

    pub fn next_line(&mut self) -> Result<&str> {
        let l = self.lines.get(self.pos).ok_or_else(|| bad("manifest ended early"))?;
        self.pos += 1;
        Ok(l)
    }

    /// Next line, which must start with `keyword `; returns the remaining fields.
    pub fn expect(&mut self, keyword: &str) -> Result<Vec<String>> {
        let line = self.next_line()?.to_string();
        let mut f = line.split(' ');
        if f.next() != Some(keyword) {
            return Err(bad(format!("expected '{keyword}', found '{line}'")));
        }
        Ok(f.map(str::to_string).collect())
    }

    pub fn network(&mut self, name: &str) -> Result<Network<f32>> {
        let f = self.expect("network")?;
        if f.len() != 2 || f[0] != name {
            return Err(bad(format!("expected network '{name}'")));
        }
        let n = num(&f[1])?;
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            layers.push(self.layer()?);
        }
        let mut net = Network::new(layers)?;
        let mut err = None;
        let (payload, offset) = (&self.payload, &mut self.offset);
        net.visit_state_mut(&mut |s| {
            if *offset + s.len() > payload.len() {
                err = Some(bad("payload too short"));
                return;
            }
            s.copy_from_slice(&payload[*offset..*offset + s.len()]);
            *offset += s.len();
        });
        match err {
            Some(e) => Err(e),
            None => Ok(net),
        }
    }

    fn layer(&mut self) -> Result<Layer<f32>> {
        let line = self.next_line()?.to_string();
        let f: Vec<&str> = line.split(' ').collect();
        let layer = match (f[0], f.len()) {
            ("linear", 3) => Layer::Linear(Linear::zeros(num(f[1])?, num(f[2])?)),
            ("batchnorm", 4) => Layer::BatchNorm(BatchNorm::new(num(f[1])?, real(f[2])?, real(f[3])?)),
            ("relu", 1) => Layer::Relu(Relu::default()),
            ("dropout", 2) => Layer::Dropout(Dropout::new(real(f[1])?)),
            ("residual", 2) => {
                let n = num(f[1])?;
                let mut layers = Vec::with_capacity(n);
                for _ in 0..n {
                    layers.push(self.layer()?);
                }
                Layer::Residual(ResidualBlock { layers })
            }
            _ => return Err(bad(format!("unknown layer line '{line}'"))),
        };
        Ok(layer)
    }

    /// Fails unless every manifest line and payload value was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.lines.len() {
            return Err(bad(format!("unread manifest line '{}'", self.lines[self.pos])));
        }
        if self.offset != self.payload.len() {
            return Err(bad("unread payload values"));
        }
        Ok(())
    }
}

fn num(s: &str) -> Result<usize> {
    s.parse().map_err(|_| bad(format!("bad integer '{s}'")))
}

fn real(s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("bad number '{s}'")))
}
