//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `GLSM`, `u32` version, `u32` header length,
//! a JSON header (model config, class-weight state, optimizer settings,
//! epoch, tensor shapes), then three tensor blocks (parameters, first
//! moments, second moments) of raw `f64` values in tensor order.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::loss::ClassWeightState;
use super::optim::Adam;
use super::params::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GLSM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    weights: ClassWeightState,
    epoch: usize,
    best_epoch: usize,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    shapes: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: Adam,
    pub weights: ClassWeightState,
    pub epoch: usize,
    pub best_epoch: usize,
}

fn read_u32(bytes: &[u8], at: &mut usize) -> Result<u32> {
    let end = *at + 4;
    let slice = bytes
        .get(*at..end)
        .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
    *at = end;
    Ok(u32::from_le_bytes(slice.try_into().expect("4 bytes")))
}

fn fill(target: &mut Array2<f64>, bytes: &[u8], at: &mut usize) -> Result<()> {
    let need = target.len() * 8;
    let slice = bytes
        .get(*at..*at + need)
        .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
    for (dst, chunk) in target.iter_mut().zip(slice.chunks_exact(8)) {
        *dst = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    *at += need;
    Ok(())
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            model: self.params.config,
            weights: self.weights,
            epoch: self.epoch,
            best_epoch: self.best_epoch,
            lr: self.optimizer.lr,
            beta1: self.optimizer.beta1,
            beta2: self.optimizer.beta2,
            eps: self.optimizer.eps,
            step: self.optimizer.step,
            shapes: self.params.tensors().iter().map(|t| t.dim()).collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + 24 * self.params.parameter_count());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for block in [&self.params, &self.optimizer.m, &self.optimizer.v] {
            for t in block.tensors() {
                for x in t.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::Format("not a model checkpoint".into()));
        }
        let mut at = 4;
        let version = read_u32(bytes, &mut at)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let len = read_u32(bytes, &mut at)? as usize;
        let json = bytes
            .get(at..at + len)
            .ok_or_else(|| Error::Format("checkpoint truncated".into()))?;
        at += len;
        let header: Header = serde_json::from_slice(json)?;
        let template = ModelParams::init(header.model, 0).map_err(|e| Error::Format(format!("checkpoint config: {e}")))?;
        let shapes: Vec<(usize, usize)> = template.tensors().iter().map(|t| t.dim()).collect();
        if shapes != header.shapes {
            return Err(Error::Format("checkpoint tensor shapes do not match its config".into()));
        }
        let mut blocks = [template.zeros_like(), template.zeros_like(), template.zeros_like()];
        for block in &mut blocks {
            for t in block.tensors_mut() {
                fill(t, bytes, &mut at)?;
            }
        }
        if at != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        let [params, m, v] = blocks;
        Ok(Checkpoint {
            params,
            optimizer: Adam {
                lr: header.lr,
                beta1: header.beta1,
                beta2: header.beta2,
                eps: header.eps,
                step: header.step,
                m,
                v,
            },
            weights: header.weights,
            epoch: header.epoch,
            best_epoch: header.best_epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let p = ModelParams::init(ModelConfig::new(2, 8, 3, 2), 9).unwrap();
        let mut opt = Adam::new(&p, 0.01);
        let mut q = p.clone();
        let mut g = p.clone();
        g.scale(0.1);
        opt.update(&mut q, &g).unwrap();
        Checkpoint {
            params: q,
            optimizer: opt,
            weights: ClassWeightState::new(3.0),
            epoch: 4,
            best_epoch: 2,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_damage() {
        let bytes = sample().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut ver = bytes;
        ver[4] = 9;
        assert!(Checkpoint::from_bytes(&ver).is_err());
    }
}
