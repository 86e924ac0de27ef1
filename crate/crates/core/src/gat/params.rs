use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Sentence,
    Word,
}

/// A directed message-passing relation derived from one undirected edge
/// type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub edge_type: EdgeType,
    pub src: NodeKind,
    pub dst: NodeKind,
}

/// Same-type edges carry messages both ways; word-in-sentence edges are
/// split into word→sentence and sentence→word.
pub const RELATIONS: [Relation; 5] = [
    Relation {
        edge_type: EdgeType::Ns,
        src: NodeKind::Sentence,
        dst: NodeKind::Sentence,
    },
    Relation {
        edge_type: EdgeType::Ss,
        src: NodeKind::Sentence,
        dst: NodeKind::Sentence,
    },
    Relation {
        edge_type: EdgeType::Ws,
        src: NodeKind::Word,
        dst: NodeKind::Sentence,
    },
    Relation {
        edge_type: EdgeType::Ws,
        src: NodeKind::Sentence,
        dst: NodeKind::Word,
    },
    Relation {
        edge_type: EdgeType::Ww,
        src: NodeKind::Word,
        dst: NodeKind::Word,
    },
];

pub const HEADS: usize = 4;
pub const DEFAULT_HIDDEN: usize = 64;
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub sentence_dim: usize,
    pub word_dim: usize,
}

impl ModelConfig {
    pub fn new(layers: usize, hidden: usize, sentence_dim: usize, word_dim: usize) -> Self {
        ModelConfig {
            layers,
            heads: HEADS,
            hidden,
            sentence_dim,
            word_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.layers) {
            return Err(Error::Config(format!("layers must be 1 or 2, got {}", self.layers)));
        }
        if self.heads == 0 || self.hidden == 0 || self.hidden % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden width {} must be a positive multiple of the head count {}",
                self.hidden, self.heads
            )));
        }
        if self.sentence_dim == 0 || self.word_dim == 0 {
            return Err(Error::Config("input feature dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn is_last(&self, layer: usize) -> bool {
        layer + 1 == self.layers
    }

    /// Per-head output width: heads are concatenated in hidden layers and
    /// averaged in the last one, so both keep the state width at `hidden`.
    pub fn head_dim(&self, layer: usize) -> usize {
        if self.is_last(layer) {
            self.hidden
        } else {
            self.hidden / self.heads
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `out x in`
    pub weight: Array2<f64>,
    /// `1 x out`
    pub bias: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `head_dim x in`
    pub w_src: Array2<f64>,
    pub w_dst: Array2<f64>,
    /// `1 x head_dim`
    pub a_src: Array2<f64>,
    pub a_dst: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Indexed `[relation][head]`, relations in [`RELATIONS`] order.
    pub relations: Vec<Vec<HeadParams>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub sentence_in: Linear,
    pub word_in: Linear,
    pub layers: Vec<LayerParams>,
    /// `1 x hidden` weight and `1 x 1` bias.
    pub classifier: Linear,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-limit..limit))
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let sentence_in = Linear {
            weight: glorot(&mut rng, h, config.sentence_dim),
            bias: Array2::zeros((1, h)),
        };
        let word_in = Linear {
            weight: glorot(&mut rng, h, config.word_dim),
            bias: Array2::zeros((1, h)),
        };
        let layers = (0..config.layers)
            .map(|l| {
                let d = config.head_dim(l);
                LayerParams {
                    relations: RELATIONS
                        .iter()
                        .map(|_| {
                            (0..config.heads)
                                .map(|_| HeadParams {
                                    w_src: glorot(&mut rng, d, h),
                                    w_dst: glorot(&mut rng, d, h),
                                    a_src: glorot(&mut rng, 1, d),
                                    a_dst: glorot(&mut rng, 1, d),
                                })
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect();
        let classifier = Linear {
            weight: glorot(&mut rng, 1, h),
            bias: Array2::zeros((1, 1)),
        };
        Ok(ModelParams {
            config,
            sentence_in,
            word_in,
            layers,
            classifier,
        })
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    /// Every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&Array2<f64>> {
        let mut out = vec![
            &self.sentence_in.weight,
            &self.sentence_in.bias,
            &self.word_in.weight,
            &self.word_in.bias,
        ];
        for layer in &self.layers {
            for heads in &layer.relations {
                for h in heads {
                    out.extend([&h.w_src, &h.w_dst, &h.a_src, &h.a_dst]);
                }
            }
        }
        out.extend([&self.classifier.weight, &self.classifier.bias]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = vec![
            &mut self.sentence_in.weight,
            &mut self.sentence_in.bias,
            &mut self.word_in.weight,
            &mut self.word_in.bias,
        ];
        for layer in &mut self.layers {
            for heads in &mut layer.relations {
                for h in heads {
                    out.extend([&mut h.w_src, &mut h.w_dst, &mut h.a_src, &mut h.a_dst]);
                }
            }
        }
        out.extend([&mut self.classifier.weight, &mut self.classifier.bias]);
        out
    }

    /// Human-readable tensor names, aligned with [`ModelParams::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out: Vec<String> = ["sentence_in.weight", "sentence_in.bias", "word_in.weight", "word_in.bias"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for (l, layer) in self.layers.iter().enumerate() {
            for (r, heads) in layer.relations.iter().enumerate() {
                let rel = &RELATIONS[r];
                for k in 0..heads.len() {
                    for t in ["w_src", "w_dst", "a_src", "a_dst"] {
                        out.push(format!(
                            "layer{l}.{}:{:?}->{:?}.head{k}.{t}",
                            rel.edge_type.name(),
                            rel.src,
                            rel.dst
                        ));
                    }
                }
            }
        }
        out.push("classifier.weight".into());
        out.push("classifier.bias".into());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors_mut().into_iter().for_each(|t| *t *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.dim() == y.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes() {
        let cfg = ModelConfig::new(2, 8, 5, 3);
        let p = ModelParams::init(cfg, 1).unwrap();
        assert_eq!(p.layers.len(), 2);
        assert_eq!(p.layers[0].relations.len(), 5);
        assert_eq!(p.layers[0].relations[0].len(), HEADS);
        assert_eq!(p.layers[0].relations[0][0].w_src.dim(), (2, 8));
        assert_eq!(p.layers[1].relations[0][0].w_src.dim(), (8, 8));
        assert_eq!(p.sentence_in.weight.dim(), (8, 5));
        assert_eq!(p.word_in.weight.dim(), (8, 3));
        assert_eq!(p.tensors().len(), p.tensor_names().len());
        assert!(p.is_finite());
        assert_eq!(p, ModelParams::init(cfg, 1).unwrap());
        assert_ne!(p, ModelParams::init(cfg, 2).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(3, 8, 2, 2).validate().is_err());
        assert!(ModelConfig::new(1, 6, 2, 2).validate().is_err());
        assert!(ModelConfig::new(1, 8, 2, 2).validate().is_ok());
    }

    #[test]
    fn zeros_and_accumulate() {
        let p = ModelParams::init(ModelConfig::new(1, 4, 2, 2), 3).unwrap();
        let mut z = p.zeros_like();
        assert!(z.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
        z.add_assign(&p);
        z.add_assign(&p);
        z.scale(0.5);
        assert_eq!(z, p);
    }
}
