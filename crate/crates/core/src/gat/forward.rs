//! Forward pass with cached activations and the matching reverse pass.

use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{LayerParams, ModelConfig, ModelParams, NodeKind, LEAKY_SLOPE, RELATIONS};
use crate::error::{Error, Result};
use crate::graph::{EdgeType, HeteroGraph};

fn kind_index(k: NodeKind) -> usize {
    match k {
        NodeKind::Sentence => 0,
        NodeKind::Word => 1,
    }
}

/// Incoming edges of one relation grouped by destination node (CSR).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Adjacency {
    pub offsets: Vec<usize>,
    pub src: Vec<usize>,
    pub weight: Vec<f64>,
}

impl Adjacency {
    fn from_pairs(n_dst: usize, mut pairs: Vec<(usize, usize, f64)>) -> Self {
        pairs.sort_by_key(|&(d, s, _)| (d, s));
        let mut offsets = vec![0usize; n_dst + 1];
        for &(d, _, _) in &pairs {
            offsets[d + 1] += 1;
        }
        for i in 0..n_dst {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            src: pairs.iter().map(|p| p.1).collect(),
            weight: pairs.iter().map(|p| p.2).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }

    pub fn group(&self, dst: usize) -> std::ops::Range<usize> {
        self.offsets[dst]..self.offsets[dst + 1]
    }

    pub fn dst_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}

/// A graph converted to 64-bit dense features and per-relation adjacency.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub sentences: Array2<f64>,
    pub words: Array2<f64>,
    pub adjacency: Vec<Adjacency>,
    pub labels: Vec<f64>,
}

impl GraphInput {
    pub fn new(g: &HeteroGraph) -> Self {
        let (n, m) = (g.n(), g.m());
        let sentences =
            Array2::from_shape_fn((n, g.sentence_dim), |(i, j)| g.sentence_features[i * g.sentence_dim + j] as f64);
        let words = Array2::from_shape_fn((m, g.word_dim), |(i, j)| g.word_features[i * g.word_dim + j] as f64);
        let adjacency = RELATIONS
            .iter()
            .map(|rel| {
                let edges = g.edges(rel.edge_type);
                let pairs: Vec<(usize, usize, f64)> = match rel.edge_type {
                    EdgeType::Ws if rel.dst == NodeKind::Sentence => edges
                        .iter()
                        .map(|e| (e.dst as usize, e.src as usize, e.weight as f64))
                        .collect(),
                    EdgeType::Ws => edges
                        .iter()
                        .map(|e| (e.src as usize, e.dst as usize, e.weight as f64))
                        .collect(),
                    _ => edges
                        .iter()
                        .flat_map(|e| {
                            let (a, b, w) = (e.src as usize, e.dst as usize, e.weight as f64);
                            [(b, a, w), (a, b, w)]
                        })
                        .collect(),
                };
                let n_dst = match rel.dst {
                    NodeKind::Sentence => n,
                    NodeKind::Word => m,
                };
                Adjacency::from_pairs(n_dst, pairs)
            })
            .collect();
        GraphInput {
            sentences,
            words,
            adjacency,
            labels: g.labels.iter().map(|&l| l as f64).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.sentences.nrows()
    }

    pub fn m(&self) -> usize {
        self.words.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    /// Inverted dropout with the given keep probability; masks drawn from a
    /// generator seeded with `seed`.
    Train { keep_prob: f64, seed: u64 },
}

#[derive(Debug, Clone)]
struct HeadCache {
    zs: Array2<f64>,
    zd: Array2<f64>,
    /// Pre-activation attention logits, one per edge.
    u: Vec<f64>,
    alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: [Array2<f64>; 2],
    pre: [Array2<f64>; 2],
    /// Number of relations delivering messages to each node.
    counts: [Vec<usize>; 2],
    heads: Vec<Option<Vec<HeadCache>>>,
    masks: Option<[Array2<f64>; 2]>,
}

/// Output of [`forward`]: probabilities plus everything the reverse pass
/// needs.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    layers: Vec<LayerCache>,
    final_sentences: Array2<f64>,
}

impl ForwardPass {
    /// Attention coefficients of one layer/relation/head, aligned with the
    /// relation's [`Adjacency`] edge order. `None` when the relation has no
    /// edges.
    pub fn attention(&self, layer: usize, relation: usize, head: usize) -> Option<&[f64]> {
        self.layers[layer].heads[relation]
            .as_ref()
            .map(|h| h[head].alpha.as_slice())
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Final sentence states fed to the classifier.
    pub fn sentence_states(&self) -> &Array2<f64> {
        &self.final_sentences
    }
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn affine(x: &Array2<f64>, weight: &Array2<f64>, bias: &Array2<f64>) -> Array2<f64> {
    x.dot(&weight.t()) + bias
}

fn head_layout(cfg: &ModelConfig, layer: usize, head: usize) -> (usize, usize, f64) {
    let d = cfg.head_dim(layer);
    if cfg.is_last(layer) {
        (0, d, 1.0 / cfg.heads as f64)
    } else {
        (head * d, d, 1.0)
    }
}

fn layer_forward(
    params: &LayerParams,
    cfg: &ModelConfig,
    layer: usize,
    input: [Array2<f64>; 2],
    adjacency: &[Adjacency],
    rng: Option<(&mut ChaCha8Rng, f64)>,
) -> ([Array2<f64>; 2], LayerCache) {
    let hidden = cfg.hidden;
    let sizes = [input[0].nrows(), input[1].nrows()];
    let mut agg = [Array2::<f64>::zeros((sizes[0], hidden)), Array2::<f64>::zeros((sizes[1], hidden))];
    let mut counts = [vec![0usize; sizes[0]], vec![0usize; sizes[1]]];
    let mut heads_cache = Vec::with_capacity(RELATIONS.len());

    for (r, rel) in RELATIONS.iter().enumerate() {
        let adj = &adjacency[r];
        if adj.is_empty() {
            heads_cache.push(None);
            continue;
        }
        let (si, di) = (kind_index(rel.src), kind_index(rel.dst));
        let hs = &input[si];
        let hd = &input[di];
        let n_dst = sizes[di];
        let mut rel_out = Array2::<f64>::zeros((n_dst, hidden));
        let mut caches = Vec::with_capacity(cfg.heads);
        for (k, hp) in params.relations[r].iter().enumerate() {
            let (col, d, scale) = head_layout(cfg, layer, k);
            let zs = hs.dot(&hp.w_src.t());
            let zd = hd.dot(&hp.w_dst.t());
            let ps: Array1<f64> = zs.dot(&hp.a_src.row(0));
            let pd: Array1<f64> = zd.dot(&hp.a_dst.row(0));
            let mut u = vec![0.0; adj.src.len()];
            let mut alpha = vec![0.0; adj.src.len()];
            for i in 0..n_dst {
                let range = adj.group(i);
                if range.is_empty() {
                    continue;
                }
                let mut max = f64::NEG_INFINITY;
                for e in range.clone() {
                    u[e] = pd[i] + ps[adj.src[e]];
                    max = max.max(leaky(u[e]));
                }
                let mut total = 0.0;
                for e in range.clone() {
                    alpha[e] = (leaky(u[e]) - max).exp();
                    total += alpha[e];
                }
                let mut out = rel_out.slice_mut(s![i, col..col + d]);
                for e in range {
                    alpha[e] /= total;
                    let coef = alpha[e] * adj.weight[e] * scale;
                    out.scaled_add(coef, &zs.row(adj.src[e]));
                }
            }
            caches.push(HeadCache { zs, zd, u, alpha });
        }
        for i in 0..n_dst {
            if !adj.group(i).is_empty() {
                agg[di].row_mut(i).scaled_add(1.0, &rel_out.row(i));
                counts[di][i] += 1;
            }
        }
        heads_cache.push(Some(caches));
    }

    let mut pre = input.clone();
    for k in 0..2 {
        for (i, &c) in counts[k].iter().enumerate() {
            if c > 0 {
                pre[k].row_mut(i).scaled_add(1.0 / c as f64, &agg[k].row(i));
            }
        }
    }
    let mut out = if cfg.is_last(layer) {
        pre.clone()
    } else {
        [pre[0].mapv(elu), pre[1].mapv(elu)]
    };
    let masks = rng.map(|(rng, keep)| {
        let mut draw = |rows: usize| {
            Array2::from_shape_simple_fn((rows, hidden), || {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
        };
        [draw(sizes[0]), draw(sizes[1])]
    });
    if let Some(m) = &masks {
        out[0] *= &m[0];
        out[1] *= &m[1];
    }
    (
        out,
        LayerCache {
            input,
            pre,
            counts,
            heads: heads_cache,
            masks,
        },
    )
}

pub fn forward(g: &GraphInput, params: &ModelParams, mode: Mode) -> Result<ForwardPass> {
    let cfg = &params.config;
    if g.sentences.ncols() != cfg.sentence_dim {
        return Err(Error::Dimension {
            expected: cfg.sentence_dim,
            found: g.sentences.ncols(),
        });
    }
    if g.m() > 0 && g.words.ncols() != cfg.word_dim {
        return Err(Error::Dimension {
            expected: cfg.word_dim,
            found: g.words.ncols(),
        });
    }
    if g.n() == 0 {
        return Err(Error::Data("graph has no sentence nodes".into()));
    }
    if g.adjacency.len() != RELATIONS.len() {
        return Err(Error::Data("graph input has the wrong number of relations".into()));
    }
    let words = if g.m() == 0 {
        Array2::zeros((0, cfg.hidden))
    } else {
        affine(&g.words, &params.word_in.weight, &params.word_in.bias)
    };
    let mut state = [affine(&g.sentences, &params.sentence_in.weight, &params.sentence_in.bias), words];

    let mut rng = match mode {
        Mode::Eval => None,
        Mode::Train { keep_prob, seed } => {
            if !(keep_prob > 0.0 && keep_prob <= 1.0) {
                return Err(Error::Config(format!("keep probability {keep_prob} outside (0, 1]")));
            }
            Some((ChaCha8Rng::seed_from_u64(seed), keep_prob))
        }
    };
    let mut layers = Vec::with_capacity(cfg.layers);
    for (l, lp) in params.layers.iter().enumerate() {
        let rng_arg = rng.as_mut().map(|(r, k)| (r, *k));
        let (next, cache) = layer_forward(lp, cfg, l, state, &g.adjacency, rng_arg);
        layers.push(cache);
        state = next;
    }
    let [final_sentences, _] = state;
    let logits: Vec<f64> = final_sentences
        .dot(&params.classifier.weight.row(0))
        .iter()
        .map(|z| z + params.classifier.bias[[0, 0]])
        .collect();
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardPass {
        logits,
        probs,
        layers,
        final_sentences,
    })
}

fn outer(col: ArrayView1<f64>, row: ArrayView1<f64>) -> Array2<f64> {
    col.insert_axis(Axis(1)).dot(&row.insert_axis(Axis(0)))
}

fn layer_backward(
    params: &LayerParams,
    grads: &mut LayerParams,
    cfg: &ModelConfig,
    layer: usize,
    cache: &LayerCache,
    adjacency: &[Adjacency],
    mut d_out: [Array2<f64>; 2],
) -> [Array2<f64>; 2] {
    if let Some(m) = &cache.masks {
        d_out[0] *= &m[0];
        d_out[1] *= &m[1];
    }
    let d_pre = if cfg.is_last(layer) {
        d_out
    } else {
        let mut d = d_out;
        for k in 0..2 {
            Zip::from(&mut d[k]).and(&cache.pre[k]).for_each(|g, &x| *g *= elu_grad(x));
        }
        d
    };
    let mut d_in = d_pre.clone();
    let mut d_agg = d_pre;
    for k in 0..2 {
        for (i, &c) in cache.counts[k].iter().enumerate() {
            let factor = if c > 0 { 1.0 / c as f64 } else { 0.0 };
            d_agg[k].row_mut(i).mapv_inplace(|x| x * factor);
        }
    }

    for (r, rel) in RELATIONS.iter().enumerate() {
        let Some(heads) = &cache.heads[r] else {
            continue;
        };
        let adj = &adjacency[r];
        let (si, di) = (kind_index(rel.src), kind_index(rel.dst));
        let hs = &cache.input[si];
        let hd = &cache.input[di];
        for (k, hc) in heads.iter().enumerate() {
            let hp = &params.relations[r][k];
            let (col, d, scale) = head_layout(cfg, layer, k);
            let mut dzs = Array2::<f64>::zeros(hc.zs.dim());
            let mut dps = Array1::<f64>::zeros(hs.nrows());
            let mut dpd = Array1::<f64>::zeros(hd.nrows());
            let mut dalpha: Vec<f64> = Vec::new();
            for i in 0..adj.dst_count() {
                let range = adj.group(i);
                if range.is_empty() {
                    continue;
                }
                let dm = d_agg[di].slice(s![i, col..col + d]).mapv(|x| x * scale);
                dalpha.clear();
                for e in range.clone() {
                    let j = adj.src[e];
                    dalpha.push(adj.weight[e] * dm.dot(&hc.zs.row(j)));
                    dzs.row_mut(j).scaled_add(hc.alpha[e] * adj.weight[e], &dm);
                }
                let weighted: f64 = range.clone().zip(&dalpha).map(|(e, da)| hc.alpha[e] * da).sum();
                for (e, da) in range.zip(&dalpha) {
                    let du = hc.alpha[e] * (da - weighted) * leaky_grad(hc.u[e]);
                    dpd[i] += du;
                    dps[adj.src[e]] += du;
                }
            }
            let g = &mut grads.relations[r][k];
            g.a_src.row_mut(0).scaled_add(1.0, &dps.dot(&hc.zs));
            g.a_dst.row_mut(0).scaled_add(1.0, &dpd.dot(&hc.zd));
            dzs += &outer(dps.view(), hp.a_src.row(0));
            let dzd = outer(dpd.view(), hp.a_dst.row(0));
            g.w_src += &dzs.t().dot(hs);
            g.w_dst += &dzd.t().dot(hd);
            d_in[si] += &dzs.dot(&hp.w_src);
            d_in[di] += &dzd.dot(&hp.w_dst);
        }
    }
    d_in
}

/// Gradients of `sum_s dlogits[s] * logit_s` with respect to every
/// parameter, i.e. the chain rule applied from given logit gradients.
pub fn backward(pass: &ForwardPass, g: &GraphInput, params: &ModelParams, dlogits: &[f64]) -> ModelParams {
    let cfg = &params.config;
    let mut grads = params.zeros_like();
    let dz = Array1::from(dlogits.to_vec());
    grads.classifier.weight.row_mut(0).assign(&dz.dot(&pass.final_sentences));
    grads.classifier.bias[[0, 0]] = dz.sum();

    let mut d_state = [
        outer(dz.view(), params.classifier.weight.row(0)),
        Array2::<f64>::zeros((pass.layers.first().map_or(0, |c| c.input[1].nrows()), cfg.hidden)),
    ];
    for l in (0..cfg.layers).rev() {
        d_state = layer_backward(
            &params.layers[l],
            &mut grads.layers[l],
            cfg,
            l,
            &pass.layers[l],
            &g.adjacency,
            d_state,
        );
    }
    let [ds, dw] = d_state;
    grads.sentence_in.weight += &ds.t().dot(&g.sentences);
    grads.sentence_in.bias.row_mut(0).assign(&ds.sum_axis(Axis(0)));
    if g.m() > 0 {
        grads.word_in.weight += &dw.t().dot(&g.words);
        grads.word_in.bias.row_mut(0).assign(&dw.sum_axis(Axis(0)));
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gat::{gradient_check, ClassWeightState, ModelConfig};
    use crate::synthetic::{random_graph, GraphShape};
    use rand::SeedableRng;

    fn setup(seed: u64, layers: usize) -> (GraphInput, ModelParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = GraphShape::default();
        let g = random_graph(&mut rng, "g", shape);
        let cfg = ModelConfig::new(layers, 8, shape.sentence_dim, shape.word_dim);
        (GraphInput::new(&g), ModelParams::init(cfg, seed).unwrap())
    }

    #[test]
    fn attention_sums_to_one() {
        for seed in 0..20 {
            let (g, p) = setup(seed, 2);
            let pass = forward(&g, &p, Mode::Eval).unwrap();
            for l in 0..pass.layer_count() {
                for (r, adj) in g.adjacency.iter().enumerate() {
                    for h in 0..p.config.heads {
                        let Some(alpha) = pass.attention(l, r, h) else {
                            assert!(adj.is_empty());
                            continue;
                        };
                        for i in 0..adj.dst_count() {
                            let range = adj.group(i);
                            if !range.is_empty() {
                                let s: f64 = alpha[range.clone()].iter().sum();
                                assert!((s - 1.0).abs() < 1e-9);
                                assert!(alpha[range].iter().all(|&a| a >= 0.0));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let (g, p) = setup(1, 2);
        let a = forward(&g, &p, Mode::Eval).unwrap();
        let b = forward(&g, &p, Mode::Eval).unwrap();
        assert_eq!(a.probs, b.probs);
        assert!(a.probs.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = ClassWeightState::new(2.0);
        for seed in 0..4 {
            for layers in [1, 2] {
                let (g, p) = setup(seed, layers);
                let r = gradient_check(&g, &p, &w, Mode::Eval, 1e-5).unwrap();
                assert!(r.max_relative_error < 1e-4, "{r:?}");
            }
        }
    }

    #[test]
    fn gradient_with_dropout_masks() {
        let (g, p) = setup(7, 2);
        let mode = Mode::Train {
            keep_prob: 0.7,
            seed: 11,
        };
        let r = gradient_check(&g, &p, &ClassWeightState::unweighted(), mode, 1e-5).unwrap();
        assert!(r.max_relative_error < 1e-4, "{r:?}");
    }

    #[test]
    fn isolated_sentence_keeps_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hg = random_graph(&mut rng, "g", GraphShape::default());
        for t in crate::graph::EdgeType::ALL {
            hg.edges_mut(t).clear();
        }
        let g = GraphInput::new(&hg);
        let p = ModelParams::init(ModelConfig::new(1, 8, 5, 4), 0).unwrap();
        let pass = forward(&g, &p, Mode::Eval).unwrap();
        let proj = affine(&g.sentences, &p.sentence_in.weight, &p.sentence_in.bias);
        assert_eq!(pass.sentence_states(), &proj);
    }

    #[test]
    fn word_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = GraphShape::default();
        let mut hg = random_graph(&mut rng, "g", shape);
        while hg.m() < 3 {
            hg = random_graph(&mut rng, "g", shape);
        }
        let p = ModelParams::init(ModelConfig::new(2, 8, 5, 4), 4).unwrap();
        let before = forward(&GraphInput::new(&hg), &p, Mode::Eval).unwrap().probs;
        // reverse word storage and re-index edges
        let m = hg.m();
        let d = hg.word_dim;
        let mut permuted = hg.clone();
        let remap = |j: u32| (m as u32 - 1) - j;
        permuted.word_ids.reverse();
        permuted.word_features = (0..m).rev().flat_map(|j| hg.word_feature(j).to_vec()).collect();
        assert_eq!(permuted.word_features.len(), m * d);
        for e in &mut permuted.edges_ws {
            e.src = remap(e.src);
        }
        for e in &mut permuted.edges_ww {
            let (a, b) = (remap(e.src), remap(e.dst));
            e.src = a.min(b);
            e.dst = a.max(b);
        }
        permuted.validate().unwrap();
        let after = forward(&GraphInput::new(&permuted), &p, Mode::Eval).unwrap().probs;
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
