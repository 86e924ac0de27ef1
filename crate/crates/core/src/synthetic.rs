//! Seeded generators for documents and graphs, used by tests, the
//! acceptance suite and the browser demo.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{add_order_edges, Edge, HeteroGraph};
use crate::ingest::{Document, Sentence};

/// Token `w{index}` from a small synthetic vocabulary.
pub fn word(index: usize) -> String {
    format!("w{index}")
}

/// A random document with `1..=max_sentences` sentences and an abstract,
/// all drawn from a vocabulary of `vocab` tokens. Every token counts as a
/// content token.
pub fn random_document<R: Rng>(rng: &mut R, id: &str, max_sentences: usize, vocab: usize) -> Document {
    let n = rng.gen_range(1..=max_sentences.max(1));
    let sentence = |rng: &mut R| -> Vec<String> {
        let len = rng.gen_range(1..=8);
        (0..len).map(|_| word(rng.gen_range(0..vocab.max(1)))).collect()
    };
    let sentences = (0..n)
        .map(|index| {
            let tokens = sentence(rng);
            Sentence {
                index,
                raw_text: tokens.join(" "),
                content_tokens: tokens.clone(),
                tokens,
            }
        })
        .collect();
    let abstract_len = rng.gen_range(1..=3);
    Document {
        id: id.to_string(),
        sentences,
        abstract_sentences: (0..abstract_len).map(|_| sentence(rng)).collect(),
    }
}

/// Shape limits for [`random_graph`].
#[derive(Debug, Clone, Copy)]
pub struct GraphShape {
    pub max_sentences: usize,
    pub max_words: usize,
    pub sentence_dim: usize,
    pub word_dim: usize,
    /// Probability that each candidate edge is present.
    pub density: f64,
}

impl Default for GraphShape {
    fn default() -> Self {
        GraphShape {
            max_sentences: 6,
            max_words: 8,
            sentence_dim: 5,
            word_dim: 4,
            density: 0.5,
        }
    }
}

fn features<R: Rng>(rng: &mut R, count: usize) -> Vec<f32> {
    (0..count).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

/// A structurally valid graph with random features, labels and edges of
/// all four types.
pub fn random_graph<R: Rng>(rng: &mut R, id: &str, shape: GraphShape) -> HeteroGraph {
    let n = rng.gen_range(1..=shape.max_sentences.max(1));
    let m = rng.gen_range(0..=shape.max_words);
    let p = shape.density;
    let mut edges_ss = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges_ss.push(Edge::new(i, j, rng.gen_range(0.0f32..1.0)));
            }
        }
    }
    let mut edges_ws = Vec::new();
    for w in 0..m {
        for s in 0..n {
            if rng.gen_bool(p) {
                edges_ws.push(Edge::new(w, s, rng.gen_range(0.1f32..2.0)));
            }
        }
    }
    let mut edges_ww = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if rng.gen_bool(p) {
                edges_ww.push(Edge::new(a, b, rng.gen_range(0.0f32..1.0)));
            }
        }
    }
    let mut word_ids: Vec<u32> = (0..(m as u32 * 3).max(1)).collect();
    word_ids.shuffle(rng);
    word_ids.truncate(m);
    HeteroGraph {
        doc_id: id.to_string(),
        sentence_index: (0..n as u32).collect(),
        labels: (0..n).map(|_| rng.gen_bool(0.4) as u8).collect(),
        sentence_dim: shape.sentence_dim,
        sentence_features: features(rng, n * shape.sentence_dim),
        word_ids,
        word_dim: shape.word_dim,
        word_features: features(rng, m * shape.word_dim),
        edges_ns: add_order_edges(n),
        edges_ss,
        edges_ws,
        edges_ww,
    }
}

/// A graph whose labels are a linear function of the sentence features:
/// label 1 iff the first feature is positive. Features are pushed away from
/// zero so the classes are separated by a margin.
pub fn separable_graph<R: Rng>(rng: &mut R, id: &str, shape: GraphShape) -> HeteroGraph {
    let mut g = random_graph(rng, id, shape);
    let d = g.sentence_dim;
    for i in 0..g.n() {
        let label = g.labels[i];
        let mag = rng.gen_range(0.5f32..1.0);
        g.sentence_features[i * d] = if label == 1 { mag } else { -mag };
    }
    g
}
