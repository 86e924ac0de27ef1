//! Heterogeneous sentence/word document graphs.
//!
//! Four undirected edge types connect the two node partitions:
//! consecutive sentences (`ns`, weight 1), nearby similar sentences (`ss`,
//! cosine), words and the sentences containing them (`ws`, tf-idf) and
//! similar words (`ww`, cosine).
//!
//! # Binary layout (version 1)
//!
//! All integers are little-endian `u32`, all weights and features `f32`.
//!
//! ```text
//! "GLSS" | version | doc_id_len | doc_id (utf-8)
//! n | m | sentence_dim | word_dim
//! sentence_index[n] | label bits[ceil(n/8)] (LSB first) | word_ids[m]
//! sentence_features[n * sentence_dim] | word_features[m * word_dim]
//! for ns, ss, ws, ww: count | (src, dst, weight)[count]
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Document;
use crate::lexical::{cosine, ContentWordFilter, DocTermStats, EmbeddingTable, Vocabulary};
use crate::oracle::LabeledDocument;

pub const MAGIC: &[u8; 4] = b"GLSS";
pub const FORMAT_VERSION: u32 = 1;

/// Sentence-distance bound for similarity edges.
pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_T_SS: f32 = 0.6;
pub const DEFAULT_T_WW: f32 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeType {
    /// Sentence occurrence order.
    Ns,
    /// Sentence semantic similarity.
    Ss,
    /// Word in sentence.
    Ws,
    /// Word semantic similarity.
    Ww,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [EdgeType::Ns, EdgeType::Ss, EdgeType::Ws, EdgeType::Ww];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Ns => "ns",
            EdgeType::Ss => "ss",
            EdgeType::Ws => "ws",
            EdgeType::Ww => "ww",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            EdgeType::Ns => "Sentence Occurrence",
            EdgeType::Ss => "Sentence Similarity",
            EdgeType::Ws => "Word in Sentence",
            EdgeType::Ww => "Word Similarity",
        }
    }
}

impl std::str::FromStr for EdgeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown edge type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub weight: f32,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f32) -> Self {
        Edge {
            src: src as u32,
            dst: dst as u32,
            weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub window: usize,
    pub t_ss: f32,
    pub t_ww: f32,
    /// Per edge type, indexed by [`EdgeType::index`].
    pub include: [bool; 4],
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            window: DEFAULT_WINDOW,
            t_ss: DEFAULT_T_SS,
            t_ww: DEFAULT_T_WW,
            include: [true; 4],
        }
    }
}

impl GraphConfig {
    pub fn includes(&self, t: EdgeType) -> bool {
        self.include[t.index()]
    }

    pub fn without(mut self, t: EdgeType) -> Self {
        self.include[t.index()] = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        for (name, t) in [("t_ss", self.t_ss), ("t_ww", self.t_ww)] {
            if !(-1.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("{name} = {t} is outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroGraph {
    pub doc_id: String,
    /// Position of each sentence node in the source document.
    pub sentence_index: Vec<u32>,
    pub labels: Vec<u8>,
    pub sentence_dim: usize,
    /// Row-major `n x sentence_dim`.
    pub sentence_features: Vec<f32>,
    /// Vocabulary id of each word node, unique within the graph.
    pub word_ids: Vec<u32>,
    pub word_dim: usize,
    /// Row-major `m x word_dim`.
    pub word_features: Vec<f32>,
    pub edges_ns: Vec<Edge>,
    pub edges_ss: Vec<Edge>,
    /// `src` is the word node, `dst` the sentence node.
    pub edges_ws: Vec<Edge>,
    pub edges_ww: Vec<Edge>,
}

impl HeteroGraph {
    pub fn n(&self) -> usize {
        self.sentence_index.len()
    }

    pub fn m(&self) -> usize {
        self.word_ids.len()
    }

    pub fn sentence_feature(&self, i: usize) -> &[f32] {
        &self.sentence_features[i * self.sentence_dim..(i + 1) * self.sentence_dim]
    }

    pub fn word_feature(&self, j: usize) -> &[f32] {
        &self.word_features[j * self.word_dim..(j + 1) * self.word_dim]
    }

    pub fn edges(&self, t: EdgeType) -> &[Edge] {
        match t {
            EdgeType::Ns => &self.edges_ns,
            EdgeType::Ss => &self.edges_ss,
            EdgeType::Ws => &self.edges_ws,
            EdgeType::Ww => &self.edges_ww,
        }
    }

    pub fn edges_mut(&mut self, t: EdgeType) -> &mut Vec<Edge> {
        match t {
            EdgeType::Ns => &mut self.edges_ns,
            EdgeType::Ss => &mut self.edges_ss,
            EdgeType::Ws => &mut self.edges_ws,
            EdgeType::Ww => &mut self.edges_ww,
        }
    }

    pub fn edge_count(&self) -> usize {
        EdgeType::ALL.iter().map(|&t| self.edges(t).len()).sum()
    }

    /// Checks every structural invariant; used after building and loading.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(format!("graph `{}`: {msg}", self.doc_id)));
        let (n, m) = (self.n(), self.m());
        if n == 0 {
            return bad("no sentence nodes".into());
        }
        if self.labels.len() != n {
            return bad(format!("{} labels for {n} sentences", self.labels.len()));
        }
        if self.labels.iter().any(|&l| l > 1) {
            return bad("labels must be 0 or 1".into());
        }
        if self.sentence_features.len() != n * self.sentence_dim
            || self.word_features.len() != m * self.word_dim
        {
            return bad("feature matrix size does not match node count".into());
        }
        if self
            .sentence_features
            .iter()
            .chain(&self.word_features)
            .any(|x| !x.is_finite())
        {
            return bad("non-finite node feature".into());
        }
        let unique: HashSet<u32> = self.word_ids.iter().copied().collect();
        if unique.len() != m {
            return bad("duplicate word node ids".into());
        }
        if !self.edges_ns.is_empty() {
            let chain = self.edges_ns.len() == n - 1
                && self
                    .edges_ns
                    .iter()
                    .enumerate()
                    .all(|(i, e)| e.src as usize == i && e.dst as usize == i + 1 && e.weight == 1.0);
            if !chain {
                return bad("order edges do not form the sentence chain".into());
            }
        }
        let check = |edges: &[Edge], src_max: usize, dst_max: usize, ordered: bool, sim: bool| {
            let mut seen = HashSet::new();
            for e in edges {
                let (s, d) = (e.src as usize, e.dst as usize);
                if s >= src_max || d >= dst_max {
                    return Err(format!("edge ({s}, {d}) references a missing node"));
                }
                if ordered && s >= d {
                    return Err(format!("edge ({s}, {d}) is not in canonical order"));
                }
                if !e.weight.is_finite() || (sim && !(-1.0..=1.0).contains(&e.weight)) || (!sim && e.weight < 0.0) {
                    return Err(format!("edge ({s}, {d}) has invalid weight {}", e.weight));
                }
                if !seen.insert((s, d)) {
                    return Err(format!("duplicate edge ({s}, {d})"));
                }
            }
            Ok(())
        };
        check(&self.edges_ss, n, n, true, true)
            .and_then(|_| check(&self.edges_ws, m, n, false, false))
            .and_then(|_| check(&self.edges_ww, m, m, true, true))
            .or_else(bad)
    }

    /// Copy of the graph with one edge type removed.
    pub fn without(&self, t: EdgeType) -> HeteroGraph {
        let mut g = self.clone();
        g.edges_mut(t).clear();
        g
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        let put = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(MAGIC);
        put(&mut out, FORMAT_VERSION);
        put(&mut out, self.doc_id.len() as u32);
        out.extend_from_slice(self.doc_id.as_bytes());
        for v in [self.n(), self.m(), self.sentence_dim, self.word_dim] {
            put(&mut out, v as u32);
        }
        for &i in &self.sentence_index {
            put(&mut out, i);
        }
        let mut bits = vec![0u8; self.n().div_ceil(8)];
        for (i, &l) in self.labels.iter().enumerate() {
            if l == 1 {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&bits);
        for &w in &self.word_ids {
            put(&mut out, w);
        }
        for x in self.sentence_features.iter().chain(&self.word_features) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for t in EdgeType::ALL {
            let edges = self.edges(t);
            put(&mut out, edges.len() as u32);
            for e in edges {
                put(&mut out, e.src);
                put(&mut out, e.dst);
                out.extend_from_slice(&e.weight.to_le_bytes());
            }
        }
        out
    }

    pub fn serialized_len(&self) -> usize {
        4 + 4
            + 4
            + self.doc_id.len()
            + 16
            + 4 * self.n()
            + self.n().div_ceil(8)
            + 4 * self.m()
            + 4 * (self.sentence_features.len() + self.word_features.len())
            + EdgeType::ALL.iter().map(|&t| 4 + 12 * self.edges(t).len()).sum::<usize>()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<HeteroGraph> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("missing GLSS magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let id_len = r.u32()? as usize;
        let doc_id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| Error::Format("document id is not utf-8".into()))?;
        let n = r.u32()? as usize;
        let m = r.u32()? as usize;
        let sentence_dim = r.u32()? as usize;
        let word_dim = r.u32()? as usize;
        let sentence_index = r.u32s(n)?;
        let bits = r.take(n.div_ceil(8))?;
        let labels = (0..n).map(|i| (bits[i / 8] >> (i % 8)) & 1).collect();
        let word_ids = r.u32s(m)?;
        let sentence_features = r.f32s(n.checked_mul(sentence_dim).ok_or_else(ByteReader::overflow)?)?;
        let word_features = r.f32s(m.checked_mul(word_dim).ok_or_else(ByteReader::overflow)?)?;
        let mut edge_lists: Vec<Vec<Edge>> = Vec::with_capacity(4);
        for _ in EdgeType::ALL {
            let count = r.u32()? as usize;
            let mut edges = Vec::with_capacity(count.min(bytes.len() / 12));
            for _ in 0..count {
                edges.push(Edge {
                    src: r.u32()?,
                    dst: r.u32()?,
                    weight: f32::from_bits(r.u32()?),
                });
            }
            edge_lists.push(edges);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after graph payload",
                bytes.len() - r.pos
            )));
        }
        let mut lists = edge_lists.into_iter();
        let mut next = || lists.next().unwrap_or_default();
        let graph = HeteroGraph {
            doc_id,
            sentence_index,
            labels,
            sentence_dim,
            sentence_features,
            word_ids,
            word_dim,
            word_features,
            edges_ns: next(),
            edges_ss: next(),
            edges_ws: next(),
            edges_ww: next(),
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<HeteroGraph> {
        let g: HeteroGraph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<HeteroGraph> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        HeteroGraph::from_bytes(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn overflow() -> Error {
        Error::Format("size overflow".into())
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).ok_or_else(Self::overflow)?;
        if end > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated payload: need {end} bytes, have {}",
                self.bytes.len()
            )));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u32s(&mut self, count: usize) -> Result<Vec<u32>> {
        let b = self.take(count.checked_mul(4).ok_or_else(Self::overflow)?)?;
        Ok(b.chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        Ok(self.u32s(count)?.into_iter().map(f32::from_bits).collect())
    }
}

pub fn add_order_edges(n: usize) -> Vec<Edge> {
    (1..n).map(|i| Edge::new(i - 1, i, 1.0)).collect()
}

/// Pairs `(i, j)` with `0 < j - i <= window` and cosine at least `t_ss`.
pub fn add_sentence_similarity_edges(sent_emb: &[Vec<f32>], window: usize, t_ss: f32) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for i in 0..sent_emb.len() {
        for j in (i + 1)..sent_emb.len().min(i + window + 1) {
            let c = cosine(&sent_emb[i], &sent_emb[j])? as f32;
            if c >= t_ss {
                edges.push(Edge::new(i, j, c));
            }
        }
    }
    Ok(edges)
}

/// One edge per (word node, sentence) incidence, tf-idf weighted.
pub fn add_word_sentence_edges(doc: &Document, words: &[&str]) -> Result<Vec<Edge>> {
    let stats = DocTermStats::new(doc);
    let node: HashMap<&str, usize> = words.iter().enumerate().map(|(j, &w)| (w, j)).collect();
    let mut edges = Vec::new();
    for (i, sent) in doc.sentences.iter().enumerate() {
        let mut seen = HashSet::new();
        for tok in &sent.content_tokens {
            if let Some(&j) = node.get(tok.as_str()) {
                if seen.insert(j) {
                    edges.push(Edge::new(j, i, stats.tf_idf(tok, i)? as f32));
                }
            }
        }
    }
    edges.sort_by_key(|e| (e.src, e.dst));
    Ok(edges)
}

/// Unordered word pairs with cosine at least `t_ww`.
pub fn add_word_similarity_edges(word_emb: &[Vec<f32>], t_ww: f32) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for a in 0..word_emb.len() {
        for b in (a + 1)..word_emb.len() {
            let c = cosine(&word_emb[a], &word_emb[b])? as f32;
            if c >= t_ww {
                edges.push(Edge::new(a, b, c));
            }
        }
    }
    Ok(edges)
}

/// Builds document graphs from labeled documents.
pub struct GraphBuilder<'a> {
    pub vocab: &'a Vocabulary,
    pub filter: &'a dyn ContentWordFilter,
    pub word_emb: &'a EmbeddingTable,
    pub config: GraphConfig,
}

impl GraphBuilder<'_> {
    /// Unique content words of the document in first-occurrence order,
    /// restricted to the vocabulary.
    pub fn word_nodes<'d>(&self, doc: &'d Document) -> Vec<&'d str> {
        let mut seen = HashSet::new();
        let mut words = Vec::new();
        for sent in &doc.sentences {
            for tok in &sent.content_tokens {
                if self.vocab.contains(tok) && self.filter.is_content(tok) && seen.insert(tok.as_str()) {
                    words.push(tok.as_str());
                }
            }
        }
        words
    }

    pub fn build(&self, ldoc: &LabeledDocument, sent_emb: &[Vec<f32>]) -> Result<HeteroGraph> {
        let doc = &ldoc.document;
        let n = doc.sentences.len();
        if n == 0 {
            return Err(Error::Data(format!("document `{}` has no sentences", doc.id)));
        }
        if sent_emb.len() != n {
            return Err(Error::Data(format!(
                "document `{}`: {} sentence embeddings for {n} sentences",
                doc.id,
                sent_emb.len()
            )));
        }
        let sentence_dim = sent_emb[0].len();
        if let Some(bad) = sent_emb.iter().find(|v| v.len() != sentence_dim) {
            return Err(Error::Dimension {
                expected: sentence_dim,
                found: bad.len(),
            });
        }
        let words = self.word_nodes(doc);
        if words.is_empty() {
            log::warn!("document `{}` has no word nodes; graph is sentence-only", doc.id);
        }
        let word_vectors: Vec<Vec<f32>> = words.iter().map(|w| self.word_emb.vector(w)).collect();
        let cfg = &self.config;

        let edges_ns = if cfg.includes(EdgeType::Ns) { add_order_edges(n) } else { Vec::new() };
        let edges_ss = if cfg.includes(EdgeType::Ss) {
            add_sentence_similarity_edges(sent_emb, cfg.window, cfg.t_ss)?
        } else {
            Vec::new()
        };
        let edges_ws = if cfg.includes(EdgeType::Ws) { add_word_sentence_edges(doc, &words)? } else { Vec::new() };
        let edges_ww = if cfg.includes(EdgeType::Ww) {
            add_word_similarity_edges(&word_vectors, cfg.t_ww)?
        } else {
            Vec::new()
        };

        let graph = HeteroGraph {
            doc_id: doc.id.clone(),
            sentence_index: doc.sentences.iter().map(|s| s.index as u32).collect(),
            labels: ldoc.labels.clone(),
            sentence_dim,
            sentence_features: sent_emb.concat(),
            word_ids: words
                .iter()
                .map(|w| self.vocab.id(w).expect("word nodes are vocabulary tokens"))
                .collect(),
            word_dim: self.word_emb.dim(),
            word_features: word_vectors.concat(),
            edges_ns,
            edges_ss,
            edges_ws,
            edges_ww,
        };
        graph.validate()?;
        Ok(graph)
    }
}

/// Running sums behind [`GraphStats`]; merging two accumulators is
/// associative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StatsAccumulator {
    pub graphs: usize,
    pub sentence_nodes: u64,
    pub word_nodes: u64,
    pub edges: [u64; 4],
    pub bytes: u64,
}

impl StatsAccumulator {
    pub fn add(&mut self, g: &HeteroGraph) {
        self.graphs += 1;
        self.sentence_nodes += g.n() as u64;
        self.word_nodes += g.m() as u64;
        for t in EdgeType::ALL {
            self.edges[t.index()] += g.edges(t).len() as u64;
        }
        self.bytes += g.serialized_len() as u64;
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.graphs += other.graphs;
        self.sentence_nodes += other.sentence_nodes;
        self.word_nodes += other.word_nodes;
        for i in 0..4 {
            self.edges[i] += other.edges[i];
        }
        self.bytes += other.bytes;
        self
    }

    pub fn finish(&self) -> Result<GraphStats> {
        if self.graphs == 0 {
            return Err(Error::Data("no graphs to summarise".into()));
        }
        let g = self.graphs as f64;
        let nodes = (self.sentence_nodes + self.word_nodes) as f64;
        let edges_total: u64 = self.edges.iter().sum();
        let pct = |x: u64, total: f64| if total == 0.0 { 0.0 } else { 100.0 * x as f64 / total };
        Ok(GraphStats {
            graphs: self.graphs,
            mean_sentence_nodes: self.sentence_nodes as f64 / g,
            mean_word_nodes: self.word_nodes as f64 / g,
            mean_edges: self.edges.map(|e| e as f64 / g),
            sentence_node_share: pct(self.sentence_nodes, nodes),
            word_node_share: pct(self.word_nodes, nodes),
            edge_share: self.edges.map(|e| pct(e, edges_total as f64)),
            mean_bytes: self.bytes as f64 / g,
        })
    }
}

/// Corpus-level node/edge means and shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub graphs: usize,
    pub mean_sentence_nodes: f64,
    pub mean_word_nodes: f64,
    /// Mean edge count per type (ns, ss, ws, ww).
    pub mean_edges: [f64; 4],
    pub sentence_node_share: f64,
    pub word_node_share: f64,
    /// Percentage of all edges per type.
    pub edge_share: [f64; 4],
    pub mean_bytes: f64,
}

impl GraphStats {
    pub fn share(&self, t: EdgeType) -> f64 {
        self.edge_share[t.index()]
    }

    /// Aligned text table: one row of means, one row of shares.
    pub fn render(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>10}",
            "", "V_s", "V_w", "E_ns", "E_ss", "E_ws", "E_ww", "Disk"
        );
        let e = self.mean_edges;
        let _ = writeln!(
            s,
            "{:<10} {:>8.0} {:>8.0} {:>8.0} {:>8.0} {:>8.0} {:>8.0} {:>7.0} KB",
            label,
            self.mean_sentence_nodes,
            self.mean_word_nodes,
            e[0],
            e[1],
            e[2],
            e[3],
            self.mean_bytes / 1000.0
        );
        let p = self.edge_share;
        let _ = writeln!(
            s,
            "{:<10} {:>7.0}% {:>7.0}% {:>7.0}% {:>7.0}% {:>7.0}% {:>7.0}%",
            "", self.sentence_node_share, self.word_node_share, p[0], p[1], p[2], p[3]
        );
        s
    }
}

pub fn graph_stats<'a>(graphs: impl IntoIterator<Item = &'a HeteroGraph>) -> Result<GraphStats> {
    let mut acc = StatsAccumulator::default();
    for g in graphs {
        acc.add(g);
    }
    acc.finish()
}

/// Edge-type shares reported for PubMed graphs, used as the calibration
/// target (ns, ss, ws, ww, in percent).
pub const REFERENCE_EDGE_SHARES: [f64; 4] = [9.0, 6.0, 82.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub t_ss: f32,
    pub t_ww: f32,
    pub edge_share: [f64; 4],
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub points: Vec<CalibrationPoint>,
    pub best: CalibrationPoint,
}

/// Grid search over similarity thresholds. `graphs` must be built with
/// thresholds no higher than the smallest grid value so that every
/// thresholded edge set is a subset of the stored one.
pub fn calibrate(graphs: &[HeteroGraph], grid_ss: &[f32], grid_ww: &[f32], target: [f64; 4]) -> Result<Calibration> {
    if graphs.is_empty() || grid_ss.is_empty() || grid_ww.is_empty() {
        return Err(Error::Data("calibration needs graphs and a non-empty grid".into()));
    }
    let mut ss: Vec<f32> = graphs.iter().flat_map(|g| g.edges_ss.iter().map(|e| e.weight)).collect();
    let mut ww: Vec<f32> = graphs.iter().flat_map(|g| g.edges_ww.iter().map(|e| e.weight)).collect();
    ss.sort_by(f32::total_cmp);
    ww.sort_by(f32::total_cmp);
    let at_least = |sorted: &[f32], t: f32| (sorted.len() - sorted.partition_point(|&w| w < t)) as f64;
    let ns: f64 = graphs.iter().map(|g| g.edges_ns.len() as f64).sum();
    let ws: f64 = graphs.iter().map(|g| g.edges_ws.len() as f64).sum();

    let mut points = Vec::new();
    for &t_ss in grid_ss {
        for &t_ww in grid_ww {
            let counts = [ns, at_least(&ss, t_ss), ws, at_least(&ww, t_ww)];
            let total: f64 = counts.iter().sum();
            let edge_share = counts.map(|c| if total == 0.0 { 0.0 } else { 100.0 * c / total });
            let error = edge_share
                .iter()
                .zip(target)
                .map(|(s, t)| (s - t) * (s - t))
                .sum::<f64>();
            points.push(CalibrationPoint {
                t_ss,
                t_ww,
                edge_share,
                error,
            });
        }
    }
    let best = points
        .iter()
        .min_by(|a, b| a.error.total_cmp(&b.error))
        .cloned()
        .expect("grid is non-empty");
    Ok(Calibration { points, best })
}
