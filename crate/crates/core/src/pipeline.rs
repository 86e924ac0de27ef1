//! File-based pipeline commands.
//!
//! Every command reads a [`PipelineConfig`], consumes the outputs of earlier
//! commands from the output directory and writes its own outputs
//! atomically. Reports are deterministic JSON; wall-clock timings go to a
//! separate `timings/` sidecar so that reports from identical runs are
//! byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gat::{self, Checkpoint, GraphInput, ModelParams, Selection, TrainConfig};
use crate::graph::{self, Calibration, EdgeType, GraphBuilder, GraphConfig, GraphStats, HeteroGraph};
use crate::ingest::{self, Document, FilterStats, Preprocessor, Split, StopwordSet};
use crate::lexical::{
    self, EmbeddingTable, LexiconFilter, MissPolicy, SentenceEmbeddings, SentenceSource, Vocabulary,
};
use crate::oracle::{self, LabelOptions, LabelStats, LabeledDocument, Objective};
use crate::rouge::{score_summary, SummaryScore};

/// Writes `bytes` to a sibling temp file and renames it over `path`, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

const BUNDLE_MAGIC: &[u8; 4] = b"GLSB";
const BUNDLE_VERSION: u32 = 1;

/// Many graphs in one file: magic, version, `u64` count, then each graph's
/// serialized bytes prefixed by a `u64` length.
pub fn write_graph_bundle(path: &Path, graphs: &[HeteroGraph]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(BUNDLE_MAGIC);
    buf.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(graphs.len() as u64).to_le_bytes());
    for g in graphs {
        let bytes = g.to_bytes();
        buf.extend_from_slice(&(bytes.len() as u64).to_le_bytes());
        buf.extend_from_slice(&bytes);
    }
    write_atomic(path, &buf)
}

pub fn read_graph_bundle(path: &Path) -> Result<Vec<HeteroGraph>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != BUNDLE_MAGIC {
        return Err(bad("not a graph bundle"));
    }
    if u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) != BUNDLE_VERSION {
        return Err(bad("unsupported bundle version"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let mut at = 16;
    let mut graphs = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len_bytes = bytes.get(at..at + 8).ok_or_else(|| bad("truncated"))?;
        let len = u64::from_le_bytes(len_bytes.try_into().expect("8 bytes")) as usize;
        at += 8;
        let body = bytes.get(at..at.saturating_add(len)).ok_or_else(|| bad("truncated"))?;
        graphs.push(HeteroGraph::from_bytes(body)?);
        at += len;
    }
    if at != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(graphs)
}

/// Sorted indices of a seeded sample of `max` out of `len` items, or all of
/// them.
pub fn sample_indices(len: usize, max: Option<usize>, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    if let Some(max) = max {
        if max < len {
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(max);
            idx.sort_unstable();
        }
    }
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Ingest,
    Label,
    BuildGraphs,
    Stats,
    Train,
    Infer,
    Eval,
    Ablate,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Ingest,
        Command::Label,
        Command::BuildGraphs,
        Command::Stats,
        Command::Train,
        Command::Infer,
        Command::Eval,
        Command::Ablate,
        Command::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Label => "label",
            Command::BuildGraphs => "build-graphs",
            Command::Stats => "stats",
            Command::Train => "train",
            Command::Infer => "infer",
            Command::Eval => "eval",
            Command::Ablate => "ablate",
            Command::Calibrate => "calibrate",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

/// Everything a pipeline run depends on. Loaded from a `key = value` file
/// and command-line overrides; see [`PipelineConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Directory holding `<split>.jsonl` files.
    pub data: Option<PathBuf>,
    /// Per-split input files; take precedence over `data`.
    pub inputs: BTreeMap<Split, PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub word_embeddings: Option<PathBuf>,
    /// Width of the hashed fallback vectors used when no word-embedding file
    /// is configured and the miss policy is `hashed`.
    pub word_dim: usize,
    pub sentence_embeddings: Option<PathBuf>,
    pub miss_policy: MissPolicy,
    pub vocab_cap: usize,
    pub min_tokens: usize,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    pub objective: Objective,
    pub max_selected: Option<usize>,
    pub selection: Selection,
    /// Split used by `infer` and `eval`.
    pub eval_split: Split,
    pub output: PathBuf,
    pub max_docs: Option<usize>,
    pub sample_seed: u64,
    pub skip_existing: bool,
    pub calibrate_ss: Vec<f32>,
    pub calibrate_ww: Vec<f32>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: None,
            inputs: BTreeMap::new(),
            stopwords: None,
            lexicon: None,
            word_embeddings: None,
            word_dim: 300,
            sentence_embeddings: None,
            miss_policy: MissPolicy::Zero,
            vocab_cap: lexical::DEFAULT_VOCAB_CAP,
            min_tokens: ingest::DEFAULT_MIN_TOKENS,
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
            objective: Objective::F1,
            max_selected: None,
            selection: Selection::default(),
            eval_split: Split::Test,
            output: PathBuf::from("out"),
            max_docs: None,
            sample_seed: 0,
            skip_existing: false,
            calibrate_ss: (3..=9).map(|i| i as f32 / 10.0).collect(),
            calibrate_ww: (10..=19).map(|i| i as f32 / 20.0).collect(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_optional_path(value: &str, base: Option<&Path>) -> Option<PathBuf> {
    if value.is_empty() || value == "none" {
        return None;
    }
    let p = PathBuf::from(value);
    Some(match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 36] = [
        "data",
        "train",
        "validation",
        "test",
        "stopwords",
        "lexicon",
        "word_embeddings",
        "word_dim",
        "sentence_embeddings",
        "miss_policy",
        "vocab_cap",
        "min_tokens",
        "window",
        "t_ss",
        "t_ww",
        "edges",
        "lr",
        "batch_size",
        "max_epochs",
        "patience",
        "keep_prob",
        "layers",
        "hidden",
        "lambda_pos",
        "lambda_min",
        "objective",
        "max_selected",
        "selection",
        "eval_split",
        "output",
        "seed",
        "max_docs",
        "sample_seed",
        "skip_existing",
        "calibrate_ss",
        "calibrate_ww",
    ];

    /// Applies one `key = value` setting. Relative paths are resolved
    /// against `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "data" => self.data = parse_optional_path(value, base),
            k @ ("train" | "validation" | "test") => {
                let split: Split = k.parse()?;
                match parse_optional_path(value, base) {
                    Some(p) => {
                        self.inputs.insert(split, p);
                    }
                    None => {
                        self.inputs.remove(&split);
                    }
                }
            }
            "stopwords" => self.stopwords = parse_optional_path(value, base),
            "lexicon" => self.lexicon = parse_optional_path(value, base),
            "word_embeddings" => self.word_embeddings = parse_optional_path(value, base),
            "word_dim" => self.word_dim = parse_value(key, value)?,
            "sentence_embeddings" => self.sentence_embeddings = parse_optional_path(value, base),
            "miss_policy" => self.miss_policy = value.parse()?,
            "vocab_cap" => self.vocab_cap = parse_value(key, value)?,
            "min_tokens" => self.min_tokens = parse_value(key, value)?,
            "window" => self.graph.window = parse_value(key, value)?,
            "t_ss" => self.graph.t_ss = parse_value(key, value)?,
            "t_ww" => self.graph.t_ww = parse_value(key, value)?,
            "edges" => {
                let types: Vec<EdgeType> = parse_list(key, value)?;
                for t in EdgeType::ALL {
                    self.graph.include[t.index()] = types.contains(&t);
                }
            }
            "lr" => self.train.lr = parse_value(key, value)?,
            "batch_size" => self.train.batch_size = parse_value(key, value)?,
            "max_epochs" => self.train.max_epochs = parse_value(key, value)?,
            "patience" => self.train.patience = parse_value(key, value)?,
            "keep_prob" => self.train.keep_prob = parse_value(key, value)?,
            "layers" => self.train.layers = parse_value(key, value)?,
            "hidden" => self.train.hidden = parse_value(key, value)?,
            "lambda_pos" => {
                self.train.lambda_pos = match value {
                    "auto" | "none" | "" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "lambda_min" => self.train.lambda_min = parse_value(key, value)?,
            "objective" => self.objective = value.parse()?,
            "max_selected" => {
                self.max_selected = match value {
                    "none" | "" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "selection" => self.selection = value.parse()?,
            "eval_split" => self.eval_split = value.parse()?,
            "output" => self.output = parse_optional_path(value, base).unwrap_or_else(|| PathBuf::from("out")),
            "seed" => self.train.seed = parse_value(key, value)?,
            "max_docs" => {
                self.max_docs = match value {
                    "none" | "" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "sample_seed" => self.sample_seed = parse_value(key, value)?,
            "skip_existing" => self.skip_existing = parse_value(key, value)?,
            "calibrate_ss" => self.calibrate_ss = parse_list(key, value)?,
            "calibrate_ww" => self.calibrate_ww = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(k, v, base)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    /// Applies `key=value` overrides (paths relative to the working
    /// directory).
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{}` is not key=value", o.as_ref())))?;
            self.set(k, v, None)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.train.validate()?;
        if self.vocab_cap == 0 {
            return Err(Error::Config("vocab_cap must be positive".into()));
        }
        if self.word_dim == 0 {
            return Err(Error::Config("word_dim must be positive".into()));
        }
        Ok(())
    }

    /// Canonical text form with every key, suitable for re-loading.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let input = |split: Split| fmt_path(&self.inputs.get(&split).cloned());
        let edges: Vec<&str> = EdgeType::ALL
            .iter()
            .filter(|t| self.graph.includes(**t))
            .map(|t| t.name())
            .collect();
        let t = &self.train;
        let rows: Vec<(&str, String)> = vec![
            ("data", fmt_path(&self.data)),
            ("train", input(Split::Train)),
            ("validation", input(Split::Validation)),
            ("test", input(Split::Test)),
            ("stopwords", fmt_path(&self.stopwords)),
            ("lexicon", fmt_path(&self.lexicon)),
            ("word_embeddings", fmt_path(&self.word_embeddings)),
            ("word_dim", self.word_dim.to_string()),
            ("sentence_embeddings", fmt_path(&self.sentence_embeddings)),
            ("miss_policy", format!("{:?}", self.miss_policy).to_lowercase()),
            ("vocab_cap", self.vocab_cap.to_string()),
            ("min_tokens", self.min_tokens.to_string()),
            ("window", self.graph.window.to_string()),
            ("t_ss", self.graph.t_ss.to_string()),
            ("t_ww", self.graph.t_ww.to_string()),
            ("edges", edges.join(",")),
            ("lr", t.lr.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("patience", t.patience.to_string()),
            ("keep_prob", t.keep_prob.to_string()),
            ("layers", t.layers.to_string()),
            ("hidden", t.hidden.to_string()),
            ("lambda_pos", t.lambda_pos.map_or("auto".into(), |l| l.to_string())),
            ("lambda_min", t.lambda_min.to_string()),
            ("objective", format!("{:?}", self.objective).to_lowercase()),
            ("max_selected", self.max_selected.map_or("none".into(), |m| m.to_string())),
            ("selection", self.selection.to_string()),
            ("eval_split", self.eval_split.as_str().into()),
            ("output", self.output.display().to_string()),
            ("seed", t.seed.to_string()),
            ("max_docs", self.max_docs.map_or("none".into(), |m| m.to_string())),
            ("sample_seed", self.sample_seed.to_string()),
            ("skip_existing", self.skip_existing.to_string()),
            ("calibrate_ss", fmt_list(&self.calibrate_ss)),
            ("calibrate_ww", fmt_list(&self.calibrate_ww)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn input_path(&self, split: Split) -> Option<PathBuf> {
        self.inputs.get(&split).cloned().or_else(|| self.data.clone())
    }

    pub fn layout(&self) -> Layout {
        Layout {
            root: self.output.clone(),
        }
    }

    fn label_options(&self) -> LabelOptions {
        LabelOptions {
            objective: self.objective,
            max_selected: self.max_selected,
        }
    }
}

/// Paths of every artifact under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn cleaned(&self, split: Split) -> PathBuf {
        self.root.join("cleaned").join(format!("{}.jsonl", split.as_str()))
    }

    pub fn labeled(&self, split: Split) -> PathBuf {
        self.root.join("labeled").join(format!("{}.jsonl", split.as_str()))
    }

    pub fn graphs(&self, split: Split) -> PathBuf {
        self.root.join("graphs").join(format!("{}.glsb", split.as_str()))
    }

    pub fn vocabulary(&self) -> PathBuf {
        self.root.join("vocab.json")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.glsm")
    }

    pub fn history(&self) -> PathBuf {
        self.root.join("history.json")
    }

    pub fn summaries(&self, split: Split) -> PathBuf {
        self.root.join("summaries").join(format!("{}.jsonl", split.as_str()))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.json"))
    }

    pub fn table(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(format!("{name}.txt"))
    }

    pub fn timings(&self, command: Command) -> PathBuf {
        self.root.join("timings").join(format!("{}.json", command.name()))
    }

    pub fn resolved_config(&self, command: Command) -> PathBuf {
        self.root.join("config").join(format!("{}.conf", command.name()))
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Data(format!("{what} not found at {}", path.display())))
    }
}

/// Like [`require_file`] for artifacts produced by an earlier command.
fn require_output(path: &Path, what: &str, producer: Command) -> Result<()> {
    require_file(path, what).map_err(|e| Error::Data(format!("{e} (run `{}` first)", producer.name())))
}

fn existing_splits(paths: impl Fn(Split) -> PathBuf) -> Vec<Split> {
    Split::ALL.into_iter().filter(|&s| paths(s).exists()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSplitReport {
    pub read: usize,
    pub malformed: usize,
    pub missing_abstract: usize,
    pub filter: FilterStats,
    /// Documents written after sampling.
    pub documents: usize,
    pub mean_sentences: f64,
    pub mean_tokens: f64,
    pub mean_abstract_tokens: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub splits: BTreeMap<String, IngestSplitReport>,
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<IngestReport> {
    let layout = cfg.layout();
    let stopwords = match &cfg.stopwords {
        Some(p) => StopwordSet::load(p)?,
        None => StopwordSet::english(),
    };
    let pre = Preprocessor {
        stopwords,
        min_tokens: cfg.min_tokens,
    };
    let mut report = IngestReport::default();
    let mut any = false;
    for split in Split::ALL {
        let Some(path) = cfg.input_path(split) else {
            continue;
        };
        if path.is_dir() && ingest::load_dataset(&path, &split).is_err() {
            log::info!("no {} split under {}", split.as_str(), path.display());
            continue;
        }
        any = true;
        let mut reader = ingest::load_dataset(&path, &split)?;
        let raw: Vec<_> = reader.by_ref().collect();
        let processed: Vec<Document> = raw.par_iter().map(|r| pre.process(r)).collect();
        let (kept, filter) = ingest::filter_documents(processed);
        let docs: Vec<Document> = sample_indices(kept.len(), cfg.max_docs, cfg.sample_seed)
            .into_iter()
            .map(|i| kept[i].clone())
            .collect();
        let n = docs.len().max(1) as f64;
        let r = IngestSplitReport {
            read: raw.len() + reader.skipped(),
            malformed: reader.malformed(),
            missing_abstract: reader.missing_abstract(),
            filter,
            documents: docs.len(),
            mean_sentences: docs.iter().map(|d| d.sentences.len() as f64).sum::<f64>() / n,
            mean_tokens: docs.iter().map(|d| d.token_count() as f64).sum::<f64>() / n,
            mean_abstract_tokens: docs.iter().map(|d| d.abstract_token_count() as f64).sum::<f64>() / n,
        };
        write_jsonl(&layout.cleaned(split), &docs)?;
        report.splits.insert(split.as_str().to_string(), r);
    }
    if !any {
        return Err(Error::Config("no input splits configured (set `data` or per-split paths)".into()));
    }
    write_json(&layout.report("ingest"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub objective: Objective,
    pub splits: BTreeMap<String, LabelStats>,
}

pub fn cmd_label(cfg: &PipelineConfig) -> Result<LabelReport> {
    let layout = cfg.layout();
    let splits = existing_splits(|s| layout.cleaned(s));
    if splits.is_empty() {
        return Err(Error::Data("no cleaned documents found (run ingest first)".into()));
    }
    let mut report = LabelReport {
        objective: cfg.objective,
        splits: BTreeMap::new(),
    };
    for split in splits {
        let docs: Vec<Document> = read_jsonl(&layout.cleaned(split))?;
        let docs: Vec<Document> = sample_indices(docs.len(), cfg.max_docs, cfg.sample_seed)
            .into_iter()
            .map(|i| docs[i].clone())
            .collect();
        let (labeled, stats) = oracle::label_corpus(&docs, &cfg.label_options());
        write_jsonl(&layout.labeled(split), &labeled)?;
        report.splits.insert(split.as_str().to_string(), stats);
    }
    write_json(&layout.report("label"), &report)?;
    Ok(report)
}

/// Everything needed to turn labeled documents into graphs.
pub struct GraphResources {
    pub vocab: Vocabulary,
    pub filter: LexiconFilter,
    pub words: EmbeddingTable,
    pub sentences: Option<SentenceEmbeddings>,
}

impl GraphResources {
    pub fn load(cfg: &PipelineConfig, vocab: Vocabulary) -> Result<Self> {
        let filter = match (&cfg.stopwords, &cfg.lexicon) {
            (None, None) => LexiconFilter::english(),
            (s, l) => {
                let stop = match s {
                    Some(p) => StopwordSet::load(p)?,
                    None => StopwordSet::english(),
                };
                let lex = match l {
                    Some(p) => {
                        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                        LexiconFilter::parse_lexicon(&text)
                    }
                    None => LexiconFilter::parse_lexicon(lexical::DEFAULT_LEXICON),
                };
                LexiconFilter::new(stop, lex)
            }
        };
        let words = match &cfg.word_embeddings {
            Some(p) => lexical::load_word_embeddings(p, &vocab, cfg.miss_policy)?,
            None if cfg.miss_policy == MissPolicy::Hashed => EmbeddingTable::new(cfg.word_dim, MissPolicy::Hashed),
            None => {
                return Err(Error::Config(
                    "word_embeddings is not set; provide a file or use miss_policy = hashed".into(),
                ))
            }
        };
        let sentences = cfg
            .sentence_embeddings
            .as_ref()
            .map(|p| SentenceEmbeddings::load(p))
            .transpose()?;
        if sentences.is_none() {
            log::info!("sentence_embeddings not set; sentence features are mean-pooled word vectors");
        }
        Ok(GraphResources {
            vocab,
            filter,
            words,
            sentences,
        })
    }

    fn source(&self) -> SentenceSource<'_> {
        match &self.sentences {
            Some(s) => SentenceSource::External(s),
            None => SentenceSource::MeanPooled(&self.words),
        }
    }

    pub fn build(&self, docs: &[LabeledDocument], config: GraphConfig) -> Result<Vec<HeteroGraph>> {
        let builder = GraphBuilder {
            vocab: &self.vocab,
            filter: &self.filter,
            word_emb: &self.words,
            config,
        };
        docs.par_iter()
            .map(|d| {
                let emb = lexical::sentence_embeddings(&d.document, self.source())?;
                builder.build(d, &emb)
            })
            .collect()
    }
}

fn load_resources(cfg: &PipelineConfig) -> Result<GraphResources> {
    let layout = cfg.layout();
    let vocab = if layout.vocabulary().exists() {
        Vocabulary::load(&layout.vocabulary())?
    } else {
        let path = layout.labeled(Split::Train);
        require_output(&path, "labeled training documents", Command::Label)?;
        let train: Vec<LabeledDocument> = read_jsonl(&path)?;
        let vocab = lexical::build_vocabulary(train.iter().map(|d| &d.document), cfg.vocab_cap)?;
        vocab.save(&layout.vocabulary())?;
        vocab
    };
    GraphResources::load(cfg, vocab)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub config: Option<GraphConfig>,
    pub splits: BTreeMap<String, GraphStats>,
}

impl GraphReport {
    pub fn render(&self) -> String {
        self.splits.iter().map(|(k, s)| s.render(k)).collect::<Vec<_>>().join("\n")
    }
}

pub fn cmd_build_graphs(cfg: &PipelineConfig) -> Result<GraphReport> {
    let layout = cfg.layout();
    let splits = existing_splits(|s| layout.labeled(s));
    if splits.is_empty() {
        return Err(Error::Data("no labeled documents found (run label first)".into()));
    }
    if let Some(p) = &cfg.word_embeddings {
        require_file(p, "word embedding file")?;
    }
    // a stale vocabulary from an earlier run would silently change node sets
    if layout.vocabulary().exists() && layout.labeled(Split::Train).exists() {
        std::fs::remove_file(layout.vocabulary()).map_err(|e| Error::io(layout.vocabulary(), e))?;
    }
    let res = load_resources(cfg)?;
    let mut report = GraphReport {
        config: Some(cfg.graph),
        splits: BTreeMap::new(),
    };
    for split in splits {
        let docs: Vec<LabeledDocument> = read_jsonl(&layout.labeled(split))?;
        let graphs = res.build(&docs, cfg.graph)?;
        write_graph_bundle(&layout.graphs(split), &graphs)?;
        report.splits.insert(split.as_str().to_string(), graph::graph_stats(&graphs)?);
    }
    write_json(&layout.report("graphs"), &report)?;
    write_atomic(&layout.table("graphs"), report.render().as_bytes())?;
    Ok(report)
}

pub fn cmd_stats(cfg: &PipelineConfig) -> Result<GraphReport> {
    let layout = cfg.layout();
    let splits = existing_splits(|s| layout.graphs(s));
    if splits.is_empty() {
        return Err(Error::Data("no graph files found (run build-graphs first)".into()));
    }
    let mut report = GraphReport::default();
    for split in splits {
        let graphs = read_graph_bundle(&layout.graphs(split))?;
        let graphs: Vec<HeteroGraph> = sample_indices(graphs.len(), cfg.max_docs, cfg.sample_seed)
            .into_iter()
            .map(|i| graphs[i].clone())
            .collect();
        report.splits.insert(split.as_str().to_string(), graph::graph_stats(&graphs)?);
    }
    write_json(&layout.report("stats"), &report)?;
    write_atomic(&layout.table("stats"), report.render().as_bytes())?;
    Ok(report)
}

fn load_inputs(cfg: &PipelineConfig, split: Split) -> Result<Vec<GraphInput>> {
    let path = cfg.layout().graphs(split);
    require_output(&path, &format!("{} graphs", split.as_str()), Command::BuildGraphs)?;
    let graphs = read_graph_bundle(&path)?;
    let idx = sample_indices(graphs.len(), cfg.max_docs, cfg.sample_seed);
    Ok(idx.into_iter().map(|i| GraphInput::new(&graphs[i])).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_graphs: usize,
    pub val_graphs: usize,
    pub parameters: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub final_lambda_pos: f64,
    pub stopped_early: bool,
    pub history: gat::TrainHistory,
}

fn strip(inputs: &[GraphInput], drop: Option<EdgeType>) -> Vec<GraphInput> {
    let Some(t) = drop else {
        return inputs.to_vec();
    };
    inputs
        .iter()
        .map(|g| {
            let mut g = g.clone();
            for (r, rel) in gat::RELATIONS.iter().enumerate() {
                if rel.edge_type == t {
                    g.adjacency[r] = gat::Adjacency {
                        offsets: vec![0; g.adjacency[r].offsets.len()],
                        ..Default::default()
                    };
                }
            }
            g
        })
        .collect()
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainReport> {
    let layout = cfg.layout();
    let train = load_inputs(cfg, Split::Train)?;
    let val = load_inputs(cfg, Split::Validation)?;
    let outcome = gat::train(&train, &val, &cfg.train)?;
    let ckpt = Checkpoint {
        params: outcome.params.clone(),
        optimizer: outcome.optimizer.clone(),
        weights: outcome.weights,
        epoch: outcome.epochs_run,
        best_epoch: outcome.history.best_epoch,
    };
    ckpt.save(&layout.model())?;
    write_json(&layout.history(), &outcome.history)?;
    let best_val_loss = outcome
        .history
        .epochs
        .iter()
        .find(|e| e.epoch == outcome.history.best_epoch)
        .map_or(f64::NAN, |e| e.val_loss);
    let report = TrainReport {
        train_graphs: train.len(),
        val_graphs: val.len(),
        parameters: outcome.params.parameter_count(),
        epochs_run: outcome.epochs_run,
        best_epoch: outcome.history.best_epoch,
        best_val_loss,
        final_lambda_pos: outcome.weights.lambda_pos,
        stopped_early: outcome.history.stopped_early,
        history: outcome.history,
    };
    write_json(&layout.report("train"), &report)?;
    Ok(report)
}

/// One line of a summaries file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub doc_id: String,
    /// Sentence positions in document order.
    pub selected: Vec<usize>,
    pub sentences: Vec<String>,
}

fn load_labeled_map(cfg: &PipelineConfig, split: Split) -> Result<BTreeMap<String, LabeledDocument>> {
    let path = cfg.layout().labeled(split);
    require_output(&path, &format!("labeled {} documents", split.as_str()), Command::Label)?;
    let docs: Vec<LabeledDocument> = read_jsonl(&path)?;
    Ok(docs.into_iter().map(|d| (d.document.id.clone(), d)).collect())
}

/// Runs the model over graphs and selects sentences.
pub fn summarize(
    graphs: &[HeteroGraph],
    params: &ModelParams,
    docs: &BTreeMap<String, LabeledDocument>,
    selection: Selection,
) -> Result<Vec<SummaryRow>> {
    graphs
        .par_iter()
        .map(|g| {
            let probs = gat::predict(&GraphInput::new(g), params)?;
            let picked = gat::predict_summary(&probs, selection);
            let doc = docs
                .get(&g.doc_id)
                .ok_or_else(|| Error::Data(format!("graph `{}` has no labeled document", g.doc_id)))?;
            let selected: Vec<usize> = picked.iter().map(|&i| g.sentence_index[i] as usize).collect();
            let sentences = selected
                .iter()
                .map(|&i| doc.document.sentences.get(i).map(|s| s.raw_text.clone()).unwrap_or_default())
                .collect();
            Ok(SummaryRow {
                doc_id: g.doc_id.clone(),
                selected,
                sentences,
            })
        })
        .collect()
}

fn check_model(cfg: &PipelineConfig, params: &ModelParams) -> Result<()> {
    let mc = &params.config;
    if mc.layers != cfg.train.layers || mc.hidden != cfg.train.hidden {
        return Err(Error::Config(format!(
            "checkpoint has layers={} hidden={} but the config says layers={} hidden={}",
            mc.layers, mc.hidden, cfg.train.layers, cfg.train.hidden
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferReport {
    pub split: String,
    pub documents: usize,
    pub selection: String,
    pub mean_selected: f64,
}

pub fn cmd_infer(cfg: &PipelineConfig) -> Result<InferReport> {
    let layout = cfg.layout();
    require_output(&layout.model(), "model checkpoint", Command::Train)?;
    let ckpt = Checkpoint::load(&layout.model())?;
    check_model(cfg, &ckpt.params)?;
    let split = cfg.eval_split;
    let path = layout.graphs(split);
    require_output(&path, &format!("{} graphs", split.as_str()), Command::BuildGraphs)?;
    let graphs = read_graph_bundle(&path)?;
    let docs = load_labeled_map(cfg, split)?;
    let rows = summarize(&graphs, &ckpt.params, &docs, cfg.selection)?;
    write_jsonl(&layout.summaries(split), &rows)?;
    let report = InferReport {
        split: split.as_str().into(),
        documents: rows.len(),
        selection: cfg.selection.to_string(),
        mean_selected: rows.iter().map(|r| r.selected.len() as f64).sum::<f64>() / rows.len().max(1) as f64,
    };
    write_json(&layout.report(&format!("infer_{}", split.as_str())), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub doc_id: String,
    pub selected: Vec<usize>,
    pub scores: SummaryScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub documents: usize,
    pub mean: SummaryScore,
    pub oracle_mean: SummaryScore,
    pub label_balance: LabelStats,
    pub per_document: Vec<DocumentScore>,
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8}", "", "P", "R", "F1");
        for (name, a, b) in [
            ("R-1", self.mean.rouge1, self.oracle_mean.rouge1),
            ("R-2", self.mean.rouge2, self.oracle_mean.rouge2),
            ("R-L", self.mean.rouge_l, self.oracle_mean.rouge_l),
        ] {
            let _ = writeln!(
                s,
                "{name:<10} {:>8.2} {:>8.2} {:>8.2}",
                100.0 * a.precision,
                100.0 * a.recall,
                100.0 * a.f1
            );
            let _ = writeln!(
                s,
                "{:<10} {:>8.2} {:>8.2} {:>8.2}",
                format!("{name} orc"),
                100.0 * b.precision,
                100.0 * b.recall,
                100.0 * b.f1
            );
        }
        s
    }
}

/// Scores summaries against gold abstracts. Every summary must refer to a
/// known document.
pub fn evaluate_summaries(
    split: Split,
    rows: &[SummaryRow],
    docs: &BTreeMap<String, LabeledDocument>,
) -> Result<EvalReport> {
    let missing: Vec<&str> = rows
        .iter()
        .filter(|r| !docs.contains_key(&r.doc_id))
        .map(|r| r.doc_id.as_str())
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).copied().collect();
        return Err(Error::Data(format!(
            "{} summaries refer to unknown documents: {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > shown.len() { ", ..." } else { "" }
        )));
    }
    let per_document: Vec<DocumentScore> = rows
        .iter()
        .map(|r| {
            let doc = &docs[&r.doc_id].document;
            let picked: Vec<&[String]> = r
                .selected
                .iter()
                .filter_map(|&i| doc.sentences.get(i).map(|s| s.tokens.as_slice()))
                .collect();
            DocumentScore {
                doc_id: r.doc_id.clone(),
                selected: r.selected.clone(),
                scores: score_summary(&picked, &doc.abstract_sentences),
            }
        })
        .collect();
    let scored: Vec<LabeledDocument> = rows.iter().map(|r| docs[&r.doc_id].clone()).collect();
    let label_balance = LabelStats::from_labeled(&scored);
    Ok(EvalReport {
        split: split.as_str().into(),
        documents: per_document.len(),
        mean: SummaryScore::mean(&per_document.iter().map(|d| d.scores).collect::<Vec<_>>()),
        oracle_mean: label_balance.mean_oracle,
        label_balance,
        per_document,
    })
}

pub fn cmd_eval(cfg: &PipelineConfig) -> Result<EvalReport> {
    let layout = cfg.layout();
    let split = cfg.eval_split;
    let path = layout.summaries(split);
    require_output(&path, &format!("{} summaries", split.as_str()), Command::Infer)?;
    let rows: Vec<SummaryRow> = read_jsonl(&path)?;
    let docs = load_labeled_map(cfg, split)?;
    let report = evaluate_summaries(split, &rows, &docs)?;
    write_json(&layout.report(&format!("eval_{}", split.as_str())), &report)?;
    write_atomic(&layout.table(&format!("eval_{}", split.as_str())), report.render().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `None` for the full model.
    pub removed: Option<EdgeType>,
    pub val_rouge: SummaryScore,
    /// Baseline R-1 F1 minus this variant's, in points.
    pub rouge1_drop: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub baseline: AblationRow,
    /// Sorted by decreasing R-1 drop.
    pub variants: Vec<AblationRow>,
}

impl AblationReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>8} {:>8} {:>8} {:>8}", "variant", "R-1", "R-2", "R-L", "drop");
        for row in std::iter::once(&self.baseline).chain(&self.variants) {
            let name = row.removed.map_or("full".to_string(), |t| format!("w/o {}", t.name()));
            let _ = writeln!(
                s,
                "{name:<12} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
                100.0 * row.val_rouge.rouge1.f1,
                100.0 * row.val_rouge.rouge2.f1,
                100.0 * row.val_rouge.rouge_l.f1,
                row.rouge1_drop
            );
        }
        s
    }
}

pub fn cmd_ablate(cfg: &PipelineConfig) -> Result<AblationReport> {
    let layout = cfg.layout();
    let train = load_inputs(cfg, Split::Train)?;
    let val_path = layout.graphs(Split::Validation);
    require_output(&val_path, "validation graphs", Command::BuildGraphs)?;
    let val_graphs = read_graph_bundle(&val_path)?;
    let val_graphs: Vec<HeteroGraph> = sample_indices(val_graphs.len(), cfg.max_docs, cfg.sample_seed)
        .into_iter()
        .map(|i| val_graphs[i].clone())
        .collect();
    let docs = load_labeled_map(cfg, Split::Validation)?;

    let variant = |drop: Option<EdgeType>| -> Result<(SummaryScore, usize)> {
        let tr = strip(&train, drop);
        let vg: Vec<HeteroGraph> = val_graphs
            .iter()
            .map(|g| drop.map_or_else(|| g.clone(), |t| g.without(t)))
            .collect();
        let vi: Vec<GraphInput> = vg.iter().map(GraphInput::new).collect();
        let outcome = gat::train(&tr, &vi, &cfg.train)?;
        let rows = summarize(&vg, &outcome.params, &docs, cfg.selection)?;
        let report = evaluate_summaries(Split::Validation, &rows, &docs)?;
        log::info!(
            "ablation {}: R-1 {:.4}",
            drop.map_or("full", |t| t.name()),
            report.mean.rouge1.f1
        );
        Ok((report.mean, outcome.epochs_run))
    };
    let (base, base_epochs) = variant(None)?;
    let baseline = AblationRow {
        removed: None,
        val_rouge: base,
        rouge1_drop: 0.0,
        epochs_run: base_epochs,
    };
    let mut variants = Vec::new();
    for t in EdgeType::ALL {
        let (score, epochs) = variant(Some(t))?;
        variants.push(AblationRow {
            removed: Some(t),
            val_rouge: score,
            rouge1_drop: 100.0 * (base.rouge1.f1 - score.rouge1.f1),
            epochs_run: epochs,
        });
    }
    variants.sort_by(|a, b| b.rouge1_drop.total_cmp(&a.rouge1_drop));
    let report = AblationReport { baseline, variants };
    write_json(&layout.report("ablation"), &report)?;
    write_atomic(&layout.table("ablation"), report.render().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub documents: usize,
    pub target: [f64; 4],
    pub calibration: Calibration,
}

/// Sweeps the similarity thresholds on the training split and reports the
/// pair whose edge-type shares best match the reference shares.
pub fn cmd_calibrate(cfg: &PipelineConfig) -> Result<CalibrationReport> {
    let layout = cfg.layout();
    let path = layout.labeled(Split::Train);
    require_output(&path, "labeled training documents", Command::Label)?;
    let docs: Vec<LabeledDocument> = read_jsonl(&path)?;
    let docs: Vec<LabeledDocument> = sample_indices(docs.len(), cfg.max_docs, cfg.sample_seed)
        .into_iter()
        .map(|i| docs[i].clone())
        .collect();
    let res = load_resources(cfg)?;
    let lowest = |grid: &[f32]| grid.iter().copied().fold(f32::INFINITY, f32::min);
    let mut gc = cfg.graph;
    gc.t_ss = lowest(&cfg.calibrate_ss).max(-1.0);
    gc.t_ww = lowest(&cfg.calibrate_ww).max(-1.0);
    gc.include = [true; 4];
    let graphs = res.build(&docs, gc)?;
    let calibration = graph::calibrate(&graphs, &cfg.calibrate_ss, &cfg.calibrate_ww, graph::REFERENCE_EDGE_SHARES)?;
    let report = CalibrationReport {
        documents: graphs.len(),
        target: graph::REFERENCE_EDGE_SHARES,
        calibration,
    };
    write_json(&layout.report("calibration"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Timing {
    command: String,
    seconds: f64,
}

fn outputs_exist(cfg: &PipelineConfig, command: Command) -> bool {
    let l = cfg.layout();
    let path = match command {
        Command::Ingest => l.report("ingest"),
        Command::Label => l.report("label"),
        Command::BuildGraphs => l.report("graphs"),
        Command::Stats => l.report("stats"),
        Command::Train => l.model(),
        Command::Infer => l.summaries(cfg.eval_split),
        Command::Eval => l.report(&format!("eval_{}", cfg.eval_split.as_str())),
        Command::Ablate => l.report("ablation"),
        Command::Calibrate => l.report("calibration"),
    };
    path.exists()
}

/// Runs one command: writes the resolved config, the outputs and a timing
/// sidecar, and returns a short human-readable summary.
pub fn run(command: Command, cfg: &PipelineConfig) -> Result<String> {
    cfg.validate()?;
    let layout = cfg.layout();
    if cfg.skip_existing && outputs_exist(cfg, command) {
        return Ok(format!("{}: outputs exist, skipped", command.name()));
    }
    write_atomic(&layout.resolved_config(command), cfg.render().as_bytes())?;
    let start = Instant::now();
    let message = match command {
        Command::Ingest => {
            let r = cmd_ingest(cfg)?;
            r.splits
                .iter()
                .map(|(k, s)| {
                    format!(
                        "{k}: {} documents ({} read, {} removed, {} malformed), {:.1} sentences/doc",
                        s.documents,
                        s.read,
                        s.filter.removed(),
                        s.malformed,
                        s.mean_sentences
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::Label => {
            let r = cmd_label(cfg)?;
            r.splits
                .iter()
                .map(|(k, s)| {
                    format!(
                        "{k}: {} documents, positive rate {:.3}, oracle R-1/R-2/R-L {:.2}/{:.2}/{:.2}",
                        s.documents,
                        s.positive_rate,
                        100.0 * s.mean_oracle.rouge1.f1,
                        100.0 * s.mean_oracle.rouge2.f1,
                        100.0 * s.mean_oracle.rouge_l.f1
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::BuildGraphs => cmd_build_graphs(cfg)?.render(),
        Command::Stats => cmd_stats(cfg)?.render(),
        Command::Train => {
            let r = cmd_train(cfg)?;
            format!(
                "{} epochs, best epoch {} (val loss {:.5}), lambda_pos {:.4}",
                r.epochs_run, r.best_epoch, r.best_val_loss, r.final_lambda_pos
            )
        }
        Command::Infer => {
            let r = cmd_infer(cfg)?;
            format!(
                "{}: {} summaries, {:.2} sentences each",
                r.split, r.documents, r.mean_selected
            )
        }
        Command::Eval => cmd_eval(cfg)?.render(),
        Command::Ablate => cmd_ablate(cfg)?.render(),
        Command::Calibrate => {
            let r = cmd_calibrate(cfg)?;
            let b = &r.calibration.best;
            format!(
                "best t_ss={} t_ww={}: shares ns {:.1}% ss {:.1}% ws {:.1}% ww {:.1}%",
                b.t_ss, b.t_ww, b.edge_share[0], b.edge_share[1], b.edge_share[2], b.edge_share[3]
            )
        }
    };
    write_json(
        &layout.timings(command),
        &Timing {
            command: command.name().into(),
            seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(message)
}
