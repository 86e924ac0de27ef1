//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any required criterion fails.
//!
//! Data-dependent criteria run only when `GRAPHLSS_PUBMED` points at a
//! directory with PubMed `train.jsonl`, `validation.jsonl` and `test.jsonl`
//! and `GRAPHLSS_GLOVE` at a GloVe text file; otherwise they are skipped.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use graphlss::gat::{
    self, forward, gradient_check, update_class_weight, ClassWeightState, GraphInput, Mode, ModelConfig,
    ModelParams, TrainConfig,
};
use graphlss::graph::{EdgeType, GraphBuilder, GraphConfig, HeteroGraph};
use graphlss::ingest::{Document, Split};
use graphlss::lexical::{ContentWordFilter, EmbeddingTable, MissPolicy};
use graphlss::oracle::{greedy_steps, LabelOptions, LabeledDocument, Objective};
use graphlss::pipeline::{self, Command, PipelineConfig};
use graphlss::rouge::{rouge_l, rouge_n, RougeScore};
use graphlss::synthetic::{random_document, random_graph, separable_graph, GraphShape};
use graphlss::{lexical, oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROUGE_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-5;
const ATTENTION_TOL: f64 = 1e-9;
const OVERFIT_ACCURACY: f64 = 0.95;
const OVERFIT_EPOCHS: usize = 200;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, name: &str, start: Instant, outcome: Outcome) {
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                self.failures += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] {name}: {detail} ({secs:.1}s)");
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn toks(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn score_err(s: RougeScore, p: f64, r: f64, f: f64) -> f64 {
    (s.precision - p).abs().max((s.recall - r).abs()).max((s.f1 - f).abs())
}

fn rouge_exactness() -> Outcome {
    let cases: Vec<(RougeScore, [f64; 3], &str)> = vec![
        (
            rouge_n(&toks("the cat sat"), &toks("the cat ran"), 1),
            [2.0 / 3.0; 3],
            "unigram 2/3",
        ),
        (
            rouge_l(&toks("a b c d"), &toks("a c b d")),
            [0.75; 3],
            "lcs 3/4",
        ),
        (
            rouge_n(&toks("a b c d"), &toks("a b c d"), 2),
            [1.0; 3],
            "identity bigram",
        ),
        (
            rouge_l(&toks("a b c"), &toks("a b c")),
            [1.0; 3],
            "identity lcs",
        ),
        (rouge_n(&toks("a b"), &toks("c d"), 1), [0.0; 3], "disjoint unigram"),
        (rouge_l(&toks("a b"), &toks("c d")), [0.0; 3], "disjoint lcs"),
        (
            // clipped counts: candidate "the" x3 against reference "the" x1
            rouge_n(&toks("the the the cat"), &toks("the cat sat"), 1),
            [0.5, 2.0 / 3.0, 4.0 / 7.0],
            "clipped unigram",
        ),
        (
            rouge_n(&toks("a b c a b"), &toks("a b c"), 2),
            [0.5, 1.0, 2.0 / 3.0],
            "bigram",
        ),
    ];
    let mut worst = 0.0f64;
    let mut worst_case = "";
    for (s, [p, r, f], name) in &cases {
        let e = score_err(*s, *p, *r, *f);
        if e > worst {
            worst = e;
            worst_case = name;
        }
    }
    verdict(
        worst <= ROUGE_TOL,
        format!("{} fixtures, max error {worst:.1e} {worst_case} (tol {ROUGE_TOL:.0e})", cases.len()),
    )
}

fn flat(doc: &Document, picked: &[usize]) -> Vec<String> {
    picked.iter().flat_map(|&i| doc.sentences[i].tokens.clone()).collect()
}

fn greedy_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = LabelOptions {
        objective: Objective::F1,
        max_selected: None,
    };
    let mut steps_checked = 0;
    for d in 0..200 {
        let vocab = rng.gen_range(2..=20);
        let doc = random_document(&mut rng, &format!("d{d}"), 8, vocab);
        let reference = doc.abstract_tokens();
        let steps = greedy_steps(&doc, &opts);
        let mut picked: Vec<usize> = Vec::new();
        let mut previous = 0.0;
        for step in &steps {
            // exhaustive scan of every unselected sentence
            let mut best: Option<(usize, f64)> = None;
            for i in 0..doc.sentences.len() {
                if picked.contains(&i) {
                    continue;
                }
                let mut cand = picked.clone();
                cand.push(i);
                let f = rouge_n(&flat(&doc, &cand), &reference, 1).f1;
                if best.is_none_or(|(_, b)| f > b) {
                    best = Some((i, f));
                }
            }
            let (i, f) = best.expect("a step implies a candidate");
            if i != step.sentence || (f - step.objective).abs() > ROUGE_TOL {
                return Outcome::Fail(format!(
                    "doc {d}: greedy chose {} ({:.6}), scan found {i} ({f:.6})",
                    step.sentence, step.objective
                ));
            }
            if step.objective <= previous {
                return Outcome::Fail(format!("doc {d}: F1 did not strictly increase"));
            }
            previous = step.objective;
            picked.push(i);
            steps_checked += 1;
        }
        // stopping: no remaining sentence improves further
        for i in 0..doc.sentences.len() {
            if !picked.contains(&i) {
                let mut cand = picked.clone();
                cand.push(i);
                if rouge_n(&flat(&doc, &cand), &reference, 1).f1 > previous {
                    return Outcome::Fail(format!("doc {d}: stopped while sentence {i} still improves"));
                }
            }
        }
    }
    Outcome::Pass(format!("200 documents, {steps_checked} steps match the exhaustive scan"))
}

fn class_weight_numerics() -> Outcome {
    let s = ClassWeightState::new(5.0);
    let a = update_class_weight(&s, 0.5).unwrap().lambda_pos;
    let b = update_class_weight(&s, 0.1).unwrap().lambda_pos;
    let err = (a - 3.778652).abs().max((b - 4.856571).abs());
    if err > WEIGHT_TOL {
        return Outcome::Fail(format!("values {a:.7}, {b:.7}, error {err:.1e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seq in 0..100 {
        let mut st = ClassWeightState::new(rng.gen_range(0.5..20.0));
        for _ in 0..rng.gen_range(1..50) {
            let tau = rng.gen_range(f64::EPSILON..1.0);
            let next = update_class_weight(&st, tau).unwrap();
            if next.lambda_pos > st.lambda_pos || next.lambda_pos < st.lambda_min || next.lambda_neg != 1.0 {
                return Outcome::Fail(format!("sequence {seq}: {} -> {} at tau {tau}", st.lambda_pos, next.lambda_pos));
            }
            st = next;
        }
    }
    Outcome::Pass(format!(
        "5.0@0.5 -> {a:.6}, 5.0@0.1 -> {b:.6} (tol {WEIGHT_TOL:.0e}); 100 sequences non-increasing and floored"
    ))
}

/// Largest deviation from 1 of any per-destination attention sum, plus any
/// negative coefficient as a deviation.
fn attention_deviation(g: &GraphInput, p: &ModelParams, mode: Mode) -> f64 {
    let pass = forward(g, p, mode).unwrap();
    let mut worst = 0.0f64;
    for l in 0..pass.layer_count() {
        for (r, adj) in g.adjacency.iter().enumerate() {
            for h in 0..p.config.heads {
                let Some(alpha) = pass.attention(l, r, h) else {
                    continue;
                };
                for i in 0..adj.dst_count() {
                    let range = adj.group(i);
                    if range.is_empty() {
                        continue;
                    }
                    let sum: f64 = alpha[range.clone()].iter().sum();
                    worst = worst.max((sum - 1.0).abs());
                    if alpha[range].iter().any(|&a| a < 0.0) {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
    }
    worst
}

struct AttentionLog {
    passes: usize,
    worst: f64,
}

impl AttentionLog {
    fn check(&mut self, g: &GraphInput, p: &ModelParams, mode: Mode) {
        self.passes += 1;
        self.worst = self.worst.max(attention_deviation(g, p, mode));
    }
}

fn gradient_suite(att: &mut AttentionLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut entries = 0;
    for k in 0..50 {
        let shape = GraphShape {
            max_sentences: 6,
            max_words: 8,
            sentence_dim: rng.gen_range(2..=6),
            word_dim: rng.gen_range(2..=5),
            density: rng.gen_range(0.2..0.8),
        };
        let g = GraphInput::new(&random_graph(&mut rng, &format!("g{k}"), shape));
        let layers = 1 + k % 2;
        let hidden = [4, 8][rng.gen_range(0..2)];
        let p = ModelParams::init(ModelConfig::new(layers, hidden, shape.sentence_dim, shape.word_dim), k as u64)
            .unwrap();
        let w = ClassWeightState::new(rng.gen_range(0.5..4.0));
        let mode = if k % 5 == 4 {
            Mode::Train {
                keep_prob: 0.7,
                seed: k as u64,
            }
        } else {
            Mode::Eval
        };
        att.check(&g, &p, mode);
        let r = gradient_check(&g, &p, &w, mode, GRAD_STEP).unwrap();
        entries += r.checked;
        if r.max_relative_error > worst {
            worst = r.max_relative_error;
            worst_at = format!("graph {k}, {}", r.worst_tensor);
        }
    }
    verdict(
        worst <= GRAD_TOL,
        format!("50 graphs, {entries} entries, max relative error {worst:.2e} at {worst_at} (tol {GRAD_TOL:.0e})"),
    )
}

fn overfit(att: &mut AttentionLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = GraphShape {
        sentence_dim: 6,
        word_dim: 4,
        ..GraphShape::default()
    };
    let graphs: Vec<GraphInput> = (0..20)
        .map(|i| GraphInput::new(&separable_graph(&mut rng, &format!("s{i}"), shape)))
        .collect();
    let cfg = TrainConfig {
        lr: 0.01,
        batch_size: 4,
        max_epochs: OVERFIT_EPOCHS,
        patience: 0,
        layers: 1,
        hidden: 16,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = gat::train(&graphs, &graphs, &cfg).unwrap();
    for g in &graphs {
        att.check(g, &out.params, Mode::Eval);
    }
    let stats = gat::evaluate(&graphs, &out.params, &ClassWeightState::unweighted()).unwrap();
    let reached = out
        .history
        .epochs
        .iter()
        .find(|e| e.train_accuracy >= OVERFIT_ACCURACY)
        .map(|e| e.epoch);
    let decreasing = out.history.epochs.windows(2).take(5).all(|w| w[1].train_loss < w[0].train_loss);
    verdict(
        stats.accuracy >= OVERFIT_ACCURACY && reached.is_some(),
        format!(
            "1 layer, 20 graphs: accuracy {:.3} (target {OVERFIT_ACCURACY}), first reached at epoch {} of {}, loss decreasing over first 5 epochs: {decreasing}",
            stats.accuracy,
            reached.map_or("never".to_string(), |e| e.to_string()),
            out.epochs_run
        ),
    )
}

struct EveryToken;

impl ContentWordFilter for EveryToken {
    fn is_content(&self, _: &str) -> bool {
        true
    }
}

fn edge_set(edges: &[graphlss::graph::Edge]) -> HashSet<(u32, u32)> {
    edges.iter().map(|e| (e.src, e.dst)).collect()
}

fn graph_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let docs: Vec<Document> = (0..500)
        .map(|i| random_document(&mut rng, &format!("doc{i}"), 12, 40))
        .collect();
    let vocab = lexical::build_vocabulary(docs.iter(), 10_000).unwrap();
    let table = EmbeddingTable::new(6, MissPolicy::Hashed);
    let sweep = [-0.5f32, 0.0, 0.3, 0.6, 0.9];
    let opts = LabelOptions::default();
    for doc in &docs {
        let ldoc: LabeledDocument = oracle::greedy_label(doc, &opts);
        // random sentence vectors in a low dimension so similarities spread out
        let emb: Vec<Vec<f32>> = (0..doc.sentences.len())
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
            .collect();
        let mut prev: Option<HeteroGraph> = None;
        for &t in &sweep {
            let builder = GraphBuilder {
                vocab: &vocab,
                filter: &EveryToken,
                word_emb: &table,
                config: GraphConfig {
                    t_ss: t,
                    t_ww: t,
                    ..GraphConfig::default()
                },
            };
            let g = builder.build(&ldoc, &emb).unwrap();
            let n = g.n();
            if g.edges(EdgeType::Ns).len() != n - 1 {
                return Outcome::Fail(format!("{}: |E_ns| = {} for n = {n}", doc.id, g.edges_ns.len()));
            }
            let back = HeteroGraph::from_bytes(&g.to_bytes()).unwrap();
            if back != g || back.to_bytes() != g.to_bytes() {
                return Outcome::Fail(format!("{}: serialization round trip differs", doc.id));
            }
            if let Some(p) = &prev {
                for ty in [EdgeType::Ss, EdgeType::Ww] {
                    let hi = edge_set(g.edges(ty));
                    let lo = edge_set(p.edges(ty));
                    if !hi.is_subset(&lo) {
                        return Outcome::Fail(format!(
                            "{}: raising the {} threshold to {t} added edges",
                            doc.id,
                            ty.name()
                        ));
                    }
                }
                if p.edges_ws != g.edges_ws || p.edges_ns != g.edges_ns {
                    return Outcome::Fail(format!("{}: thresholds changed non-similarity edges", doc.id));
                }
            }
            prev = Some(g);
        }
    }
    Outcome::Pass(format!(
        "500 documents x {} thresholds: |E_ns| = n - 1, nested E_ss/E_ww, exact round trip",
        sweep.len()
    ))
}

const LEXICON_WORDS: [&str; 24] = [
    "patients", "therapy", "insulin", "glucose", "tumor", "survival", "cells", "treatment", "infection",
    "bacteria", "resistance", "cardiac", "pressure", "artery", "neurons", "memory", "imaging", "vaccine",
    "antibody", "response", "dose", "outcome", "cohort", "analysis",
];

fn synthetic_corpus(dir: &Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (split, n) in [("train", 12), ("validation", 4), ("test", 4)] {
        let mut lines = Vec::new();
        for d in 0..n {
            let mut sentence = |len: usize| {
                let words: Vec<&str> = (0..len)
                    .map(|_| LEXICON_WORDS[rng.gen_range(0..LEXICON_WORDS.len())])
                    .collect();
                format!("The {} were studied in detail.", words.join(" and "))
            };
            let article: Vec<String> = (0..8).map(|_| sentence(4)).collect();
            let abstract_: Vec<String> = (0..2).map(|_| format!("<S> {} </S>", sentence(3))).collect();
            lines.push(
                serde_json::json!({
                    "article_id": format!("{split}-{d}"),
                    "article_text": article,
                    "abstract_text": abstract_,
                })
                .to_string(),
            );
        }
        std::fs::write(dir.join(format!("{split}.jsonl")), lines.join("\n") + "\n").unwrap();
    }
}

fn end_to_end_determinism() -> Outcome {
    let corpus = tempfile::tempdir().unwrap();
    synthetic_corpus(corpus.path(), 9);
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    for run in &runs {
        let mut cfg = PipelineConfig::default();
        cfg.data = Some(corpus.path().to_path_buf());
        cfg.output = run.path().to_path_buf();
        cfg.apply_overrides(&[
            "miss_policy=hashed",
            "word_dim=16",
            "hidden=8",
            "max_epochs=2",
            "batch_size=4",
            "seed=11",
        ])
        .unwrap();
        for c in [
            Command::Ingest,
            Command::Label,
            Command::BuildGraphs,
            Command::Train,
            Command::Infer,
            Command::Eval,
        ] {
            if let Err(e) = pipeline::run(c, &cfg) {
                return Outcome::Fail(format!("{} failed: {e}", c.name()));
            }
        }
    }
    let files = [
        "reports/ingest.json",
        "reports/label.json",
        "reports/graphs.json",
        "reports/train.json",
        "reports/eval_test.json",
        "labeled/train.jsonl",
        "graphs/train.glsb",
        "history.json",
        "model.glsm",
    ];
    for f in files {
        let a = std::fs::read(runs[0].path().join(f)).unwrap();
        let b = std::fs::read(runs[1].path().join(f)).unwrap();
        if a != b {
            return Outcome::Fail(format!("{f} differs between runs"));
        }
    }
    Outcome::Pass(format!("{} artifacts byte-identical across two runs", files.len()))
}

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

/// Config for the PubMed criteria, or `None` when the data is absent.
fn pubmed_config(out: &Path, max_docs: usize) -> Option<PipelineConfig> {
    let data = env_path("GRAPHLSS_PUBMED")?;
    let glove = env_path("GRAPHLSS_GLOVE")?;
    let mut cfg = PipelineConfig::default();
    cfg.data = Some(data);
    cfg.word_embeddings = Some(glove);
    cfg.output = out.to_path_buf();
    cfg.max_docs = Some(max_docs);
    cfg.sample_seed = 1;
    Some(cfg)
}

const SKIP_DATA: &str = "set GRAPHLSS_PUBMED and GRAPHLSS_GLOVE to run";

fn pubmed_sample() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut cfg) = pubmed_config(dir.path(), 200) else {
        return Outcome::Skip(SKIP_DATA.into());
    };
    cfg.inputs.clear();
    let steps = [Command::Ingest, Command::Label, Command::Calibrate];
    for c in steps {
        if let Err(e) = pipeline::run(c, &cfg) {
            return Outcome::Fail(format!("{} failed: {e}", c.name()));
        }
    }
    let label: pipeline::LabelReport = pipeline::read_json(&cfg.layout().report("label")).unwrap();
    let r1 = 100.0 * label.splits["train"].mean_oracle.rouge1.f1;
    let cal: pipeline::CalibrationReport = pipeline::read_json(&cfg.layout().report("calibration")).unwrap();
    cfg.graph.t_ss = cal.calibration.best.t_ss;
    cfg.graph.t_ww = cal.calibration.best.t_ww;
    if let Err(e) = pipeline::run(Command::BuildGraphs, &cfg) {
        return Outcome::Fail(format!("build-graphs failed: {e}"));
    }
    let graphs: pipeline::GraphReport = pipeline::read_json(&cfg.layout().report("graphs")).unwrap();
    let st = &graphs.splits["train"];
    let ws = st.share(EdgeType::Ws);
    let nodes = st.mean_sentence_nodes + st.mean_word_nodes;
    let expected_bytes = 365.0 * 1024.0 * nodes / (80.0 + 156.0);
    let ratio = st.mean_bytes / expected_bytes;
    let ok = (r1 - 60.58).abs() <= 5.0 && (70.0..=90.0).contains(&ws) && (0.5..=2.0).contains(&ratio);
    verdict(
        ok,
        format!("oracle R-1 {r1:.2} (60.58 +/- 5), E_ws share {ws:.1}% (70-90), size ratio {ratio:.2} (0.5-2)"),
    )
}

fn pubmed_ablation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut cfg) = pubmed_config(dir.path(), 500) else {
        return Outcome::Skip(SKIP_DATA.into());
    };
    cfg.inputs.clear();
    cfg.train.max_epochs = 5;
    if let Err(e) = pipeline::run(Command::Ingest, &cfg) {
        return Outcome::Fail(format!("ingest failed: {e}"));
    }
    // 500 training documents, 100 validation documents
    let val = cfg.layout().cleaned(Split::Validation);
    let mut docs: Vec<Document> = pipeline::read_jsonl(&val).unwrap();
    docs.truncate(100);
    pipeline::write_jsonl(&val, &docs).unwrap();
    for c in [Command::Label, Command::BuildGraphs] {
        if let Err(e) = pipeline::run(c, &cfg) {
            return Outcome::Fail(format!("{} failed: {e}", c.name()));
        }
    }
    let report = match pipeline::cmd_ablate(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("ablate failed: {e}")),
    };
    let drop: BTreeMap<&str, f64> = report
        .variants
        .iter()
        .filter_map(|v| v.removed.map(|t| (t.name(), v.rouge1_drop)))
        .collect();
    let (ws, ww) = (drop["ws"], drop["ww"]);
    // soft criterion: reported, never fails the suite
    Outcome::Pass(format!(
        "R-1 drop without ws {ws:.2}, without ww {ww:.2}: ordering {}",
        if ws >= ww { "holds" } else { "does not hold (soft)" }
    ))
}

fn main() {
    // `cargo test` passes harness flags such as --nocapture; nothing to parse.
    let mut report = Report { failures: 0 };
    let mut att = AttentionLog { passes: 0, worst: 0.0 };
    let t = Instant::now();
    report.record("rouge_exactness", t, rouge_exactness());
    let t = Instant::now();
    report.record("greedy_per_step_optimality", t, greedy_optimality());
    let t = Instant::now();
    report.record("class_weight_update_numerics", t, class_weight_numerics());
    let t = Instant::now();
    report.record("gradient_check", t, gradient_suite(&mut att));
    let t = Instant::now();
    report.record("overfit_capability", t, overfit(&mut att));
    let t = Instant::now();
    // extra coverage for the attention invariant across 2-layer training mode
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..200u64 {
        let shape = GraphShape::default();
        let g = GraphInput::new(&random_graph(&mut rng, "a", shape));
        let p = ModelParams::init(ModelConfig::new(2, 8, shape.sentence_dim, shape.word_dim), k).unwrap();
        att.check(&g, &p, Mode::Eval);
        att.check(&g, &p, Mode::Train { keep_prob: 0.7, seed: k });
    }
    report.record(
        "attention_normalization",
        t,
        verdict(
            att.worst <= ATTENTION_TOL,
            format!(
                "{} forward passes, max |sum - 1| = {:.1e} (tol {ATTENTION_TOL:.0e})",
                att.passes, att.worst
            ),
        ),
    );
    let t = Instant::now();
    report.record("graph_invariants", t, graph_invariants());
    let t = Instant::now();
    report.record("end_to_end_determinism", t, end_to_end_determinism());
    let t = Instant::now();
    report.record("pubmed_oracle_and_graph_shape (optional)", t, pubmed_sample());
    let t = Instant::now();
    report.record("pubmed_mini_ablation (optional, soft)", t, pubmed_ablation());
    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all required criteria passed");
}
