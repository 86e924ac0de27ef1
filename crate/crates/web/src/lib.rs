//! Browser bindings. Each export takes plain values and returns a JSON
//! string; failures come back as `{"error": "..."}` so the page never has
//! to catch.

use graphlss::gat::{update_class_weight, ClassWeightState};
use graphlss::graph::{EdgeType, GraphBuilder, GraphConfig, HeteroGraph};
use graphlss::ingest::{Document, Preprocessor, RawDocument};
use graphlss::lexical::{self, EmbeddingTable, LexiconFilter, MissPolicy, SentenceSource};
use graphlss::oracle::{greedy_label, greedy_steps, LabelOptions, LabeledDocument};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// No pretrained vectors ship with the page. Words map to hashed unit
/// vectors; a small width keeps random cosines spread out enough for the
/// word threshold slider to matter.
const DEMO_WORD_DIM: usize = 16;

fn to_json<T: Serialize>(value: &graphlss::Result<T>) -> String {
    match value {
        Ok(v) => serde_json::to_string(v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn document(article: &str, abstract_text: &str) -> graphlss::Result<Document> {
    let raw = RawDocument {
        id: "pasted".into(),
        article_text: article.into(),
        abstract_text: abstract_text.into(),
    };
    let doc = Preprocessor::default().process(&raw);
    if doc.sentences.is_empty() {
        return Err(graphlss::Error::Data("the article has no sentences".into()));
    }
    if doc.abstract_sentences.is_empty() {
        return Err(graphlss::Error::Data("the abstract has no sentences".into()));
    }
    Ok(doc)
}

#[derive(Serialize)]
pub struct HighlightSentence {
    pub text: String,
    pub selected: bool,
    /// 1-based greedy step that picked the sentence.
    pub step: Option<usize>,
}

#[derive(Serialize)]
pub struct Highlight {
    pub sentences: Vec<HighlightSentence>,
    /// Unigram F1 after each step.
    pub trajectory: Vec<f64>,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
}

pub fn highlight(article: &str, abstract_text: &str) -> graphlss::Result<Highlight> {
    let doc = document(article, abstract_text)?;
    let opts = LabelOptions::default();
    let steps = greedy_steps(&doc, &opts);
    let labeled = greedy_label(&doc, &opts);
    let sentences = doc
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| HighlightSentence {
            text: s.raw_text.clone(),
            selected: labeled.labels[i] == 1,
            step: steps.iter().position(|st| st.sentence == i).map(|p| p + 1),
        })
        .collect();
    Ok(Highlight {
        sentences,
        trajectory: steps.iter().map(|s| s.objective).collect(),
        rouge1: labeled.oracle.rouge1.f1,
        rouge2: labeled.oracle.rouge2.f1,
        rouge_l: labeled.oracle.rouge_l.f1,
    })
}

#[derive(Serialize)]
pub struct DemoEdge {
    pub kind: &'static str,
    pub src: u32,
    pub dst: u32,
    pub weight: f32,
}

#[derive(Serialize)]
pub struct GraphView {
    pub sentences: usize,
    pub words: Vec<String>,
    pub labels: Vec<u8>,
    pub counts: [usize; 4],
    pub shares: [f64; 4],
    pub bytes: usize,
    pub edges: Vec<DemoEdge>,
}

fn build(doc: Document, config: GraphConfig) -> graphlss::Result<(HeteroGraph, Vec<String>)> {
    let filter = LexiconFilter::english();
    let vocab = lexical::build_vocabulary(std::iter::once(&doc), usize::MAX)?;
    let table = EmbeddingTable::new(DEMO_WORD_DIM, MissPolicy::Hashed);
    let sent_emb = lexical::sentence_embeddings(&doc, SentenceSource::MeanPooled(&table))?;
    let labeled: LabeledDocument = greedy_label(&doc, &LabelOptions::default());
    let builder = GraphBuilder {
        vocab: &vocab,
        filter: &filter,
        word_emb: &table,
        config,
    };
    let words = builder.word_nodes(&doc).into_iter().map(String::from).collect();
    Ok((builder.build(&labeled, &sent_emb)?, words))
}

pub fn graph_view(article: &str, abstract_text: &str, window: usize, t_ss: f32, t_ww: f32) -> graphlss::Result<GraphView> {
    let config = GraphConfig {
        window,
        t_ss,
        t_ww,
        ..GraphConfig::default()
    };
    config.validate()?;
    let (g, words) = build(document(article, abstract_text)?, config)?;
    let counts = EdgeType::ALL.map(|t| g.edges(t).len());
    let total = counts.iter().sum::<usize>().max(1) as f64;
    let edges = EdgeType::ALL
        .iter()
        .flat_map(|&t| {
            g.edges(t).iter().map(move |e| DemoEdge {
                kind: t.name(),
                src: e.src,
                dst: e.dst,
                weight: e.weight,
            })
        })
        .collect();
    Ok(GraphView {
        sentences: g.n(),
        words,
        labels: g.labels.clone(),
        counts,
        shares: counts.map(|c| 100.0 * c as f64 / total),
        bytes: g.serialized_len(),
        edges,
    })
}

#[derive(Serialize)]
pub struct LambdaStep {
    pub epoch: usize,
    pub tau: f64,
    pub lambda: f64,
}

/// Applies the class-weight update to `taus` in order, starting at
/// `lambda0`.
pub fn lambda_steps(lambda0: f64, lambda_min: f64, taus: &[f64]) -> graphlss::Result<Vec<LambdaStep>> {
    let mut state = ClassWeightState::new(lambda0);
    state.lambda_min = lambda_min;
    let mut out = vec![LambdaStep {
        epoch: 0,
        tau: f64::NAN,
        lambda: lambda0,
    }];
    for (i, &tau) in taus.iter().enumerate() {
        state = update_class_weight(&state, tau)?;
        out.push(LambdaStep {
            epoch: i + 1,
            tau,
            lambda: state.lambda_pos,
        });
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn oracle_highlight(article: &str, abstract_text: &str) -> String {
    to_json(&highlight(article, abstract_text))
}

#[wasm_bindgen]
pub fn document_graph(article: &str, abstract_text: &str, window: usize, t_ss: f32, t_ww: f32) -> String {
    to_json(&graph_view(article, abstract_text, window, t_ss, t_ww))
}

/// `taus` is a comma- or space-separated list of fractions.
#[wasm_bindgen]
pub fn lambda_trajectory(lambda0: f64, lambda_min: f64, taus: &str) -> String {
    let parsed: Result<Vec<f64>, _> = taus
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse::<f64>)
        .collect();
    match parsed {
        Ok(t) => to_json(&lambda_steps(lambda0, lambda_min, &t)),
        Err(e) => error_json(&format!("bad tau list: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ARTICLE: &str = "Insulin therapy lowered fasting glucose in most patients. \
        The cohort was recruited from three hospitals over two years. \
        Glucose control improved further when insulin dose was adjusted weekly. \
        Adverse events were rare and mostly mild in the treated group.";
    const ABSTRACT: &str = "<S> Weekly insulin dose adjustment improved glucose control . </S>";

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn highlight_marks_oracle_sentences() {
        let v = parse(&oracle_highlight(ARTICLE, ABSTRACT));
        let sents = v["sentences"].as_array().unwrap();
        assert!(!sents.is_empty());
        assert!(sents.iter().any(|s| s["selected"] == true));
        let traj = v["trajectory"].as_array().unwrap();
        assert_eq!(traj.len(), sents.iter().filter(|s| s["selected"] == true).count());
    }

    #[test]
    fn graph_thresholds_prune_edges() {
        let loose = parse(&document_graph(ARTICLE, ABSTRACT, 3, -1.0, -1.0));
        let tight = parse(&document_graph(ARTICLE, ABSTRACT, 3, 0.99, 0.99));
        let count = |v: &serde_json::Value, i: usize| v["counts"][i].as_u64().unwrap();
        assert!(count(&tight, 1) <= count(&loose, 1));
        assert!(count(&tight, 3) <= count(&loose, 3));
        assert_eq!(count(&tight, 0), loose["sentences"].as_u64().unwrap() - 1);
        assert_eq!(count(&tight, 2), count(&loose, 2));
    }

    #[test]
    fn errors_are_json() {
        let v = parse(&oracle_highlight("", ""));
        assert!(v["error"].is_string());
        let v = parse(&lambda_trajectory(5.0, 0.5, "0.5, nope"));
        assert!(v["error"].is_string());
    }

    #[test]
    fn lambda_trajectory_decays_to_floor() {
        let v = parse(&lambda_trajectory(5.0, 0.5, "0.5 0.5 0.5 0.5 0.5 0.5"));
        let l: Vec<f64> = v.as_array().unwrap().iter().map(|s| s["lambda"].as_f64().unwrap()).collect();
        assert!((l[1] - 3.778652).abs() < 1e-6);
        assert!(l.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*l.last().unwrap(), 0.5);
    }
}
