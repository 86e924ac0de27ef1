//! Greedy ROUGE-1 oracle labels.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ingest::Document;
use crate::rouge::{score_summary, RougeScore, SummaryScore};

/// Quantity the greedy labeler maximises.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    F1,
    Recall,
}

impl Objective {
    fn value(self, score: &RougeScore) -> f64 {
        match self {
            Objective::F1 => score.f1,
            Objective::Recall => score.recall,
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "f1" => Ok(Objective::F1),
            "recall" => Ok(Objective::Recall),
            other => Err(Error::Config(format!("unknown labeling objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    pub objective: Objective,
    pub max_selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    #[serde(flatten)]
    pub document: Document,
    pub labels: Vec<u8>,
    pub oracle: SummaryScore,
}

impl LabeledDocument {
    pub fn selected(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 1)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// One accepted greedy step: the sentence added and the objective value of
/// the selection afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub sentence: usize,
    pub objective: f64,
}

/// Incremental unigram overlap between a growing selection and a fixed
/// reference.
struct UnigramState<'a> {
    reference: HashMap<&'a str, usize>,
    reference_len: usize,
    selected: HashMap<&'a str, usize>,
    selected_len: usize,
    overlap: usize,
}

impl<'a> UnigramState<'a> {
    fn new(reference: &'a [Vec<String>]) -> Self {
        let mut counts = HashMap::new();
        let mut len = 0;
        for tok in reference.iter().flatten() {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
            len += 1;
        }
        UnigramState {
            reference: counts,
            reference_len: len,
            selected: HashMap::new(),
            selected_len: 0,
            overlap: 0,
        }
    }

    fn overlap_with(&self, tokens: &'a [String]) -> usize {
        let mut added: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            *added.entry(t.as_str()).or_insert(0) += 1;
        }
        let mut overlap = self.overlap;
        for (tok, extra) in added {
            let Some(&r) = self.reference.get(tok) else {
                continue;
            };
            let have = self.selected.get(tok).copied().unwrap_or(0);
            overlap += (have + extra).min(r) - have.min(r);
        }
        overlap
    }

    fn score_with(&self, tokens: &'a [String]) -> RougeScore {
        RougeScore::from_counts(
            self.overlap_with(tokens),
            self.selected_len + tokens.len(),
            self.reference_len,
        )
    }

    fn add(&mut self, tokens: &'a [String]) {
        self.overlap = self.overlap_with(tokens);
        self.selected_len += tokens.len();
        for t in tokens {
            *self.selected.entry(t.as_str()).or_insert(0) += 1;
        }
    }
}

/// Runs the greedy selection and returns the accepted steps in order.
///
/// Each step adds the sentence with the largest objective value among the
/// unselected ones, provided it strictly improves on the current selection.
/// Ties go to the lowest sentence index.
pub fn greedy_steps(doc: &Document, options: &LabelOptions) -> Vec<GreedyStep> {
    let mut state = UnigramState::new(&doc.abstract_sentences);
    if state.reference_len == 0 {
        return Vec::new();
    }
    let n = doc.sentences.len();
    let cap = options.max_selected.unwrap_or(n).min(n);
    let mut taken = vec![false; n];
    let mut current = 0.0;
    let mut steps = Vec::new();
    while steps.len() < cap {
        let mut best: Option<(usize, f64)> = None;
        for (i, sent) in doc.sentences.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let value = options.objective.value(&state.score_with(&sent.tokens));
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((i, value));
            }
        }
        match best {
            Some((i, value)) if value > current => {
                taken[i] = true;
                state.add(&doc.sentences[i].tokens);
                current = value;
                steps.push(GreedyStep {
                    sentence: i,
                    objective: value,
                });
            }
            _ => break,
        }
    }
    steps
}

pub fn greedy_label(doc: &Document, options: &LabelOptions) -> LabeledDocument {
    let mut labels = vec![0u8; doc.sentences.len()];
    if doc.abstract_token_count() == 0 {
        log::warn!("document {}: empty abstract, all labels set to 0", doc.id);
        return LabeledDocument {
            document: doc.clone(),
            labels,
            oracle: SummaryScore::default(),
        };
    }
    for step in greedy_steps(doc, options) {
        labels[step.sentence] = 1;
    }
    let selected: Vec<&[String]> = doc
        .sentences
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l == 1)
        .map(|(s, _)| s.tokens.as_slice())
        .collect();
    let oracle = score_summary(&selected, &doc.abstract_sentences);
    LabeledDocument {
        document: doc.clone(),
        labels,
        oracle,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub documents: usize,
    pub sentences: usize,
    pub positives: usize,
    /// Positive labels over all sentences.
    pub positive_rate: f64,
    pub mean_selected: f64,
    pub mean_oracle: SummaryScore,
}

impl LabelStats {
    pub fn from_labeled(docs: &[LabeledDocument]) -> Self {
        if docs.is_empty() {
            return LabelStats::default();
        }
        let sentences: usize = docs.iter().map(|d| d.labels.len()).sum();
        let positives: usize = docs.iter().map(LabeledDocument::positives).sum();
        let oracles: Vec<SummaryScore> = docs.iter().map(|d| d.oracle).collect();
        LabelStats {
            documents: docs.len(),
            sentences,
            positives,
            positive_rate: if sentences == 0 {
                0.0
            } else {
                positives as f64 / sentences as f64
            },
            mean_selected: positives as f64 / docs.len() as f64,
            mean_oracle: SummaryScore::mean(&oracles),
        }
    }
}

/// Labels every document (in parallel, order preserved) and aggregates.
pub fn label_corpus(docs: &[Document], options: &LabelOptions) -> (Vec<LabeledDocument>, LabelStats) {
    use rayon::prelude::*;
    let labeled: Vec<LabeledDocument> = docs.par_iter().map(|d| greedy_label(d, options)).collect();
    let stats = LabelStats::from_labeled(&labeled);
    (labeled, stats)
}
