use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{forward, GraphInput, Mode};
use super::loss::{update_class_weight, weighted_bce_sum, ClassWeightState, DEFAULT_LAMBDA_MIN};
use super::optim::{Adam, DEFAULT_LR};
use super::params::{ModelConfig, ModelParams, DEFAULT_HIDDEN};
use super::graph_gradient;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub keep_prob: f64,
    pub layers: usize,
    pub hidden: usize,
    /// `None` starts from the inverse class frequency of the training split.
    pub lambda_pos: Option<f64>,
    pub lambda_min: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: DEFAULT_LR,
            batch_size: 64,
            max_epochs: 20,
            patience: 7,
            keep_prob: 0.7,
            layers: 1,
            hidden: DEFAULT_HIDDEN,
            lambda_pos: None,
            lambda_min: DEFAULT_LAMBDA_MIN,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and epoch count must be positive".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!("keep probability {} outside (0, 1]", self.keep_prob)));
        }
        if !(self.lambda_min > 0.0) {
            return Err(Error::Config("lambda_min must be positive".into()));
        }
        Ok(())
    }
}

/// Stops after `patience` consecutive epochs without a strict improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    pub bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    /// Returns true when `loss` is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            true
        } else {
            self.bad_epochs += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.patience > 0 && self.bad_epochs >= self.patience
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: f64,
    /// Fraction of training sentences predicted relevant after the epoch.
    pub tau: f64,
    /// Positive weight used during this epoch.
    pub lambda_pos: f64,
    /// Positive weight after the end-of-epoch update.
    pub lambda_next: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation loss.
    pub params: ModelParams,
    pub optimizer: Adam,
    pub weights: ClassWeightState,
    pub history: TrainHistory,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalStats {
    pub loss: f64,
    pub accuracy: f64,
    /// Fraction of sentences with probability at or above 0.5.
    pub predicted_positive: f64,
    pub sentences: usize,
}

pub fn predict(g: &GraphInput, params: &ModelParams) -> Result<Vec<f64>> {
    Ok(forward(g, params, Mode::Eval)?.probs)
}

/// Eval-mode loss, accuracy and predicted-positive fraction over a set of
/// graphs. Graphs are scored in parallel and reduced in input order.
pub fn evaluate(graphs: &[GraphInput], params: &ModelParams, weights: &ClassWeightState) -> Result<EvalStats> {
    let parts: Vec<(f64, usize, usize, usize)> = graphs
        .par_iter()
        .map(|g| -> Result<_> {
            let probs = predict(g, params)?;
            let (loss, _) = weighted_bce_sum(&probs, &g.labels, weights);
            let mut correct = 0;
            let mut positive = 0;
            for (p, y) in probs.iter().zip(&g.labels) {
                let pred = *p >= 0.5;
                positive += pred as usize;
                correct += (pred == (*y > 0.5)) as usize;
            }
            Ok((loss, probs.len(), correct, positive))
        })
        .collect::<Result<_>>()?;
    let mut s = EvalStats::default();
    let (mut correct, mut positive) = (0usize, 0usize);
    for (l, n, c, p) in parts {
        s.loss += l;
        s.sentences += n;
        correct += c;
        positive += p;
    }
    if s.sentences > 0 {
        let n = s.sentences as f64;
        s.loss /= n;
        s.accuracy = correct as f64 / n;
        s.predicted_positive = positive as f64 / n;
    }
    Ok(s)
}

fn dropout_seed(seed: u64, epoch: usize, graph: usize) -> u64 {
    // splitmix64 finalizer over a combined key
    let mut z = seed ^ ((epoch as u64) << 32) ^ graph as u64;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn model_config_for(graphs: &[GraphInput], cfg: &TrainConfig) -> Result<ModelConfig> {
    let first = graphs.first().ok_or_else(|| Error::Data("training split is empty".into()))?;
    let sentence_dim = first.sentences.ncols();
    let word_dim = graphs
        .iter()
        .find(|g| g.m() > 0)
        .map(|g| g.words.ncols())
        .unwrap_or(1);
    for g in graphs {
        if g.sentences.ncols() != sentence_dim {
            return Err(Error::Dimension {
                expected: sentence_dim,
                found: g.sentences.ncols(),
            });
        }
        if g.m() > 0 && g.words.ncols() != word_dim {
            return Err(Error::Dimension {
                expected: word_dim,
                found: g.words.ncols(),
            });
        }
    }
    let mc = ModelConfig::new(cfg.layers, cfg.hidden, sentence_dim, word_dim);
    mc.validate()?;
    Ok(mc)
}

/// Mini-batch training with adaptive class weights and early stopping on
/// validation loss. Validation loss is always measured with the initial
/// class weights so epochs stay comparable while the positive weight moves.
pub fn train(train_set: &[GraphInput], val_set: &[GraphInput], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Data("training and validation splits must be nonempty".into()));
    }
    let model_cfg = model_config_for(train_set, cfg)?;
    let mut params = ModelParams::init(model_cfg, cfg.seed)?;
    let mut weights = match cfg.lambda_pos {
        Some(l) => ClassWeightState::new(l),
        None => {
            let labels: Vec<u8> = train_set
                .iter()
                .flat_map(|g| g.labels.iter().map(|&y| (y > 0.5) as u8))
                .collect();
            ClassWeightState::from_labels(&labels)
        }
    };
    weights.lambda_min = cfg.lambda_min;
    weights.lambda_pos = weights.lambda_pos.max(cfg.lambda_min);
    let val_weights = weights;

    let mut opt = Adam::new(&params, cfg.lr);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = params.clone();
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs_run = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut count) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let parts = batch
                .par_iter()
                .map(|&i| {
                    let mode = Mode::Train {
                        keep_prob: cfg.keep_prob,
                        seed: dropout_seed(cfg.seed, epoch, i),
                    };
                    graph_gradient(&train_set[i], &params, &weights, mode)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut grads = params.zeros_like();
            let mut batch_sentences = 0usize;
            for p in &parts {
                grads.add_assign(&p.grads);
                loss_sum += p.loss_sum;
                batch_sentences += p.sentences;
            }
            count += batch_sentences;
            grads.scale(1.0 / batch_sentences.max(1) as f64);
            if !loss_sum.is_finite() || !grads.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss or gradient at epoch {epoch} (running loss {loss_sum}, lambda_pos {})",
                    weights.lambda_pos
                )));
            }
            opt.update(&mut params, &grads)?;
            if !params.is_finite() {
                return Err(Error::Numeric(format!("parameters diverged at epoch {epoch}")));
            }
        }
        let train_loss = loss_sum / count.max(1) as f64;
        let on_train = evaluate(train_set, &params, &weights)?;
        let on_val = evaluate(val_set, &params, &val_weights)?;
        if !on_val.loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite validation loss at epoch {epoch}")));
        }
        let used = weights.lambda_pos;
        weights = update_class_weight(&weights, on_train.predicted_positive)?;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss: on_val.loss,
            train_accuracy: on_train.accuracy,
            tau: on_train.predicted_positive,
            lambda_pos: used,
            lambda_next: weights.lambda_pos,
        });
        log::info!(
            "epoch {epoch}: train {train_loss:.5} val {:.5} acc {:.3} tau {:.3} lambda {used:.4}",
            on_val.loss,
            on_train.accuracy,
            on_train.predicted_positive
        );
        epochs_run = epoch;
        if stopper.observe(epoch, on_val.loss) {
            best = params.clone();
        }
        if stopper.should_stop() {
            history.stopped_early = true;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch;
    Ok(TrainOutcome {
        params: best,
        optimizer: opt,
        weights,
        history,
        epochs_run,
    })
}

/// How sentences are picked from predicted probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    Threshold(f64),
    TopK(usize),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Threshold(0.5)
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Selection::Threshold(t) => write!(f, "threshold:{t}"),
            Selection::TopK(k) => write!(f, "top-k:{k}"),
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    /// `threshold`, `threshold:0.4`, `top-k:3`, `topk:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let bad = || Error::Config(format!("invalid selection {s:?}"));
        match kind.to_ascii_lowercase().as_str() {
            "threshold" => {
                let t = arg.map(|a| a.parse::<f64>().map_err(|_| bad())).transpose()?.unwrap_or(0.5);
                if !(0.0..=1.0).contains(&t) {
                    return Err(bad());
                }
                Ok(Selection::Threshold(t))
            }
            "top-k" | "topk" => {
                let k = arg.ok_or_else(bad)?.parse::<usize>().map_err(|_| bad())?;
                Ok(Selection::TopK(k))
            }
            _ => Err(bad()),
        }
    }
}

/// Selected sentence indices in document order. Threshold mode falls back
/// to the single most probable sentence when nothing clears the bar.
pub fn predict_summary(probs: &[f64], selection: Selection) -> Vec<usize> {
    if probs.is_empty() {
        return Vec::new();
    }
    let ranked = || {
        let mut idx: Vec<usize> = (0..probs.len()).collect();
        idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        idx
    };
    match selection {
        Selection::Threshold(t) => {
            let picked: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] >= t).collect();
            if picked.is_empty() {
                vec![ranked()[0]]
            } else {
                picked
            }
        }
        Selection::TopK(k) => {
            let mut top: Vec<usize> = ranked().into_iter().take(k).collect();
            top.sort_unstable();
            top
        }
    }
}
