use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;
pub const DEFAULT_LAMBDA_MIN: f64 = 0.5;

/// Positive-class weight that adapts every epoch, plus the static negative
/// weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeightState {
    pub lambda_pos: f64,
    pub lambda_neg: f64,
    pub lambda_min: f64,
    /// Fraction of sentences predicted relevant at the last update.
    pub tau: f64,
    pub epoch: u32,
}

impl ClassWeightState {
    pub fn new(lambda_pos: f64) -> Self {
        ClassWeightState {
            lambda_pos: lambda_pos.max(DEFAULT_LAMBDA_MIN),
            lambda_neg: 1.0,
            lambda_min: DEFAULT_LAMBDA_MIN,
            tau: 0.0,
            epoch: 0,
        }
    }

    /// Inverse class frequency: negatives over positives. Falls back to 1
    /// when either class is missing.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a u8>) -> Self {
        let (mut pos, mut neg) = (0usize, 0usize);
        for &l in labels {
            if l > 0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        let lambda = if pos == 0 || neg == 0 { 1.0 } else { neg as f64 / pos as f64 };
        ClassWeightState::new(lambda)
    }

    pub fn unweighted() -> Self {
        ClassWeightState::new(1.0)
    }
}

/// `tau - tau / ln(tau)`, the amount the positive weight drops for a given
/// predicted-relevant fraction. Positive on (0, 1); zero at the degenerate
/// endpoints.
pub fn class_weight_decrement(tau: f64) -> f64 {
    if tau <= 0.0 || tau >= 1.0 {
        0.0
    } else {
        tau - tau / tau.ln()
    }
}

pub fn update_class_weight(state: &ClassWeightState, tau: f64) -> Result<ClassWeightState> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Numeric(format!("predicted fraction {tau} outside [0, 1]")));
    }
    let mut next = *state;
    next.lambda_pos = (state.lambda_pos - class_weight_decrement(tau)).max(state.lambda_min);
    next.tau = tau;
    next.epoch += 1;
    Ok(next)
}

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Summed (not averaged) weighted cross-entropy and its gradient with
/// respect to each logit.
pub fn weighted_bce_sum(probs: &[f64], labels: &[f64], weights: &ClassWeightState) -> (f64, Vec<f64>) {
    let (lp, ln) = (weights.lambda_pos, weights.lambda_neg);
    let mut total = 0.0;
    let grads = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let q = clamp(p);
            total -= lp * y * q.ln() + ln * (1.0 - y) * (1.0 - q).ln();
            if p == q {
                // d/dz of the loss through the sigmoid
                -(lp * y * (1.0 - p)) + ln * (1.0 - y) * p
            } else {
                0.0
            }
        })
        .collect();
    (total, grads)
}

/// Mean weighted cross-entropy over sentences.
pub fn weighted_bce(probs: &[f64], labels: &[f64], weights: &ClassWeightState) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    weighted_bce_sum(probs, labels, weights).0 / probs.len() as f64
}
