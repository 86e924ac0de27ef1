//! Heterogeneous graph attention network over sentence and word nodes,
//! trained with manual reverse-mode gradients.

pub mod checkpoint;
pub mod forward;
pub mod loss;
pub mod optim;
pub mod params;
pub mod train;

pub use checkpoint::Checkpoint;
pub use forward::{backward, forward, Adjacency, ForwardPass, GraphInput, Mode};
pub use loss::{update_class_weight, weighted_bce, ClassWeightState};
pub use optim::Adam;
pub use params::{ModelConfig, ModelParams, NodeKind, Relation, HEADS, RELATIONS};
pub use train::{evaluate, predict, predict_summary, train, EvalStats, Selection, TrainConfig, TrainHistory, TrainOutcome};

use crate::error::Result;

/// Summed loss of one graph and the gradient of that sum.
#[derive(Debug, Clone)]
pub struct GraphGradient {
    pub loss_sum: f64,
    pub sentences: usize,
    pub grads: ModelParams,
}

pub fn graph_gradient(g: &GraphInput, params: &ModelParams, weights: &ClassWeightState, mode: Mode) -> Result<GraphGradient> {
    let pass = forward(g, params, mode)?;
    let (loss_sum, dlogits) = loss::weighted_bce_sum(&pass.probs, &g.labels, weights);
    let grads = backward(&pass, g, params, &dlogits);
    Ok(GraphGradient {
        loss_sum,
        sentences: g.n(),
        grads,
    })
}

/// Mean loss of one graph.
pub fn graph_loss(g: &GraphInput, params: &ModelParams, weights: &ClassWeightState, mode: Mode) -> Result<f64> {
    let pass = forward(g, params, mode)?;
    Ok(weighted_bce(&pass.probs, &g.labels, weights))
}

/// Result of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub worst_tensor: String,
    pub checked: usize,
}

/// Relative errors below `floor` in magnitude are measured against `floor`
/// so that entries that are zero analytically do not blow up the ratio.
pub const GRADIENT_CHECK_FLOOR: f64 = 1e-6;

/// Central-difference check of every parameter entry of the mean loss.
pub fn gradient_check(
    g: &GraphInput,
    params: &ModelParams,
    weights: &ClassWeightState,
    mode: Mode,
    step: f64,
) -> Result<GradientCheck> {
    let analytic = {
        let mut gg = graph_gradient(g, params, weights, mode)?;
        gg.grads.scale(1.0 / gg.sentences as f64);
        gg.grads
    };
    let names = params.tensor_names();
    let mut probe = params.clone();
    let mut out = GradientCheck {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        checked: 0,
    };
    for (t, name) in names.iter().enumerate() {
        let len = params.tensors()[t].len();
        for k in 0..len {
            let original = params.tensors()[t].as_slice().expect("standard layout")[k];
            probe.tensors_mut()[t].as_slice_mut().expect("standard layout")[k] = original + step;
            let plus = graph_loss(g, &probe, weights, mode)?;
            probe.tensors_mut()[t].as_slice_mut().expect("standard layout")[k] = original - step;
            let minus = graph_loss(g, &probe, weights, mode)?;
            probe.tensors_mut()[t].as_slice_mut().expect("standard layout")[k] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.tensors()[t].as_slice().expect("standard layout")[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRADIENT_CHECK_FLOOR);
            out.checked += 1;
            if rel > out.max_relative_error {
                out.max_relative_error = rel;
                out.worst_tensor = format!("{name}[{k}]");
            }
        }
    }
    Ok(out)
}
