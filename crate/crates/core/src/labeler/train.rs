use serde::{Deserialize, Serialize};

use super::network::LabelerNetwork;
use crate::affect::Valence;
use crate::dtw::MatchSequence;
use crate::error::{Error, Result};

/// Halvings tried before a step is declared stalled.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub steps: usize,
    pub lr: f64,
    pub c: f64,
    /// Halve the step size until the loss does not increase.
    pub backtrack: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Full-batch loss before each step, then after the last.
    pub losses: Vec<f64>,
    /// Step size actually taken at each step.
    pub step_sizes: Vec<f64>,
}

/// Full-batch gradient descent on the labeler loss. Deterministic: the only
/// randomness lives in the initial weights. With backtracking, a step is also
/// refused when it would make a defined correlation undefined.
pub fn train_labeler(
    net: &LabelerNetwork,
    vm: &MatchSequence,
    wm: &MatchSequence,
    valence: &Valence,
    opts: &TrainOptions,
) -> Result<(LabelerNetwork, TrainHistory)> {
    if opts.steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    if !(opts.lr >= 0.0 && opts.lr.is_finite()) {
        return Err(Error::InvalidParameter(format!("learning rate {}", opts.lr)));
    }
    let mut net = net.clone();
    let mut history = TrainHistory::default();
    for step in 0..opts.steps {
        let (report, ga, gf) = net.loss_and_grads(vm, wm, valence, opts.c)?;
        if !report.loss.is_finite() {
            return Err(Error::NonFiniteLoss { step, detail: format!("{report:?}") });
        }
        history.losses.push(report.loss);
        let mut lr = opts.lr;
        let mut taken = 0.0;
        for _ in 0..=MAX_HALVINGS {
            let mut cand = net.clone();
            cand.affect.step(&ga, lr);
            cand.flow.step(&gf, lr);
            if !opts.backtrack {
                net = cand;
                taken = lr;
                break;
            }
            let r = cand.loss(vm, wm, valence, opts.c)?;
            // A list collapsing to a constant zeroes its terms; that is not progress.
            let keeps_defined =
                r.x1.is_some() >= report.x1.is_some() && r.x2.is_some() >= report.x2.is_some();
            if r.loss.is_finite() && r.loss <= report.loss && keeps_defined {
                net = cand;
                taken = lr;
                break;
            }
            lr *= 0.5;
        }
        history.step_sizes.push(taken);
        if !net.is_finite() {
            return Err(Error::NonFiniteLoss { step, detail: "weights became non-finite".into() });
        }
    }
    let last = net.loss(vm, wm, valence, opts.c)?.loss;
    if !last.is_finite() {
        return Err(Error::NonFiniteLoss { step: opts.steps, detail: "final loss".into() });
    }
    history.losses.push(last);
    Ok((net, history))
}
