/// Floor applied to the true-class probability before the logarithm.
const PROB_FLOOR: f64 = 1e-12;

/// Softmax with the maximum logit subtracted first.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `weights[gt] · (−ln p_gt)` with `p = softmax(logits)`.
pub fn weighted_ce_loss(logits: &[f64], gt: usize, weights: &[f64; 3]) -> f64 {
    weighted_ce_loss_with_grad(logits, gt, weights).0
}

/// Loss and its gradient in the logits. The floor only binds when the true
/// class probability underflows; the gradient there is the unfloored one.
pub fn weighted_ce_loss_with_grad(logits: &[f64], gt: usize, weights: &[f64; 3]) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let w = weights[gt];
    let pg = p[gt];
    // −ln p_gt via log-sum-exp keeps full precision near p_gt = 1.
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    let nll = (lse - logits[gt]).min(-PROB_FLOOR.ln());
    let nll = if pg == 1.0 { 0.0 } else { nll.max(0.0) };
    let grad = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| w * (pk - if k == gt { 1.0 } else { 0.0 }))
        .collect();
    (w * nll, grad)
}

/// `½(Y·D² + (1 − Y)·max(0, margin − D)²)` with `D = ‖e1 − e2‖`; `same` is Y.
pub fn contrastive_loss(e1: &[f64], e2: &[f64], same: bool, margin: f64) -> f64 {
    contrastive_loss_with_grad(e1, e2, same, margin).0
}

/// Loss and its gradient in `e1`; the gradient in `e2` is the negation.
pub fn contrastive_loss_with_grad(e1: &[f64], e2: &[f64], same: bool, margin: f64) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = e1.iter().zip(e2).map(|(a, b)| a - b).collect();
    let d2: f64 = diff.iter().map(|v| v * v).sum();
    if same {
        return (0.5 * d2, diff);
    }
    let d = d2.sqrt();
    let gap = margin - d;
    if gap <= 0.0 {
        return (0.0, vec![0.0; diff.len()]);
    }
    // At D = 0 the direction is undefined; take the zero subgradient.
    let scale = if d > 0.0 { -gap / d } else { 0.0 };
    (0.5 * gap * gap, diff.into_iter().map(|v| scale * v).collect())
}
