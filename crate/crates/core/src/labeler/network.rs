use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{labeler_loss_with_grad, LossReport};
use crate::affect::{Affect, Valence};
use crate::dtw::MatchSequence;
use crate::error::{Error, Result};
use crate::nn::{Activation, Dense, Grads, Mlp};
use super::LabelerConfig;

const AFFECTS: usize = 7;

/// How the labeler weights start out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LabelerInit {
    /// Everything uniform in `[-scale, scale]`.
    Uniform { scale: f64 },
    /// The first hidden units start as nearest-prototype detectors. Affect unit
    /// `i` fires when prototype `i` is closer than the row's mean distance by
    /// more than `margin`. The flow unit fires on one side of a split of the
    /// whole-session distances, the split being the one with the lowest
    /// labeler loss against the initial affect outputs (Otsu's split if no
    /// candidate gives a defined loss). Remaining weights are uniform in
    /// `[-scale, scale]`.
    PrototypeAligned { gain: f64, margin: f64, output_gain: f64, flow_gain: f64, scale: f64 },
}

impl Default for LabelerInit {
    fn default() -> Self {
        LabelerInit::PrototypeAligned {
            gain: 20.0,
            margin: 0.05,
            output_gain: 6.0,
            flow_gain: 20.0,
            scale: 0.1,
        }
    }
}

/// Two small heads: 7 video-match distances to 7 affect probabilities, and one
/// whole-session distance to a flow probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelerNetwork {
    pub affect: Mlp,
    pub flow: Mlp,
}

/// Per-window probabilities before thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabels {
    pub affect: Vec<[f64; 7]>,
    pub flow: Vec<f64>,
}

impl SoftLabels {
    /// Mean probability of the positive and of the negative affects per window.
    pub fn aggregates(&self, valence: &Valence) -> (Vec<f64>, Vec<f64>) {
        let pos = valence.positive();
        let neg = valence.negative();
        let mean = |p: &[f64; 7], set: &[Affect]| {
            set.iter().map(|a| p[a.index()]).sum::<f64>() / set.len() as f64
        };
        self.affect.iter().map(|p| (mean(p, &pos), mean(p, &neg))).unzip()
    }
}

fn two_layer(inputs: usize, hidden: usize, outputs: usize, scale: f64, rng: &mut ChaCha8Rng) -> Mlp {
    Mlp::new(vec![
        Dense::uniform(inputs, hidden, Activation::Tanh, scale, rng),
        Dense::uniform(hidden, outputs, Activation::Sigmoid, scale, rng),
    ])
}

/// Threshold maximizing between-class variance of `xs`, placed halfway between
/// the two neighbouring values it separates.
pub fn otsu_threshold(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n < 2 {
        return v.first().copied().unwrap_or(0.5);
    }
    let total: f64 = v.iter().sum();
    let mut left = 0.0;
    let mut best = (f64::NEG_INFINITY, 0.5 * (v[0] + v[n - 1]));
    for k in 1..n {
        left += v[k - 1];
        if v[k] == v[k - 1] {
            continue;
        }
        let (n0, n1) = (k as f64, (n - k) as f64);
        let diff = left / n0 - (total - left) / n1;
        let score = n0 * n1 * diff * diff;
        if score > best.0 {
            best = (score, 0.5 * (v[k - 1] + v[k]));
        }
    }
    best.1
}

impl LabelerNetwork {
    pub fn zeros(hidden: usize) -> Self {
        LabelerNetwork {
            affect: Mlp::new(vec![
                Dense::zeros(AFFECTS, hidden, Activation::Tanh),
                Dense::zeros(hidden, AFFECTS, Activation::Sigmoid),
            ]),
            flow: Mlp::new(vec![
                Dense::zeros(1, hidden, Activation::Tanh),
                Dense::zeros(hidden, 1, Activation::Sigmoid),
            ]),
        }
    }

    /// `cfg.whole_is_flow` says which side of the whole-session split is flow:
    /// windows close to the whole session share its state.
    pub fn init(cfg: &LabelerConfig, vm: &MatchSequence, wm: &MatchSequence) -> Result<Self> {
        let hidden = cfg.hidden;
        if hidden == 0 {
            return Err(Error::InvalidParameter("hidden width must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        match cfg.init {
            LabelerInit::Uniform { scale } => Ok(LabelerNetwork {
                affect: two_layer(AFFECTS, hidden, AFFECTS, scale, &mut rng),
                flow: two_layer(1, hidden, 1, scale, &mut rng),
            }),
            LabelerInit::PrototypeAligned { gain, margin, output_gain, flow_gain, scale } => {
                if hidden < AFFECTS {
                    return Err(Error::InvalidParameter(format!(
                        "prototype-aligned init needs at least {AFFECTS} hidden units, got {hidden}"
                    )));
                }
                let mut affect = two_layer(AFFECTS, hidden, AFFECTS, scale, &mut rng);
                let mut flow = two_layer(1, hidden, 1, scale, &mut rng);
                let [l1, l2] = &mut affect.layers[..] else { unreachable!("two layers") };
                for i in 0..AFFECTS {
                    for j in 0..AFFECTS {
                        let own = if i == j { 1.0 } else { 0.0 };
                        l1.weights[i * AFFECTS + j] = gain * (1.0 / AFFECTS as f64 - own);
                    }
                    l1.bias[i] = -gain * margin;
                    for h in 0..hidden {
                        l2.weights[i * hidden + h] = if h == i { output_gain } else { 0.0 };
                    }
                    l2.bias[i] = 0.0;
                }
                let out = &mut flow.layers[1];
                out.weights.iter_mut().for_each(|w| *w = 0.0);
                out.weights[0] = output_gain;
                out.bias[0] = 0.0;
                let sign = if cfg.whole_is_flow { -1.0 } else { 1.0 };
                let mut net = LabelerNetwork { affect, flow };
                let split = net.best_flow_split(vm, wm, sign * flow_gain, cfg)?;
                net.flow.layers[0].weights[0] = sign * flow_gain;
                net.flow.layers[0].bias[0] = -sign * flow_gain * split;
                Ok(net)
            }
        }
    }

    fn best_flow_split(&self, vm: &MatchSequence, wm: &MatchSequence, weight: f64, cfg: &LabelerConfig) -> Result<f64> {
        self.check_shapes(vm, wm)?;
        let col = wm.column(0);
        let soft = self.forward(vm, wm)?;
        let (pa, na) = soft.aggregates(&cfg.valence);
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut probe = self.flow.clone();
        let mut best: Option<(f64, f64)> = None;
        for w in sorted.windows(2) {
            let split = 0.5 * (w[0] + w[1]);
            probe.layers[0].weights[0] = weight;
            probe.layers[0].bias[0] = -weight * split;
            let flow: Vec<f64> = col.iter().map(|&d| probe.forward(&[d])[0]).collect();
            let r = super::loss::labeler_loss(&pa, &na, &flow, cfg.c)?;
            if r.x1.is_none() || !r.loss.is_finite() {
                continue;
            }
            if best.is_none_or(|(l, _)| r.loss < l) {
                best = Some((r.loss, split));
            }
        }
        Ok(best.map_or_else(|| otsu_threshold(&col), |(_, s)| s))
    }

    fn check_shapes(&self, vm: &MatchSequence, wm: &MatchSequence) -> Result<()> {
        if vm.len() != wm.len() {
            return Err(Error::LengthMismatch(vm.len(), wm.len()));
        }
        for r in &vm.rows {
            if r.len() != self.affect.input_dim() {
                return Err(Error::DimensionMismatch { expected: self.affect.input_dim(), got: r.len() });
            }
        }
        for r in &wm.rows {
            if r.len() != self.flow.input_dim() {
                return Err(Error::DimensionMismatch { expected: self.flow.input_dim(), got: r.len() });
            }
        }
        Ok(())
    }

    pub fn forward(&self, vm: &MatchSequence, wm: &MatchSequence) -> Result<SoftLabels> {
        self.check_shapes(vm, wm)?;
        let affect = vm
            .rows
            .iter()
            .map(|r| {
                let out = self.affect.forward(r);
                let mut p = [0.0; 7];
                p.copy_from_slice(&out);
                p
            })
            .collect();
        let flow = wm.rows.iter().map(|r| self.flow.forward(r)[0]).collect();
        Ok(SoftLabels { affect, flow })
    }

    /// Full-batch loss on soft lists.
    pub fn loss(
        &self,
        vm: &MatchSequence,
        wm: &MatchSequence,
        valence: &Valence,
        c: f64,
    ) -> Result<LossReport> {
        let soft = self.forward(vm, wm)?;
        let (pa, na) = soft.aggregates(valence);
        super::loss::labeler_loss(&pa, &na, &soft.flow, c)
    }

    /// Loss plus gradients for the affect head and the flow head.
    pub fn loss_and_grads(
        &self,
        vm: &MatchSequence,
        wm: &MatchSequence,
        valence: &Valence,
        c: f64,
    ) -> Result<(LossReport, Grads, Grads)> {
        self.check_shapes(vm, wm)?;
        let at: Vec<_> = vm.rows.iter().map(|r| self.affect.forward_trace(r)).collect();
        let ft: Vec<_> = wm.rows.iter().map(|r| self.flow.forward_trace(r)).collect();
        let soft = SoftLabels {
            affect: at
                .iter()
                .map(|t| {
                    let mut p = [0.0; 7];
                    p.copy_from_slice(t.output());
                    p
                })
                .collect(),
            flow: ft.iter().map(|t| t.output()[0]).collect(),
        };
        let (pa, na) = soft.aggregates(valence);
        let (report, lists) = labeler_loss_with_grad(&pa, &na, &soft.flow, c)?;

        let pos = valence.positive().len() as f64;
        let neg = valence.negative().len() as f64;
        let mut ga = Grads::zeros_like(&self.affect);
        let mut gf = Grads::zeros_like(&self.flow);
        for (w, trace) in at.iter().enumerate() {
            let gout: Vec<f64> = Affect::ALL
                .iter()
                .map(|&a| {
                    if valence.is_positive(a) {
                        lists.pa[w] / pos
                    } else {
                        lists.na[w] / neg
                    }
                })
                .collect();
            self.affect.backward(trace, &gout, &mut ga);
        }
        for (w, trace) in ft.iter().enumerate() {
            self.flow.backward(trace, &[lists.flow[w]], &mut gf);
        }
        Ok((report, ga, gf))
    }

    pub fn is_finite(&self) -> bool {
        self.affect.is_finite() && self.flow.is_finite()
    }
}
