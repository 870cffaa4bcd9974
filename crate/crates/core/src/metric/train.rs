use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{oversample, pairs_from, split_dataset, Scaler};
use super::eval::{evaluate, Metrics};
use super::loss::{contrastive_loss_with_grad, weighted_ce_loss_with_grad};
use super::network::{EmbeddingGrads, EmbeddingNetwork, NetworkShape};
use super::{GamePlayRecord, DEFAULT_CLASS_WEIGHTS, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::gut::Gut;

/// A scaled, labeled training row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub team_fight: Vec<f64>,
    pub score: Vec<f64>,
    pub class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiameseOptions {
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    pub seed: u64,
    /// Pairs whose gradients are averaged per update.
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub weights: [f64; 3],
    pub oversample: bool,
    /// Samples whose gradients are averaged per update.
    pub batch_size: usize,
}

/// Mean training embedding of each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBaselines {
    pub means: Vec<Vec<f64>>,
}

impl ClassBaselines {
    pub fn from_embeddings(embeddings: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        let dim = embeddings.first().ok_or(Error::EmptySequence)?.len();
        let mut means = vec![vec![0.0; dim]; 3];
        let mut counts = [0usize; 3];
        for (e, &c) in embeddings.iter().zip(labels) {
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(e) {
                *m += v;
            }
        }
        for (c, m) in means.iter_mut().enumerate() {
            if counts[c] == 0 {
                return Err(Error::MissingClass(c));
            }
            m.iter_mut().for_each(|v| *v /= counts[c] as f64);
        }
        Ok(ClassBaselines { means })
    }

    /// Index of the nearest mean; ties go to the lower class.
    pub fn nearest(&self, embedding: &[f64]) -> usize {
        let dist = |m: &Vec<f64>| m.iter().zip(embedding).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut best = 0;
        let mut best_d = dist(&self.means[0]);
        for (c, m) in self.means.iter().enumerate().skip(1) {
            let d = dist(m);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        best
    }
}

pub fn predict(net: &EmbeddingNetwork, baselines: &ClassBaselines, team_fight: &[f64], score: &[f64]) -> usize {
    baselines.nearest(&net.forward(team_fight, score))
}

/// Index of the largest logit; ties go to the lower class.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (k, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = k;
        }
    }
    best
}

fn check_finite(loss: f64, net: &EmbeddingNetwork, step: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss { step, detail: format!("loss {loss}") });
    }
    if !net.is_finite() {
        return Err(Error::NonFiniteLoss { step, detail: "weights became non-finite".into() });
    }
    Ok(())
}

/// Mini-batch SGD on the contrastive loss. Each epoch draws a fresh balanced
/// pair stream, as many pairs as the oversampled training set has rows, from
/// one seeded generator; a longer run therefore replays a shorter one before
/// continuing. Returns the network, class baselines over the training set and
/// the mean loss of each epoch.
pub fn train_siamese(
    net: &EmbeddingNetwork,
    train: &[Sample],
    opts: &SiameseOptions,
) -> Result<(EmbeddingNetwork, ClassBaselines, Vec<f64>)> {
    if opts.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    if !(opts.margin > 0.0) {
        return Err(Error::InvalidParameter(format!("margin must be positive, got {}", opts.margin)));
    }
    let labels: Vec<usize> = train.iter().map(|s| s.class).collect();
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    if labels.iter().all(|&c| c == labels[0]) {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_pairs = oversample(&labels, &mut ChaCha8Rng::seed_from_u64(0)).len();
    let mut net = net.clone();
    let mut history = Vec::with_capacity(opts.epochs);
    let mut step = 0;
    for _ in 0..opts.epochs {
        let pairs = pairs_from(&labels, n_pairs, &mut rng)?;
        let mut total = 0.0;
        for batch in pairs.chunks(opts.batch_size) {
            let mut grads = EmbeddingGrads::zeros_like(&net);
            let mut batch_loss = 0.0;
            for p in batch {
                let (a, b) = (&train[p.a], &train[p.b]);
                let ta = net.forward_trace(&a.team_fight, &a.score);
                let tb = net.forward_trace(&b.team_fight, &b.score);
                let (loss, g1) = contrastive_loss_with_grad(ta.output(), tb.output(), p.same, opts.margin);
                let g2: Vec<f64> = g1.iter().map(|v| -v).collect();
                net.backward(&ta, &g1, &mut grads);
                net.backward(&tb, &g2, &mut grads);
                batch_loss += loss;
            }
            grads.scale(1.0 / batch.len() as f64);
            net.step(&grads, opts.lr);
            check_finite(batch_loss, &net, step)?;
            total += batch_loss;
            step += 1;
        }
        history.push(total / pairs.len() as f64);
    }
    let embeddings: Vec<Vec<f64>> = train.iter().map(|s| net.forward(&s.team_fight, &s.score)).collect();
    let baselines = ClassBaselines::from_embeddings(&embeddings, &labels)?;
    Ok((net, baselines, history))
}

/// Mini-batch SGD on the weighted cross-entropy, over the oversampled training
/// set reshuffled each epoch. Returns the network and mean loss per epoch.
pub fn train_baseline_classifier(
    net: &EmbeddingNetwork,
    train: &[Sample],
    opts: &ClassifierOptions,
) -> Result<(EmbeddingNetwork, Vec<f64>)> {
    if opts.batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    let labels: Vec<usize> = train.iter().map(|s| s.class).collect();
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    if labels.iter().all(|&c| c == labels[0]) {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut net = net.clone();
    let mut history = Vec::with_capacity(opts.epochs);
    let mut step = 0;
    for _ in 0..opts.epochs {
        let mut order = if opts.oversample { oversample(&labels, &mut rng) } else { (0..labels.len()).collect() };
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(opts.batch_size) {
            let mut grads = EmbeddingGrads::zeros_like(&net);
            let mut batch_loss = 0.0;
            for &i in batch {
                let s = &train[i];
                let trace = net.forward_trace(&s.team_fight, &s.score);
                let (loss, g) = weighted_ce_loss_with_grad(trace.output(), s.class, &opts.weights);
                net.backward(&trace, &g, &mut grads);
                batch_loss += loss;
            }
            grads.scale(1.0 / batch.len() as f64);
            net.step(&grads, opts.lr);
            check_finite(batch_loss, &net, step)?;
            total += batch_loss;
            step += 1;
        }
        history.push(total / order.len() as f64);
    }
    Ok((net, history))
}

/// Model configurations compared in the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Cross-entropy classifier on team-fight data.
    Fc,
    /// Cross-entropy classifier with the personality branch.
    FcPe,
    /// Siamese embedding on team-fight data.
    Siamese,
    /// Siamese embedding with the personality branch.
    SiamesePe,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Fc, Variant::FcPe, Variant::Siamese, Variant::SiamesePe];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Fc => "FC",
            Variant::FcPe => "FC+PE",
            Variant::Siamese => "Siamese network",
            Variant::SiamesePe => "GUT(Ours)",
        }
    }

    pub fn is_siamese(self) -> bool {
        matches!(self, Variant::Siamese | Variant::SiamesePe)
    }

    pub fn with_personality(self) -> bool {
        matches!(self, Variant::FcPe | Variant::SiamesePe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub split_ratio: f64,
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    pub seed: u64,
    pub class_weights: [f64; 3],
    pub oversample: bool,
    pub batch_size: usize,
    pub shape: NetworkShape,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            split_ratio: 0.7,
            epochs: 200,
            lr: 0.05,
            margin: 1.0,
            seed: 0,
            class_weights: DEFAULT_CLASS_WEIGHTS,
            oversample: true,
            batch_size: 32,
            shape: NetworkShape::default(),
        }
    }
}

/// A trained predictor with the scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GutModel {
    pub variant: Variant,
    pub team_scaler: Scaler,
    pub score_scaler: Scaler,
    pub network: EmbeddingNetwork,
    /// Present for Siamese variants.
    pub baselines: Option<ClassBaselines>,
}

impl GutModel {
    pub fn predict_record(&self, r: &GamePlayRecord) -> Result<Gut> {
        r.validate()?;
        let tf = self.team_scaler.apply(&r.team_fight);
        let sc = self.score_scaler.apply(&r.score_related);
        let class = match &self.baselines {
            Some(b) => predict(&self.network, b, &tf, &sc),
            None => argmax(&self.network.forward(&tf, &sc)),
        };
        Ok(Gut::from_index(class).expect("three classes"))
    }
}

/// A trained variant with its held-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: GutModel,
    pub metrics: Metrics,
    pub train_metrics: Metrics,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub test_predictions: Vec<usize>,
    pub epoch_losses: Vec<f64>,
}

/// Splits labeled records, fits scaling on the training part, trains one
/// variant and evaluates it on the held-out part. The split depends only on
/// the seed, so every variant sees the same partition.
pub fn run_variant(records: &[GamePlayRecord], variant: Variant, cfg: &MetricConfig) -> Result<TrainReport> {
    let mut labels = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|e| Error::InvalidRecord(format!("record {i}: {e}")))?;
        let g = r.gut_label.ok_or_else(|| Error::InvalidRecord(format!("record {i} has no GUT label")))?;
        labels.push(g.index());
    }
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    if labels.iter().all(|&c| c == labels[0]) {
        return Err(Error::SingleClass);
    }
    let (train_idx, test_idx) = split_dataset(&labels, cfg.split_ratio, cfg.seed)?;
    let team_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| records[i].team_fight.clone()).collect();
    let score_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| records[i].score_related.clone()).collect();
    let team_scaler = Scaler::fit(&team_rows)?;
    let score_scaler = Scaler::fit(&score_rows)?;
    let sample = |i: usize| Sample {
        team_fight: team_scaler.apply(&records[i].team_fight),
        score: score_scaler.apply(&records[i].score_related),
        class: labels[i],
    };
    let train: Vec<Sample> = train_idx.iter().map(|&i| sample(i)).collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let out_dim = if variant.is_siamese() { EMBEDDING_DIM } else { 3 };
    let net = EmbeddingNetwork::new(&cfg.shape, variant.with_personality(), out_dim, &mut init_rng);
    let train_seed = cfg.seed.wrapping_add(2);
    let (network, baselines, epoch_losses) = if variant.is_siamese() {
        let opts = SiameseOptions {
            epochs: cfg.epochs,
            lr: cfg.lr,
            margin: cfg.margin,
            seed: train_seed,
            batch_size: cfg.batch_size,
        };
        let (n, b, h) = train_siamese(&net, &train, &opts)?;
        (n, Some(b), h)
    } else {
        let opts = ClassifierOptions {
            epochs: cfg.epochs,
            lr: cfg.lr,
            seed: train_seed,
            weights: cfg.class_weights,
            oversample: cfg.oversample,
            batch_size: cfg.batch_size,
        };
        let (n, h) = train_baseline_classifier(&net, &train, &opts)?;
        (n, None, h)
    };
    let model = GutModel { variant, team_scaler, score_scaler, network, baselines };
    let classify = |idx: &[usize]| -> Result<Vec<usize>> {
        idx.iter().map(|&i| model.predict_record(&records[i]).map(Gut::index)).collect()
    };
    let test_predictions = classify(&test_idx)?;
    let test_gts: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
    let metrics = evaluate(&test_predictions, &test_gts)?;
    let train_preds = classify(&train_idx)?;
    let train_gts: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let train_metrics = evaluate(&train_preds, &train_gts)?;
    Ok(TrainReport {
        model,
        metrics,
        train_metrics,
        train_indices: train_idx,
        test_indices: test_idx,
        test_predictions,
        epoch_losses,
    })
}
