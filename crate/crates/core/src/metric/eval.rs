use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy, macro-averaged precision/recall/F1 and the row-normalized
/// confusion matrix (rows are ground truth, columns predictions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class_precision: [f64; 3],
    pub per_class_recall: [Option<f64>; 3],
    pub per_class_f1: [Option<f64>; 3],
    pub counts: [[usize; 3]; 3],
    pub confusion: [[f64; 3]; 3],
    /// Classes absent from the ground truth; left out of the macro means.
    pub absent_classes: Vec<usize>,
    /// Classes never predicted; their precision is reported as 0.
    pub never_predicted: Vec<usize>,
}

/// Macro means run over the classes present in `gts`. A class that is never
/// predicted has precision 0.
pub fn evaluate(preds: &[usize], gts: &[usize]) -> Result<Metrics> {
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch(preds.len(), gts.len()));
    }
    if gts.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(&c) = preds.iter().chain(gts).find(|&&c| c > 2) {
        return Err(Error::InvalidParameter(format!("class {c} out of range")));
    }
    let mut counts = [[0usize; 3]; 3];
    for (&p, &g) in preds.iter().zip(gts) {
        counts[g][p] += 1;
    }
    let correct: usize = (0..3).map(|c| counts[c][c]).sum();
    let row = |c: usize| counts[c].iter().sum::<usize>();
    let col = |c: usize| (0..3).map(|g| counts[g][c]).sum::<usize>();

    let mut per_class_precision = [0.0; 3];
    let mut per_class_recall = [None; 3];
    let mut per_class_f1 = [None; 3];
    let mut confusion = [[0.0; 3]; 3];
    let mut absent_classes = Vec::new();
    let mut never_predicted = Vec::new();
    for c in 0..3 {
        let tp = counts[c][c] as f64;
        if col(c) > 0 {
            per_class_precision[c] = tp / col(c) as f64;
        } else {
            never_predicted.push(c);
        }
        if row(c) > 0 {
            let r = tp / row(c) as f64;
            let p = per_class_precision[c];
            per_class_recall[c] = Some(r);
            per_class_f1[c] = Some(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 });
            for k in 0..3 {
                confusion[c][k] = counts[c][k] as f64 / row(c) as f64;
            }
        } else {
            absent_classes.push(c);
        }
    }
    let present: Vec<usize> = (0..3).filter(|&c| row(c) > 0).collect();
    let macro_mean = |f: &dyn Fn(usize) -> f64| present.iter().map(|&c| f(c)).sum::<f64>() / present.len() as f64;
    Ok(Metrics {
        accuracy: correct as f64 / gts.len() as f64,
        precision: macro_mean(&|c| per_class_precision[c]),
        recall: macro_mean(&|c| per_class_recall[c].expect("present class")),
        f1: macro_mean(&|c| per_class_f1[c].expect("present class")),
        per_class_precision,
        per_class_recall,
        per_class_f1,
        counts,
        confusion,
        absent_classes,
        never_predicted,
    })
}

impl Metrics {
    /// `metric,value` rows followed by the confusion matrix as `confusion_<gt>_<pred>`.
    pub fn write_csv<W: Write>(&self, writer: W, label: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "metric", "value"])?;
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            w.write_record([label, name, &format!("{v}")])?;
        }
        for g in 0..3 {
            for p in 0..3 {
                w.write_record([label, &format!("confusion_{g}_{p}"), &format!("{}", self.confusion[g][p])])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictor() {
        let g = [0, 1, 2, 2, 1, 0, 1];
        let m = evaluate(&g, &g).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.confusion, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn constant_predictor() {
        let gts = [0, 1, 2, 0, 1, 2, 0, 1, 2];
        let m = evaluate(&[1; 9], &gts).unwrap();
        assert!((m.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.precision - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(m.never_predicted, vec![0, 2]);
        assert_eq!(m.confusion[0], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn absent_class_excluded() {
        let m = evaluate(&[0, 1, 2], &[0, 1, 1]).unwrap();
        assert_eq!(m.absent_classes, vec![2]);
        assert_eq!(m.per_class_recall[2], None);
        assert_eq!(m.recall, (1.0 + 0.5) / 2.0);
        assert_eq!(m.confusion[2], [0.0; 3]);
    }

    #[test]
    fn length_and_range_checks() {
        assert!(evaluate(&[0], &[0, 1]).is_err());
        assert!(evaluate(&[], &[]).is_err());
        assert!(evaluate(&[3], &[0]).is_err());
    }

    /// Counts by hand from (pred, gt) pairs, then applies the textbook formulas.
    fn hand(preds: &[usize], gts: &[usize]) -> (f64, f64, f64, f64, [[f64; 3]; 3]) {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        let mut f_sum = 0.0;
        let mut k = 0.0;
        let mut conf = [[0.0; 3]; 3];
        for c in 0..3 {
            let tp = preds.iter().zip(gts).filter(|(p, g)| **p == c && **g == c).count() as f64;
            let fp = preds.iter().zip(gts).filter(|(p, g)| **p == c && **g != c).count() as f64;
            let fnn = preds.iter().zip(gts).filter(|(p, g)| **p != c && **g == c).count() as f64;
            if tp + fnn == 0.0 {
                continue;
            }
            let prec = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let rec = tp / (tp + fnn);
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            p_sum += prec;
            r_sum += rec;
            f_sum += f1;
            k += 1.0;
            for q in 0..3 {
                let n = preds.iter().zip(gts).filter(|(p, g)| **p == q && **g == c).count() as f64;
                conf[c][q] = n / (tp + fnn);
            }
        }
        let acc = preds.iter().zip(gts).filter(|(p, g)| p == g).count() as f64 / gts.len() as f64;
        (acc, p_sum / k, r_sum / k, f_sum / k, conf)
    }

    #[test]
    fn matches_hand_counts_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let n = rng.random_range(1..60);
            let gts: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let preds: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let m = evaluate(&preds, &gts).unwrap();
            let (acc, p, r, f, conf) = hand(&preds, &gts);
            assert!((m.accuracy - acc).abs() < 1e-12);
            assert!((m.precision - p).abs() < 1e-12);
            assert!((m.recall - r).abs() < 1e-12);
            assert!((m.f1 - f).abs() < 1e-12);
            for c in 0..3 {
                if gts.contains(&c) {
                    assert!((m.confusion[c].iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                }
                for q in 0..3 {
                    assert!((m.confusion[c][q] - conf[c][q]).abs() < 1e-12);
                }
            }
        }
    }
}
