use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Columns with (near) zero spread are centred but not scaled.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptySequence)?;
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let std = std.into_iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
        Ok(Scaler { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

fn by_class(labels: &[usize]) -> [Vec<usize>; 3] {
    let mut out: [Vec<usize>; 3] = Default::default();
    for (i, &c) in labels.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Indices with every present class resampled (with replacement) up to the
/// majority count. Originals are kept; only the extra draws are random.
pub fn oversample<R: Rng>(labels: &[usize], rng: &mut R) -> Vec<usize> {
    let groups = by_class(labels);
    let target = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(target * 3);
    for g in groups.iter().filter(|g| !g.is_empty()) {
        out.extend_from_slice(g);
        for _ in g.len()..target {
            out.push(*g.choose(rng).expect("non-empty group"));
        }
    }
    out
}

/// A training pair: two record indices and whether they share a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub same: bool,
}

/// `n` pairs drawn after oversampling, exactly half same-class (the extra
/// one, for odd `n`, is a same-class pair), in shuffled order.
pub fn make_pairs(labels: &[usize], n: usize, seed: u64) -> Result<Vec<Pair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs_from(labels, n, &mut rng)
}

pub(crate) fn pairs_from<R: Rng>(labels: &[usize], n: usize, rng: &mut R) -> Result<Vec<Pair>> {
    if labels.len() < 2 {
        return Err(Error::TooShort { need: 2, got: labels.len() });
    }
    if let Some(&c) = labels.iter().find(|&&c| c > 2) {
        return Err(Error::InvalidParameter(format!("class {c} out of range")));
    }
    let pool = oversample(labels, rng);
    let groups = by_class(labels);
    let present: Vec<usize> = (0..3).filter(|&c| !groups[c].is_empty()).collect();
    if present.len() < 2 {
        return Err(Error::SingleClass);
    }
    // Same-class partners come from the oversampled pool as well.
    let mut pool_groups: [Vec<usize>; 3] = Default::default();
    for &i in &pool {
        pool_groups[labels[i]].push(i);
    }
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let a = *pool.choose(rng).expect("pool holds every record");
        let ca = labels[a];
        if k % 2 == 0 {
            let group = &groups[ca];
            let b = if group.len() > 1 {
                loop {
                    let b = *pool_groups[ca].choose(rng).expect("class present");
                    if b != a {
                        break b;
                    }
                }
            } else {
                a
            };
            pairs.push(Pair { a, b, same: true });
        } else {
            let others: Vec<usize> = present.iter().copied().filter(|&c| c != ca).collect();
            let cb = *others.choose(rng).expect("two classes present");
            let b = *pool_groups[cb].choose(rng).expect("class present");
            pairs.push(Pair { a, b, same: false });
        }
    }
    pairs.shuffle(rng);
    Ok(pairs)
}

/// Seeded train/test split with `floor(ratio · n)` training rows. When every
/// present class has at least two members the split is stratified: each class
/// gets its floor share, and leftover places go by largest remainder.
pub fn split_dataset(labels: &[usize], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::TooShort { need: 2, got: n });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("split ratio {ratio}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = ((ratio * n as f64) + 1e-9).floor() as usize;
    let groups = by_class(labels);
    let stratify = labels.iter().all(|&c| c < 3) && groups.iter().all(|g| g.is_empty() || g.len() >= 2);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if stratify {
        let exact: Vec<f64> = groups.iter().map(|g| g.len() as f64 * n_train as f64 / n as f64).collect();
        let mut quota: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
        let mut left = n_train - quota.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).filter(|&c| !groups[c].is_empty()).collect();
        order.sort_by(|&a, &b| (exact[b] - quota[b] as f64).total_cmp(&(exact[a] - quota[a] as f64)).then(a.cmp(&b)));
        for &c in order.iter().cycle().take(3 * order.len()) {
            if left == 0 {
                break;
            }
            if quota[c] < groups[c].len() {
                quota[c] += 1;
                left -= 1;
            }
        }
        for (c, g) in groups.iter().enumerate() {
            let mut g = g.clone();
            g.shuffle(&mut rng);
            train.extend_from_slice(&g[..quota[c]]);
            test.extend_from_slice(&g[quota[c]..]);
        }
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        test = idx.split_off(n_train);
        train = idx;
    }
    Ok((train, test))
}
