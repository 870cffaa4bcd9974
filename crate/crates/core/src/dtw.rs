//! Dynamic time warping over feature-vector sequences and the per-window match
//! sequences built from it.

use serde::{Deserialize, Serialize};

use crate::affect::Affect;
use crate::error::{Error, Result};
use crate::physio::{FeatureMatrix, FeatureRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalCost {
    #[default]
    Euclidean,
    SquaredEuclidean,
    /// Sum of absolute differences.
    Manhattan,
}

impl LocalCost {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            LocalCost::Euclidean => it.map(|d| d * d).sum::<f64>().sqrt(),
            LocalCost::SquaredEuclidean => it.map(|d| d * d).sum(),
            LocalCost::Manhattan => it.map(f64::abs).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DtwConfig {
    pub cost: LocalCost,
    /// Sakoe-Chiba half-width in cells; `None` leaves the DP unconstrained.
    pub band: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtwDistance {
    pub cost: f64,
    /// Number of cells on the optimal warping path.
    pub path_len: usize,
}

fn check_dims<V: AsRef<[f64]>>(a: &[V], b: &[V]) -> Result<usize> {
    let first = a.first().ok_or(Error::EmptySequence)?;
    if b.is_empty() {
        return Err(Error::EmptySequence);
    }
    let dim = first.as_ref().len();
    for v in a.iter().chain(b) {
        if v.as_ref().len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.as_ref().len() });
        }
    }
    Ok(dim)
}

/// Full cost and path-length tables, row-major `(n + 1) × (m + 1)`.
fn fill<V: AsRef<[f64]>>(a: &[V], b: &[V], cfg: &DtwConfig) -> (Vec<f64>, Vec<usize>) {
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut acc = vec![f64::INFINITY; (n + 1) * w];
    let mut len = vec![0usize; (n + 1) * w];
    acc[0] = 0.0;
    // The band must at least cover the diagonal offset or no path exists.
    let band = cfg.band.map(|b| b.max(n.abs_diff(m)));
    for i in 1..=n {
        let (lo, hi) = match band {
            Some(r) => (i.saturating_sub(r).max(1), (i + r).min(m)),
            None => (1, m),
        };
        for j in lo..=hi {
            let c = cfg.cost.eval(a[i - 1].as_ref(), b[j - 1].as_ref());
            let diag = (acc[(i - 1) * w + j - 1], len[(i - 1) * w + j - 1]);
            let up = (acc[(i - 1) * w + j], len[(i - 1) * w + j]);
            let left = (acc[i * w + j - 1], len[i * w + j - 1]);
            // Prefer the diagonal on ties, then the shorter path.
            let best = [diag, up, left]
                .into_iter()
                .reduce(|x, y| if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x })
                .expect("three candidates");
            acc[i * w + j] = c + best.0;
            len[i * w + j] = best.1 + 1;
        }
    }
    (acc, len)
}

/// Classic DTW with match, insertion and deletion steps.
pub fn dtw_distance<V: AsRef<[f64]>>(a: &[V], b: &[V], cfg: &DtwConfig) -> Result<DtwDistance> {
    check_dims(a, b)?;
    let (acc, len) = fill(a, b, cfg);
    let last = acc.len() - 1;
    Ok(DtwDistance { cost: acc[last], path_len: len[last] })
}

/// Distance plus the optimal alignment as `(i, j)` index pairs from `(0, 0)`.
pub fn dtw_path<V: AsRef<[f64]>>(
    a: &[V],
    b: &[V],
    cfg: &DtwConfig,
) -> Result<(DtwDistance, Vec<(usize, usize)>)> {
    check_dims(a, b)?;
    let (acc, len) = fill(a, b, cfg);
    let w = b.len() + 1;
    let (mut i, mut j) = (a.len(), b.len());
    let mut path = vec![(i - 1, j - 1)];
    while (i, j) != (1, 1) {
        let cands = [(i - 1, j - 1), (i - 1, j), (i, j - 1)];
        let (pi, pj) = cands
            .into_iter()
            .filter(|&(p, q)| p >= 1 && q >= 1)
            .reduce(|x, y| {
                let (cx, cy) = (acc[x.0 * w + x.1], acc[y.0 * w + y.1]);
                let (lx, ly) = (len[x.0 * w + x.1], len[y.0 * w + y.1]);
                if cy < cx || (cy == cx && ly < lx) {
                    y
                } else {
                    x
                }
            })
            .expect("an interior predecessor exists");
        i = pi;
        j = pj;
        path.push((i - 1, j - 1));
    }
    path.reverse();
    let last = acc.len() - 1;
    Ok((DtwDistance { cost: acc[last], path_len: len[last] }, path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    VideoMatch,
    WholeMatch,
}

/// One distance vector per sliding window, min-max normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSequence {
    pub kind: MatchKind,
    pub rows: Vec<Vec<f64>>,
    /// Per-column flag: the column was constant over the session and zeroed.
    pub constant_columns: Vec<bool>,
    /// Distances before normalization.
    pub raw: Vec<Vec<f64>>,
}

impl MatchSequence {
    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// How distance columns are scaled into `[0, 1]` before the labeler sees them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchScaling {
    /// One min-max range shared by all columns, so relative distances between
    /// prototypes survive.
    #[default]
    Shared,
    /// Each column scaled on its own range.
    PerColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub dtw: DtwConfig,
    pub scaling: MatchScaling,
}

/// One prototype sequence per affect: the mean of that affect's video rows.
/// Fails when an affect has no video.
pub fn affect_prototypes(videos: &[FeatureMatrix]) -> Result<Vec<Vec<Vec<f64>>>> {
    if videos.is_empty() {
        return Err(Error::NoVideos);
    }
    let mut out = Vec::with_capacity(Affect::ALL.len());
    for a in Affect::ALL {
        let rows: Vec<&Vec<f64>> = videos
            .iter()
            .filter(|v| v.affect() == Some(a))
            .flat_map(|v| v.rows.iter())
            .collect();
        let first = rows.first().ok_or(Error::MissingAffect(a.name()))?;
        let mut mean = vec![0.0; first.len()];
        for r in &rows {
            if r.len() != mean.len() {
                return Err(Error::DimensionMismatch { expected: mean.len(), got: r.len() });
            }
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= rows.len() as f64;
        }
        out.push(vec![mean]);
    }
    Ok(out)
}

fn normalize(raw: Vec<Vec<f64>>, scaling: MatchScaling, kind: MatchKind) -> MatchSequence {
    let width = raw.first().map_or(0, Vec::len);
    let range = |cols: &[usize]| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in &raw {
            for &j in cols {
                lo = lo.min(r[j]);
                hi = hi.max(r[j]);
            }
        }
        (lo, hi)
    };
    let col_range: Vec<(f64, f64)> = (0..width).map(|j| range(&[j])).collect();
    let all: Vec<usize> = (0..width).collect();
    let shared = range(&all);
    let constant_columns: Vec<bool> =
        col_range.iter().map(|&(lo, hi)| hi - lo <= 1e-12 * hi.abs().max(1.0)).collect();
    let rows = raw
        .iter()
        .map(|r| {
            (0..width)
                .map(|j| {
                    if constant_columns[j] {
                        return 0.0;
                    }
                    let (lo, hi) = match scaling {
                        MatchScaling::Shared => shared,
                        MatchScaling::PerColumn => col_range[j],
                    };
                    (r[j] - lo) / (hi - lo)
                })
                .collect()
        })
        .collect();
    MatchSequence { kind, rows, constant_columns, raw }
}

/// Matches every sliding window (as a length-1 sequence) against each affect
/// prototype and against the whole-session matrix.
pub fn build_match_sequences(
    sliding: &FeatureMatrix,
    videos: &[FeatureMatrix],
    whole: &FeatureMatrix,
    cfg: &MatchConfig,
) -> Result<(MatchSequence, MatchSequence)> {
    sliding.expect_role(FeatureRole::Sliding)?;
    whole.expect_role(FeatureRole::Whole)?;
    for v in videos {
        v.expect_role(FeatureRole::Video)?;
    }
    if sliding.is_empty() {
        return Err(Error::EmptySequence);
    }
    let prototypes = affect_prototypes(videos)?;
    let mut vm = Vec::with_capacity(sliding.len());
    let mut wm = Vec::with_capacity(sliding.len());
    for row in &sliding.rows {
        let query = std::slice::from_ref(row);
        let dists = prototypes
            .iter()
            .map(|p| dtw_distance(query, p, &cfg.dtw).map(|d| d.cost))
            .collect::<Result<Vec<f64>>>()?;
        vm.push(dists);
        wm.push(vec![dtw_distance(query, &whole.rows, &cfg.dtw)?.cost]);
    }
    Ok((
        normalize(vm, cfg.scaling, MatchKind::VideoMatch),
        normalize(wm, cfg.scaling, MatchKind::WholeMatch),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physio::MatrixLabel;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn scalars(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    fn manhattan() -> DtwConfig {
        DtwConfig { cost: LocalCost::Manhattan, band: None }
    }

    #[test]
    fn worked_examples() {
        let a = scalars(&[1.0, 2.0, 3.0]);
        let b = scalars(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(dtw_distance(&a, &b, &manhattan()).unwrap().cost, 0.0);
        let a = scalars(&[0.0, 0.0]);
        let b = scalars(&[1.0, 1.0]);
        let d = dtw_distance(&a, &b, &manhattan()).unwrap();
        assert_eq!(d.cost, 2.0);
        assert_eq!(d.path_len, 2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = vec![vec![1.0, 2.0]];
        let b = vec![vec![1.0]];
        assert!(matches!(
            dtw_distance(&a, &b, &DtwConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(dtw_distance(&empty, &b, &DtwConfig::default()), Err(Error::EmptySequence)));
    }

    #[test]
    fn path_is_monotone_and_matches_cost() {
        let a = scalars(&[0.0, 1.0, 5.0, 2.0, 2.0]);
        let b = scalars(&[0.0, 5.0, 2.0]);
        let (d, path) = dtw_path(&a, &b, &manhattan()).unwrap();
        assert_eq!(path.first(), Some(&(0, 0)));
        assert_eq!(path.last(), Some(&(4, 2)));
        assert_eq!(path.len(), d.path_len);
        let total: f64 = path.iter().map(|&(i, j)| (a[i][0] - b[j][0]).abs()).sum();
        assert_eq!(total, d.cost);
        for w in path.windows(2) {
            let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
    }

    #[test]
    fn wide_band_equals_unconstrained() {
        let a = scalars(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0]);
        let b = scalars(&[2.0, 7.0, 1.0, 8.0, 2.0]);
        let free = dtw_distance(&a, &b, &manhattan()).unwrap().cost;
        let banded = dtw_distance(&a, &b, &DtwConfig { band: Some(10), ..manhattan() }).unwrap();
        assert_eq!(banded.cost, free);
        let narrow = dtw_distance(&a, &b, &DtwConfig { band: Some(0), ..manhattan() }).unwrap();
        assert!(narrow.cost >= free && narrow.cost.is_finite());
    }

    /// Memoized recursion straight from the DTW definition.
    fn oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        fn go(
            i: usize,
            j: usize,
            a: &[Vec<f64>],
            b: &[Vec<f64>],
            memo: &mut HashMap<(usize, usize), f64>,
        ) -> f64 {
            if let Some(&v) = memo.get(&(i, j)) {
                return v;
            }
            let c = LocalCost::Euclidean.eval(&a[i], &b[j]);
            let v = match (i, j) {
                (0, 0) => c,
                (0, _) => c + go(0, j - 1, a, b, memo),
                (_, 0) => c + go(i - 1, 0, a, b, memo),
                _ => {
                    let d = go(i - 1, j - 1, a, b, memo);
                    let u = go(i - 1, j, a, b, memo);
                    let l = go(i, j - 1, a, b, memo);
                    c + d.min(u).min(l)
                }
            };
            memo.insert((i, j), v);
            v
        }
        go(a.len() - 1, b.len() - 1, a, b, &mut HashMap::new())
    }

    fn seq(max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..=max_len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_recursive_oracle(a in seq(32), b in seq(32)) {
            let d = dtw_distance(&a, &b, &DtwConfig::default()).unwrap();
            prop_assert_eq!(d.cost, oracle(&a, &b));
        }

        #[test]
        fn symmetric(a in seq(16), b in seq(16)) {
            let ab = dtw_distance(&a, &b, &DtwConfig::default()).unwrap().cost;
            let ba = dtw_distance(&b, &a, &DtwConfig::default()).unwrap().cost;
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn self_distance_is_zero(a in seq(20)) {
            prop_assert_eq!(dtw_distance(&a, &a, &DtwConfig::default()).unwrap().cost, 0.0);
        }

        #[test]
        fn repeating_last_element_costs_at_most_its_match(a in seq(12), b in seq(12)) {
            let before = dtw_distance(&a, &b, &DtwConfig::default()).unwrap().cost;
            let mut b2 = b.clone();
            b2.push(b[b.len() - 1].clone());
            let after = dtw_distance(&a, &b2, &DtwConfig::default()).unwrap().cost;
            let step = LocalCost::Euclidean.eval(&a[a.len() - 1], &b[b.len() - 1]);
            prop_assert!(after <= before + step + 1e-12);
        }
    }

    fn matrix(role: FeatureRole, rows: Vec<Vec<f64>>, label: Option<MatrixLabel>) -> FeatureMatrix {
        let n = rows.len();
        FeatureMatrix {
            role,
            rows,
            window_starts: (0..n).map(|i| i as f64).collect(),
            window_s: 10.0,
            step_s: 1.0,
            label,
            hrv_missing: vec![false; n],
        }
    }

    fn videos() -> Vec<FeatureMatrix> {
        Affect::ALL
            .into_iter()
            .map(|a| {
                let mut v = vec![0.0; 3];
                v[a.index() % 3] = 1.0 + a.index() as f64;
                matrix(FeatureRole::Video, vec![v], Some(MatrixLabel::Affect(a)))
            })
            .collect()
    }

    #[test]
    fn match_shapes_and_self_match() {
        let vids = videos();
        let mut rows: Vec<Vec<f64>> = (0..111).map(|i| vec![i as f64 * 0.01, 0.5, 0.2]).collect();
        rows[5] = vids[3].rows[0].clone();
        let sliding = matrix(FeatureRole::Sliding, rows.clone(), None);
        let whole = matrix(FeatureRole::Whole, vec![vec![0.5, 0.5, 0.5]], None);
        for scaling in [MatchScaling::Shared, MatchScaling::PerColumn] {
            let cfg = MatchConfig { scaling, ..MatchConfig::default() };
            let (vm, wm) = build_match_sequences(&sliding, &vids, &whole, &cfg).unwrap();
            assert_eq!((vm.len(), vm.width()), (111, 7));
            assert_eq!((wm.len(), wm.width()), (111, 1));
            assert_eq!(vm.rows[5][3], 0.0);
            assert!(vm.rows.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn identical_windows_give_constant_columns() {
        let sliding = matrix(FeatureRole::Sliding, vec![vec![0.3, 0.3, 0.3]; 20], None);
        let whole = matrix(FeatureRole::Whole, vec![vec![0.0, 1.0, 0.0]], None);
        let (vm, wm) =
            build_match_sequences(&sliding, &videos(), &whole, &MatchConfig::default()).unwrap();
        assert!(vm.constant_columns.iter().all(|&c| c));
        assert!(wm.constant_columns[0]);
        assert!(vm.rows.iter().chain(&wm.rows).flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn missing_inputs_rejected() {
        let sliding = matrix(FeatureRole::Sliding, vec![vec![0.0; 3]], None);
        let whole = matrix(FeatureRole::Whole, vec![vec![0.0; 3]], None);
        let cfg = MatchConfig::default();
        assert!(matches!(build_match_sequences(&sliding, &[], &whole, &cfg), Err(Error::NoVideos)));
        let partial = &videos()[..6];
        assert!(matches!(
            build_match_sequences(&sliding, partial, &whole, &cfg),
            Err(Error::MissingAffect("regret"))
        ));
        assert!(matches!(
            build_match_sequences(&whole, &videos(), &whole, &cfg),
            Err(Error::WrongRole { .. })
        ));
    }
}
