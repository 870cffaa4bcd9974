//! Seeded synthetic sessions, video recordings and game records with known
//! ground truth, plus a table-driven copy of the GUT rules.

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::affect::{Affect, Valence};
use crate::error::{Error, Result};
use crate::gut::{Gut, GutParams};
use crate::labeler::{pearson, ExperienceTimeline};
use crate::metric::{GamePlayRecord, SCORE_DIM, TEAM_FIGHT_DIM};
use crate::physio::{Channel, PhysioRecord, Signal, Windowing, ECG_RATE_HZ, EEG_RATE_HZ, GSR_RATE_HZ};

/// Mixes the scenario seed into independent streams.
const GAME_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub affect: Affect,
    #[serde(default = "one")]
    pub intensity: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowInterval {
    pub start_s: f64,
    pub end_s: f64,
}

/// Signal signatures. Each affect raises the level of its own EEG channel;
/// flow raises GSR and attention, shifts the ECG baseline and steadies the
/// heart rhythm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignalConfig {
    pub eeg_rate_hz: f64,
    pub ecg_rate_hz: f64,
    pub gsr_rate_hz: f64,
    /// Level shift per unit affect intensity.
    pub affect_shift: f64,
    /// GSR and attention shift during flow.
    pub flow_shift: f64,
    pub ecg_flow_shift: f64,
    /// Standard deviation of white noise on EEG and GSR channels.
    pub noise: f64,
    pub ecg_noise: f64,
    pub r_amplitude: f64,
    /// Nominal beat-to-beat interval.
    pub rr_ms: f64,
    /// Change of the beat interval during flow, in samples.
    pub flow_rr_shift_samples: i64,
    /// Outside flow, intervals alternate ± this many samples around the
    /// nominal interval; in flow they are steady.
    pub rr_jitter_samples: usize,
    pub video_s: f64,
    pub videos_per_affect: usize,
    /// Flow-signature level in video recordings, between 0 (none) and 1 (full).
    pub video_flow_level: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            eeg_rate_hz: EEG_RATE_HZ,
            ecg_rate_hz: ECG_RATE_HZ,
            gsr_rate_hz: GSR_RATE_HZ,
            affect_shift: 1.0,
            flow_shift: 1.5,
            ecg_flow_shift: 0.05,
            noise: 0.2,
            ecg_noise: 0.01,
            r_amplitude: 1.0,
            rr_ms: 800.0,
            flow_rr_shift_samples: -1,
            rr_jitter_samples: 0,
            video_s: 35.0,
            videos_per_affect: 2,
            video_flow_level: 0.5,
        }
    }
}

/// Class-conditional Gaussian geometry of the 44-dimensional game vector
/// (11 team-fight components followed by 33 score-related ones).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameGeometry {
    pub means: [Vec<f64>; 3],
    /// Shared covariance, row-major 44 × 44.
    pub covariance: Vec<f64>,
    pub proportions: [f64; 3],
    /// Number of hero-path points per record; 0 omits paths.
    pub path_points: usize,
}

impl GameGeometry {
    /// A latent "play style" factor shifts the team-fight features along the
    /// same direction that separates the classes, so team-fight data alone
    /// confuses neighbouring classes. The score-related block carries a noisy
    /// copy of that factor in every component, which makes it recoverable.
    pub fn play_style(separation: f64, style: f64, fight_noise: f64, score_noise: f64) -> Self {
        let dim = TEAM_FIGHT_DIM + SCORE_DIM;
        let axis: Vec<f64> = (0..TEAM_FIGHT_DIM)
            .map(|_| 1.0 / (TEAM_FIGHT_DIM as f64).sqrt())
            .collect();
        let means = [-1.0, 0.0, 1.0].map(|k| {
            let mut m = vec![0.0; dim];
            for (mi, a) in m.iter_mut().zip(&axis) {
                *mi = k * separation * a;
            }
            m
        });
        // Loadings of the style factor: along the class axis in the team-fight
        // block, uniform across the score block.
        let mut load = vec![0.0; dim];
        for i in 0..TEAM_FIGHT_DIM {
            load[i] = style * axis[i];
        }
        for l in load.iter_mut().skip(TEAM_FIGHT_DIM) {
            *l = 1.0;
        }
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] = load[i] * load[j];
            }
            cov[i * dim + i] += if i < TEAM_FIGHT_DIM { fight_noise * fight_noise } else { score_noise * score_noise };
        }
        GameGeometry { means, covariance: cov, proportions: [0.15, 0.7, 0.15], path_points: 24 }
    }
}

impl Default for GameGeometry {
    fn default() -> Self {
        GameGeometry::play_style(2.0, 1.2, 0.2, 0.2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub session_id: String,
    pub duration_s: f64,
    pub affects: Vec<AffectInterval>,
    pub flow: Vec<FlowInterval>,
    pub signal: SignalConfig,
    pub game: GameGeometry,
}

impl Default for ScenarioConfig {
    /// A 900 s session, two thirds in flow. Pleasure and trust accompany every
    /// flow stretch, with occasional negative affects; the non-flow stretches
    /// carry positive and negative affects in equal share.
    fn default() -> Self {
        use Affect::*;
        let blocks: [(f64, f64, bool, &[Affect]); 9] = [
            (0.0, 60.0, false, &[Surprise]),
            (60.0, 240.0, true, &[Pleasure, Trust]),
            (240.0, 330.0, true, &[Pleasure, Trust, Disgust]),
            (330.0, 405.0, false, &[Lucky, Regret]),
            (405.0, 555.0, true, &[Pleasure, Trust]),
            (555.0, 645.0, true, &[Pleasure, Trust, Confusion]),
            (645.0, 720.0, false, &[Surprise, Confusion]),
            (720.0, 840.0, true, &[Pleasure, Trust, Regret]),
            (840.0, 900.0, false, &[Lucky]),
        ];
        ScenarioConfig::from_blocks(7, 900.0, &blocks)
    }
}

impl ScenarioConfig {
    /// Builds schedules from `(start, end, flow, affects)` blocks, merging
    /// adjacent runs of the same affect or of flow.
    pub fn from_blocks(seed: u64, duration_s: f64, blocks: &[(f64, f64, bool, &[Affect])]) -> Self {
        let mut affects: Vec<AffectInterval> = Vec::new();
        let mut flow: Vec<FlowInterval> = Vec::new();
        for &(start_s, end_s, in_flow, list) in blocks {
            for &affect in list {
                match affects.iter_mut().find(|iv| iv.affect == affect && iv.end_s == start_s) {
                    Some(iv) => iv.end_s = end_s,
                    None => affects.push(AffectInterval { start_s, end_s, affect, intensity: 1.0 }),
                }
            }
            if in_flow {
                match flow.last_mut() {
                    Some(iv) if iv.end_s == start_s => iv.end_s = end_s,
                    _ => flow.push(FlowInterval { start_s, end_s }),
                }
            }
        }
        ScenarioConfig {
            seed,
            session_id: format!("synth-{seed}"),
            duration_s,
            affects,
            flow,
            signal: SignalConfig::default(),
            game: GameGeometry::default(),
        }
    }

    /// No affects, no flow.
    pub fn empty(seed: u64, duration_s: f64) -> Self {
        ScenarioConfig::from_blocks(seed, duration_s, &[])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration {}", self.duration_s));
        }
        let within = |a: f64, b: f64| a >= 0.0 && b <= self.duration_s && a < b;
        for iv in &self.affects {
            if !within(iv.start_s, iv.end_s) {
                return bad(format!("{} interval [{}, {}) outside session", iv.affect, iv.start_s, iv.end_s));
            }
            if !(iv.intensity >= 0.0 && iv.intensity.is_finite()) {
                return bad(format!("{} intensity {}", iv.affect, iv.intensity));
            }
        }
        for iv in &self.flow {
            if !within(iv.start_s, iv.end_s) {
                return bad(format!("flow interval [{}, {}) outside session", iv.start_s, iv.end_s));
            }
        }
        let s = &self.signal;
        for (name, v) in [
            ("eeg rate", s.eeg_rate_hz),
            ("ecg rate", s.ecg_rate_hz),
            ("gsr rate", s.gsr_rate_hz),
            ("rr", s.rr_ms),
            ("video length", s.video_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if s.noise < 0.0 || s.ecg_noise < 0.0 {
            return bad("noise must be non-negative".into());
        }
        Ok(())
    }

    /// Affect intensities and flow state at time `t`.
    pub fn state_at(&self, t: f64) -> ([f64; 7], bool) {
        let mut levels = [0.0; 7];
        for iv in &self.affects {
            if t >= iv.start_s && t < iv.end_s {
                levels[iv.affect.index()] += iv.intensity;
            }
        }
        let flow = self.flow.iter().any(|iv| t >= iv.start_s && t < iv.end_s);
        (levels, flow)
    }
}

fn affect_channel(a: Affect) -> Channel {
    match a {
        Affect::Pleasure => Channel::Alpha,
        Affect::Trust => Channel::Delta,
        Affect::Lucky => Channel::Gamma,
        Affect::Surprise => Channel::HighBeta,
        Affect::Disgust => Channel::LowBeta,
        Affect::Confusion => Channel::Theta,
        Affect::Regret => Channel::Meditation,
    }
}

fn baseline(c: Channel) -> f64 {
    match c {
        Channel::Ecg => 0.0,
        Channel::Gsr => 5.0,
        Channel::Attention | Channel::Meditation => 50.0,
        _ => 10.0,
    }
}

fn noise(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

/// What drives a recording at each instant: affect levels and a flow level in [0, 1].
trait Drive {
    fn at(&self, t: f64) -> ([f64; 7], f64);
}

impl Drive for ScenarioConfig {
    fn at(&self, t: f64) -> ([f64; 7], f64) {
        let (levels, flow) = self.state_at(t);
        (levels, if flow { 1.0 } else { 0.0 })
    }
}

struct VideoDrive {
    affect: Affect,
    flow_level: f64,
}

impl Drive for VideoDrive {
    fn at(&self, _t: f64) -> ([f64; 7], f64) {
        let mut levels = [0.0; 7];
        levels[self.affect.index()] = 1.0;
        (levels, self.flow_level)
    }
}

/// Beat sample indices. Intervals are whole samples: shifted and steady at
/// full flow, alternating ± jitter without flow, and in proportion between.
fn beats(drive: &dyn Drive, s: &SignalConfig, n: usize) -> Vec<usize> {
    let rate = s.ecg_rate_hz;
    let nominal = (s.rr_ms / 1000.0 * rate).round() as i64;
    let mut out = Vec::new();
    let mut pos = (0.3 * rate).round() as i64;
    let mut sign = 1;
    while (pos as usize) < n {
        out.push(pos as usize);
        let (_, flow) = drive.at(pos as f64 / rate);
        let jitter = ((1.0 - flow) * s.rr_jitter_samples as f64).round() as i64;
        let shift = (flow * s.flow_rr_shift_samples as f64).round() as i64;
        pos += (nominal + shift + sign * jitter).max(1);
        sign = -sign;
    }
    out
}

fn render(drive: &dyn Drive, id: &str, duration_s: f64, s: &SignalConfig, rng: &mut ChaCha8Rng) -> (PhysioRecord, Vec<f64>) {
    let mut rec = PhysioRecord::new(id, 0.0);
    for c in Channel::ALL {
        let rate = match c {
            Channel::Ecg => s.ecg_rate_hz,
            Channel::Gsr => s.gsr_rate_hz,
            _ => s.eeg_rate_hz,
        };
        let n = (duration_s * rate).round() as usize;
        let mut xs = Vec::with_capacity(n);
        for i in 0..n {
            let (levels, flow) = drive.at(i as f64 / rate);
            let mut v = baseline(c);
            match c {
                Channel::Ecg => v += s.ecg_flow_shift * flow + noise(rng, s.ecg_noise),
                Channel::Gsr | Channel::Attention => v += s.flow_shift * flow + noise(rng, s.noise),
                _ => v += noise(rng, s.noise),
            }
            for a in Affect::ALL {
                if affect_channel(a) == c {
                    v += s.affect_shift * levels[a.index()];
                }
            }
            xs.push(v);
        }
        rec.channels.insert(c, Signal::new(rate, xs));
    }
    let ecg = rec.channels.get_mut(&Channel::Ecg).expect("rendered above");
    let idx = beats(drive, s, ecg.samples.len());
    for &i in &idx {
        ecg.samples[i] += s.r_amplitude;
    }
    let times = idx.iter().map(|&i| i as f64 / s.ecg_rate_hz).collect();
    (rec, times)
}

/// A generated session with its video recordings and ground truth.
#[derive(Debug, Clone)]
pub struct SynthPhysio {
    pub session: PhysioRecord,
    pub videos: Vec<(Affect, PhysioRecord)>,
    /// Ground truth at the centre of every default sliding window.
    pub truth: ExperienceTimeline,
    /// True R-peak times of the session, seconds.
    pub beat_times: Vec<f64>,
}

pub fn generate_physio(cfg: &ScenarioConfig) -> Result<SynthPhysio> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (session, beat_times) = render(cfg, &cfg.session_id, cfg.duration_s, &cfg.signal, &mut rng);
    let mut videos = Vec::new();
    for a in Affect::ALL {
        for k in 0..cfg.signal.videos_per_affect {
            let drive = VideoDrive { affect: a, flow_level: cfg.signal.video_flow_level };
            let id = format!("{}-{}-{k}", cfg.session_id, a.name());
            let (rec, _) = render(&drive, &id, cfg.signal.video_s, &cfg.signal, &mut rng);
            videos.push((a, rec));
        }
    }
    let win = Windowing::default();
    let times: Vec<f64> = match win.window_count(cfg.duration_s) {
        Ok(n) => (0..n).map(|k| k as f64 * win.step_s + 0.5 * win.window_s).collect(),
        Err(_) => Vec::new(),
    };
    let truth = truth_timeline(cfg, &times, &Valence::default(), &GutParams::default())?;
    Ok(SynthPhysio { session, videos, truth, beat_times })
}

/// Binary ground truth at the given instants, classified with [`oracle_gut`].
pub fn truth_timeline(
    cfg: &ScenarioConfig,
    times: &[f64],
    valence: &Valence,
    params: &GutParams,
) -> Result<ExperienceTimeline> {
    let states: Vec<([f64; 7], bool)> = times.iter().map(|&t| cfg.state_at(t)).collect();
    let probs: Vec<[f64; 7]> =
        states.iter().map(|(l, _)| l.map(|v| if v > 0.0 { 1.0 } else { 0.0 })).collect();
    let flow: Vec<f64> = states.iter().map(|&(_, f)| if f { 1.0 } else { 0.0 }).collect();
    let share = |p: &[f64; 7], positive: bool| {
        let set: Vec<Affect> = if positive { valence.positive() } else { valence.negative() };
        set.iter().map(|a| p[a.index()]).sum::<f64>() / set.len() as f64
    };
    let pa: Vec<f64> = probs.iter().map(|p| share(p, true)).collect();
    let na: Vec<f64> = probs.iter().map(|p| share(p, false)).collect();
    let x1 = if times.len() >= 2 { pearson(&pa, &flow).ok() } else { None };
    let x2 = if times.len() >= 2 { pearson(&na, &flow).ok() } else { None };
    let mut tl = ExperienceTimeline::from_probabilities(times, &probs, &flow, 0.5, x1, x2, valence, params)?;
    for r in &mut tl.records {
        r.gut = oracle_gut(r.flow, r.delta, tl.x1);
    }
    Ok(tl)
}

/// The GUT rules written out as a lookup over (flow, δ = 0, X1 ≥ 0.6).
pub fn oracle_gut(flow: bool, delta: i32, x1: f64) -> Gut {
    const TABLE: [((bool, bool, bool), Gut); 8] = [
        ((false, false, false), Gut::Average),
        ((false, false, true), Gut::Average),
        ((false, true, false), Gut::Average),
        ((false, true, true), Gut::Average),
        ((true, false, false), Gut::Good),
        ((true, false, true), Gut::Good),
        ((true, true, false), Gut::Good),
        ((true, true, true), Gut::Best),
    ];
    let key = (flow, delta == 0, x1 >= 0.6);
    TABLE.iter().find(|(k, _)| *k == key).map(|&(_, g)| g).expect("table covers every key")
}

/// Draws `n` labeled game records. Class counts follow the configured
/// proportions by largest remainder, with at least one record per class.
pub fn generate_game_records(cfg: &ScenarioConfig, n: usize) -> Result<Vec<GamePlayRecord>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 game records, got {n}")));
    }
    let g = &cfg.game;
    let dim = TEAM_FIGHT_DIM + SCORE_DIM;
    if g.covariance.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, got: g.covariance.len() });
    }
    for m in &g.means {
        if m.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: m.len() });
        }
    }
    if g.proportions.iter().any(|p| !(*p >= 0.0)) || g.proportions.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("class proportions must be non-negative".into()));
    }
    let cov = DMatrix::from_row_slice(dim, dim, &g.covariance);
    let chol = cov.cholesky().ok_or(Error::DegenerateCovariance(0))?;
    let l = chol.l();

    let counts = class_counts(&g.proportions, n);
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ GAME_STREAM);
    labels.shuffle(&mut rng);

    let mut out = Vec::with_capacity(n);
    for (i, &c) in labels.iter().enumerate() {
        let z = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
        let x = &l * z + DVector::from_column_slice(&g.means[c]);
        let v: Vec<f64> = x.iter().copied().collect();
        let path = (g.path_points > 0).then(|| hero_path(&mut rng, c, g.path_points, i));
        out.push(GamePlayRecord {
            team_fight: v[..TEAM_FIGHT_DIM].to_vec(),
            score_related: v[TEAM_FIGHT_DIM..].to_vec(),
            hero_path: path,
            gut_label: Gut::from_index(c),
            t: None,
        });
    }
    Ok(out)
}

/// Largest-remainder allocation of `n` items over `weights`; a class left
/// empty takes one item from the largest.
pub fn class_counts(weights: &[f64; 3], n: usize) -> [usize; 3] {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = (e + 1e-9).floor() as usize;
    }
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (exact[b] - counts[b] as f64).total_cmp(&(exact[a] - counts[a] as f64)).then(a.cmp(&b)));
    for &c in &order {
        if left == 0 {
            break;
        }
        counts[c] += 1;
        left -= 1;
    }
    for c in 0..3 {
        if counts[c] == 0 {
            let big = (0..3).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).expect("three classes");
            counts[big] -= 1;
            counts[c] += 1;
        }
    }
    counts
}

/// A short random walk; calmer classes wander less.
fn hero_path(rng: &mut ChaCha8Rng, class: usize, points: usize, index: usize) -> Vec<(f64, f64, f64)> {
    let step = [2.0, 4.0, 6.0][class];
    let mut x = rng.random_range(10.0..90.0);
    let mut y = rng.random_range(10.0..90.0);
    let t0 = index as f64 * 30.0;
    (0..points)
        .map(|k| {
            x = (x + noise(rng, step)).clamp(0.0, 100.0);
            y = (y + noise(rng, step)).clamp(0.0, 100.0);
            (t0 + k as f64, x, y)
        })
        .collect()
}

/// Gives each record a session time whose ground-truth GUT equals its label,
/// so labels can be recovered by joining on a timeline.
pub fn assign_times(records: &mut [GamePlayRecord], truth: &ExperienceTimeline, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GAME_STREAM.rotate_left(17));
    for r in records.iter_mut() {
        let Some(g) = r.gut_label else { continue };
        let candidates: Vec<f64> = truth.records.iter().filter(|x| x.gut == g).map(|x| x.t).collect();
        r.t = candidates.choose(&mut rng).copied();
    }
}

/// Accuracy of assigning each record to the nearest class mean of `geometry`.
pub fn nearest_mean_accuracy(records: &[GamePlayRecord], geometry: &GameGeometry) -> f64 {
    let mut correct = 0;
    for r in records {
        let v: Vec<f64> = r.team_fight.iter().chain(&r.score_related).copied().collect();
        let best = (0..3)
            .min_by(|&a, &b| {
                let da: f64 = v.iter().zip(&geometry.means[a]).map(|(x, m)| (x - m).powi(2)).sum();
                let db: f64 = v.iter().zip(&geometry.means[b]).map(|(x, m)| (x - m).powi(2)).sum();
                da.total_cmp(&db)
            })
            .expect("three classes");
        if r.gut_label.map(Gut::index) == Some(best) {
            correct += 1;
        }
    }
    correct as f64 / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gut::classify;
    use crate::physio::detect_r_peaks;

    fn short(seed: u64) -> ScenarioConfig {
        use Affect::*;
        let mut cfg = ScenarioConfig::from_blocks(
            seed,
            60.0,
            &[(0.0, 30.0, true, &[Pleasure, Trust]), (30.0, 60.0, false, &[Regret])],
        );
        cfg.signal.videos_per_affect = 1;
        cfg.signal.video_s = 12.0;
        cfg
    }

    #[test]
    fn empty_schedule_is_all_average() {
        let mut cfg = ScenarioConfig::empty(1, 30.0);
        cfg.signal.videos_per_affect = 0;
        let out = generate_physio(&cfg).unwrap();
        assert_eq!(out.truth.records.len(), 21);
        assert!(out.truth.guts().iter().all(|&g| g == Gut::Average));
        let gsr = &out.session.channels[&Channel::Gsr].samples;
        let mean = gsr.iter().sum::<f64>() / gsr.len() as f64;
        assert!((mean - baseline(Channel::Gsr)).abs() < 0.05);
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate_physio(&short(3)).unwrap();
        let b = generate_physio(&short(3)).unwrap();
        assert_eq!(a.session, b.session);
        assert_eq!(a.videos, b.videos);
        assert_eq!(a.truth, b.truth);
        let c = generate_physio(&short(4)).unwrap();
        assert_ne!(a.session, c.session);
    }

    #[test]
    fn detector_recovers_generated_beats() {
        let out = generate_physio(&short(5)).unwrap();
        let ecg = &out.session.channels[&Channel::Ecg];
        let rr = detect_r_peaks(&ecg.samples, ecg.rate_hz).unwrap();
        let truth: Vec<f64> = out.beat_times.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect();
        let period_ms = 1000.0 / ecg.rate_hz;
        let mut hits = 0;
        for (k, t0) in out.beat_times.iter().enumerate().take(truth.len()) {
            let found = rr.rr_onsets.iter().position(|o| (o - t0).abs() < 0.5 * period_ms / 1000.0);
            if let Some(i) = found {
                if (rr.rr_ms[i] - truth[k]).abs() <= period_ms {
                    hits += 1;
                }
            }
        }
        assert!(hits as f64 >= 0.99 * truth.len() as f64, "{hits}/{}", truth.len());
        // Nominal interval is 800 ms; beats outside flow land within one sample of it.
        let calm: Vec<f64> = out.beat_times.windows(2).filter(|w| w[0] > 31.0).map(|w| (w[1] - w[0]) * 1000.0).collect();
        assert!(calm.iter().all(|r| (r - 800.0).abs() <= period_ms));
    }

    #[test]
    fn truth_motivation_is_consistent() {
        let cfg = ScenarioConfig::default();
        let out = generate_physio(&ScenarioConfig { signal: SignalConfig { videos_per_affect: 0, ..cfg.signal }, ..cfg })
            .unwrap();
        let v = Valence::default();
        for r in &out.truth.records {
            let (pa, na) = v.counts(&r.affect_flags);
            assert_eq!(r.delta, pa as i32 - na as i32 - 2);
            assert_eq!(r.gut, classify(r.flow, r.delta, out.truth.x1));
        }
        assert!(out.truth.x1 > 0.99, "x1 = {}", out.truth.x1);
        assert!(out.truth.x2.abs() <= 0.4, "x2 = {}", out.truth.x2);
        let best = out.truth.guts().iter().filter(|&&g| g == Gut::Best).count();
        assert!(best > 100);
    }

    #[test]
    fn invalid_schedules_rejected() {
        let mut cfg = short(1);
        cfg.affects[0].end_s = 100.0;
        assert!(matches!(generate_physio(&cfg), Err(Error::InvalidSchedule(_))));
        let mut cfg = short(1);
        cfg.affects[0].intensity = -1.0;
        assert!(generate_physio(&cfg).is_err());
    }

    #[test]
    fn oracle_agrees_with_classify_everywhere() {
        for flow in [false, true] {
            for delta in -5..=5 {
                for x1 in [-1.0, 0.0, 0.59, 0.6, 0.61, 1.0] {
                    assert_eq!(oracle_gut(flow, delta, x1), classify(flow, delta, x1));
                }
            }
        }
    }

    #[test]
    fn game_records_follow_geometry() {
        let cfg = ScenarioConfig::default();
        let recs = generate_game_records(&cfg, 300).unwrap();
        assert_eq!(recs.len(), 300);
        let counts = [0, 1, 2].map(|c| recs.iter().filter(|r| r.gut_label.map(Gut::index) == Some(c)).count());
        assert_eq!(counts, [45, 210, 45]);
        assert_eq!(recs, generate_game_records(&cfg, 300).unwrap());

        let three = generate_game_records(&cfg, 3).unwrap();
        let mut labels: Vec<usize> = three.iter().map(|r| r.gut_label.unwrap().index()).collect();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn separation_controls_oracle_accuracy() {
        let mut cfg = ScenarioConfig::default();
        cfg.game = GameGeometry::play_style(12.0, 0.0, 0.3, 0.3);
        let recs = generate_game_records(&cfg, 300).unwrap();
        assert!(nearest_mean_accuracy(&recs, &cfg.game) >= 0.99);

        cfg.game = GameGeometry::play_style(0.0, 0.0, 0.3, 0.3);
        cfg.game.proportions = [1.0, 1.0, 1.0];
        let recs = generate_game_records(&cfg, 600).unwrap();
        let acc = nearest_mean_accuracy(&recs, &cfg.game);
        // All means coincide, so every record ties and goes to class 0.
        assert!((acc - 1.0 / 3.0).abs() < 0.05, "{acc}");
    }

    #[test]
    fn degenerate_covariance_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.game.covariance = vec![0.0; 44 * 44];
        assert!(matches!(generate_game_records(&cfg, 10), Err(Error::DegenerateCovariance(_))));
    }

    #[test]
    fn largest_remainder_counts() {
        assert_eq!(class_counts(&[0.15, 0.7, 0.15], 300), [45, 210, 45]);
        assert_eq!(class_counts(&[0.15, 0.7, 0.15], 3), [1, 1, 1]);
        assert_eq!(class_counts(&[1.0, 1.0, 1.0], 10).iter().sum::<usize>(), 10);
    }
}
