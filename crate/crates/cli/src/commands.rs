use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use guxas_core::dtw::build_match_sequences;
use guxas_core::gut::Gut;
use guxas_core::labeler::{fit, label_session, ExperienceTimeline};
use guxas_core::metric::{read_game_records, run_variant, write_game_records, GamePlayRecord, GutModel, Metrics, Variant};
use guxas_core::physio::io::{
    read_feature_csv, read_record, read_video_list, write_feature_csv, write_manifest, VideoEntry,
};
use guxas_core::physio::{featurize_all, featurize_session, window_centres, FeatureMatrix, FeatureRole};
use guxas_core::synth::{assign_times, generate_game_records, generate_physio, truth_timeline, ScenarioConfig};
use serde::Serialize;

use crate::config::{resolve, PipelineConfig};
use crate::report::{experience_curve_svg, trajectory_svg, write_affect_heatmap};
use crate::TrainMode;

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text.as_bytes())
}

fn csv_bytes<E>(f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<Vec<u8>>
where
    anyhow::Error: From<E>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_timeline(path: &Path, cfg: &PipelineConfig) -> Result<ExperienceTimeline> {
    ExperienceTimeline::read_csv(open(path)?, &path.display().to_string(), &cfg.labeler.valence, &cfg.gut)
        .with_context(|| format!("reading timeline {}", path.display()))
}

fn read_games(path: &Path) -> Result<Vec<GamePlayRecord>> {
    read_game_records(open(path)?).with_context(|| format!("reading game records {}", path.display()))
}

pub fn config(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let path = out.join("config.json");
    write_json(&path, cfg)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Drops schedule intervals past `duration_s` and cuts the ones crossing it.
fn clip(mut s: ScenarioConfig, duration_s: f64) -> ScenarioConfig {
    s.duration_s = duration_s;
    s.affects.retain(|iv| iv.start_s < duration_s);
    for iv in &mut s.affects {
        iv.end_s = iv.end_s.min(duration_s);
    }
    s.flow.retain(|iv| iv.start_s < duration_s);
    for iv in &mut s.flow {
        iv.end_s = iv.end_s.min(duration_s);
    }
    s
}

pub fn synth(cfg: &PipelineConfig, out: &Path, duration: Option<f64>, records: Option<usize>) -> Result<()> {
    let mut scenario = cfg.synth.scenario.clone();
    if let Some(d) = duration {
        if !(d > 0.0 && d.is_finite()) {
            bail!("configuration error: duration must be positive, got {d}");
        }
        scenario = clip(scenario, d);
    }
    let n = records.unwrap_or(cfg.synth.records);
    let physio = generate_physio(&scenario).context("generating physiological session")?;

    let manifest = write_manifest(&out.join("session"), &physio.session)?;
    let mut entries = Vec::new();
    let mut counter = [0usize; 7];
    for (a, rec) in &physio.videos {
        let k = counter[a.index()];
        counter[a.index()] += 1;
        let rel = format!("videos/{a}-{k}");
        write_manifest(&out.join(&rel), rec)?;
        entries.push(VideoEntry { affect: *a, record: format!("{rel}/manifest.json") });
    }
    write_json(&out.join("videos.json"), &entries)?;

    let times = match cfg.physio.windowing.window_count(scenario.duration_s) {
        Ok(k) => (0..k)
            .map(|i| i as f64 * cfg.physio.windowing.step_s + 0.5 * cfg.physio.windowing.window_s)
            .collect(),
        Err(_) => Vec::new(),
    };
    let truth = truth_timeline(&scenario, &times, &cfg.labeler.valence, &cfg.gut)?;
    write(&out.join("truth_timeline.csv"), &csv_bytes(|b| truth.write_csv(b))?)?;

    let mut games = generate_game_records(&scenario, n).context("generating game records")?;
    assign_times(&mut games, &truth, scenario.seed);
    let mut game_json = Vec::new();
    write_game_records(&mut game_json, &games)?;
    game_json.push(b'\n');
    write(&out.join("game.json"), &game_json)?;
    write_json(&out.join("scenario.json"), &scenario)?;

    println!(
        "session {} ({} s) -> {}; {} videos; {} game records; {} truth seconds",
        scenario.session_id,
        scenario.duration_s,
        manifest.display(),
        entries.len(),
        games.len(),
        truth.records.len()
    );
    Ok(())
}

pub fn extract(cfg: &PipelineConfig, out: &Path, session: Option<PathBuf>, videos: Option<PathBuf>) -> Result<()> {
    let session_path = resolve(session, &cfg.paths.session, "session")?;
    let raw = read_record(&session_path).with_context(|| format!("reading session {}", session_path.display()))?;
    let video_path = match videos.or_else(|| cfg.paths.videos.clone()) {
        Some(p) => Some(resolve(Some(p), &None, "videos")?),
        None => None,
    };
    let (sliding, whole, video_rows, zero_variance) = match &video_path {
        Some(p) => {
            let list = read_video_list(p).with_context(|| format!("reading video list {}", p.display()))?;
            if list.is_empty() {
                bail!("configuration error: video list {} is empty", p.display());
            }
            let f = featurize_all(&raw, &list, &cfg.physio)
                .with_context(|| format!("extracting features from {}", session_path.display()))?;
            (f.sliding, f.whole, Some(f.videos), f.zero_variance)
        }
        None => {
            let (s, w, _, z) = featurize_session(&raw, &cfg.physio)
                .with_context(|| format!("extracting features from {}", session_path.display()))?;
            (s, w, None, z)
        }
    };
    for c in &zero_variance {
        eprintln!("warning: channel {c} has zero variance; its features are zero");
    }
    let missing = sliding.hrv_missing.iter().filter(|m| **m).count();
    if missing > 0 {
        eprintln!("warning: {missing} windows have no RR intervals; their HRV features are zero");
    }
    write(&out.join("sliding.csv"), &csv_bytes(|b| write_feature_csv(b, std::slice::from_ref(&sliding)))?)?;
    write(&out.join("whole.csv"), &csv_bytes(|b| write_feature_csv(b, std::slice::from_ref(&whole)))?)?;
    if let Some(v) = &video_rows {
        write(&out.join("videos.csv"), &csv_bytes(|b| write_feature_csv(b, v))?)?;
    }
    println!(
        "{} sliding windows, {} video rows -> {}",
        sliding.len(),
        video_rows.as_ref().map_or(0, Vec::len),
        out.display()
    );
    Ok(())
}

fn read_features(path: &Path, role: FeatureRole, cfg: &PipelineConfig) -> Result<Vec<FeatureMatrix>> {
    let w = &cfg.physio.windowing;
    read_feature_csv(open(path)?, &path.display().to_string(), role, w.window_s, w.step_s)
        .with_context(|| format!("reading features {}", path.display()))
}

pub fn label(cfg: &PipelineConfig, out: &Path, features: Option<PathBuf>, videos: Option<PathBuf>) -> Result<()> {
    let dir = features.or_else(|| cfg.paths.features.clone()).unwrap_or_else(|| out.to_path_buf());
    let sliding_path = resolve(Some(dir.join("sliding.csv")), &None, "features")?;
    let whole_path = resolve(Some(dir.join("whole.csv")), &None, "features")?;
    let video_path = resolve(Some(videos.unwrap_or_else(|| dir.join("videos.csv"))), &None, "videos")?;

    let text = std::fs::read_to_string(&video_path).with_context(|| format!("reading {}", video_path.display()))?;
    if text.lines().skip(1).all(|l| l.trim().is_empty()) {
        bail!("configuration error: video list {} is empty", video_path.display());
    }
    let sliding = read_features(&sliding_path, FeatureRole::Sliding, cfg)?.remove(0);
    let whole = read_features(&whole_path, FeatureRole::Whole, cfg)?.remove(0);
    let videos = read_features(&video_path, FeatureRole::Video, cfg)?;

    let (vm, wm) = build_match_sequences(&sliding, &videos, &whole, &cfg.matching).context("matching windows")?;
    let (model, history) = fit(&vm, &wm, &cfg.labeler).context("training labeler")?;
    let times = window_centres(&sliding);
    let timeline = label_session(&model.network, &vm, &wm, &times, &cfg.labeler, &cfg.gut)?;

    write(&out.join("timeline.csv"), &csv_bytes(|b| timeline.write_csv(b))?)?;
    write_json(&out.join("labeler_model.json"), &model)?;
    let counts = timeline.records.iter().fold([0usize; 3], |mut c, r| {
        c[r.gut.index()] += 1;
        c
    });
    println!(
        "labeler loss {:.4} -> {:.4} in {} steps; X1 {} X2 {}; GUT counts {:?}",
        model.initial_loss,
        model.final_loss,
        history.losses.len() - 1,
        fmt_corr(model.x1),
        fmt_corr(model.x2),
        counts
    );
    Ok(())
}

fn fmt_corr(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    model: &'a str,
    train_records: usize,
    test_records: usize,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

/// Fills missing labels from the timeline and drops records left unlabeled.
fn labeled(mut records: Vec<GamePlayRecord>, timeline: Option<&ExperienceTimeline>) -> Vec<GamePlayRecord> {
    for r in &mut records {
        if r.gut_label.is_none() {
            r.gut_label = match (r.t, timeline) {
                (Some(t), Some(tl)) => tl.gut_at(t),
                _ => None,
            };
        }
    }
    records.retain(|r| r.gut_label.is_some());
    records
}

pub fn train(
    cfg: &PipelineConfig,
    out: &Path,
    game: Option<PathBuf>,
    timeline: Option<PathBuf>,
    mode: TrainMode,
) -> Result<()> {
    let game_path = resolve(game, &cfg.paths.game, "game")?;
    let all = read_games(&game_path)?;
    let tl = match timeline.or_else(|| cfg.paths.timeline.clone()) {
        Some(p) => Some(read_timeline(&resolve(Some(p), &None, "timeline")?, cfg)?),
        None => None,
    };
    let total = all.len();
    let records = labeled(all, tl.as_ref());
    if records.len() < total {
        eprintln!("warning: {} of {total} records have no label and were skipped", total - records.len());
    }
    if records.is_empty() {
        bail!("no labeled records in {}", game_path.display());
    }
    let variants: &[Variant] = match mode {
        TrainMode::Siamese => &[Variant::SiamesePe],
        TrainMode::Baseline => &[Variant::Fc, Variant::FcPe],
        TrainMode::Compare => &Variant::ALL,
    };
    let mut reports = Vec::new();
    for &v in variants {
        let r = run_variant(&records, v, &cfg.metric).with_context(|| format!("training {}", v.label()))?;
        println!(
            "{:<16} ACC {:.2}%  precision {:.2}%  recall {:.2}%  F1 {:.2}%",
            v.label(),
            100.0 * r.metrics.accuracy,
            100.0 * r.metrics.precision,
            100.0 * r.metrics.recall,
            100.0 * r.metrics.f1
        );
        reports.push((v, r));
    }
    let (variant, primary) = reports.last().expect("at least one variant");
    write_json(&out.join("model.json"), &primary.model)?;
    let file = MetricsFile {
        model: variant.label(),
        train_records: primary.train_indices.len(),
        test_records: primary.test_indices.len(),
        metrics: &primary.metrics,
    };
    write_json(&out.join("metrics.json"), &file)?;
    write(&out.join("metrics.csv"), &csv_bytes(|b| primary.metrics.write_csv(b, variant.label()))?)?;
    if mode != TrainMode::Siamese {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "acc_pct", "precision_pct", "recall_pct", "f1_pct"])?;
        for (v, r) in &reports {
            let m = &r.metrics;
            let pct = |x: f64| format!("{:.2}", 100.0 * x);
            w.write_record([v.label().to_string(), pct(m.accuracy), pct(m.precision), pct(m.recall), pct(m.f1)])?;
        }
        write(&out.join("comparison.csv"), &w.into_inner()?)?;
    }
    Ok(())
}

pub fn predict(cfg: &PipelineConfig, out: &Path, model: Option<PathBuf>, game: Option<PathBuf>) -> Result<()> {
    let model_path = resolve(model, &cfg.paths.model, "model")?;
    let model: GutModel = serde_json::from_reader(open(&model_path)?)
        .with_context(|| format!("reading model {}", model_path.display()))?;
    let game_path = resolve(game, &cfg.paths.game, "game")?;
    let records = read_games(&game_path)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "t", "predicted", "label"])?;
    let (mut hits, mut labeled) = (0, 0);
    for (i, r) in records.iter().enumerate() {
        let g = model.predict_record(r).with_context(|| format!("record {i}"))?;
        if let Some(l) = r.gut_label {
            labeled += 1;
            hits += usize::from(l == g);
        }
        w.write_record([
            i.to_string(),
            r.t.map(|t| format!("{t}")).unwrap_or_default(),
            g.to_string(),
            r.gut_label.map(|l| l.to_string()).unwrap_or_default(),
        ])?;
    }
    write(&out.join("predictions.csv"), &w.into_inner()?)?;
    if labeled > 0 {
        println!("{} records; accuracy on labeled records {:.2}%", records.len(), 100.0 * hits as f64 / labeled as f64);
    } else {
        println!("{} records predicted", records.len());
    }
    Ok(())
}

pub fn report(cfg: &PipelineConfig, out: &Path, timeline: Option<PathBuf>, game: Option<PathBuf>) -> Result<()> {
    let tl_path = resolve(timeline, &cfg.paths.timeline, "timeline")?;
    let tl = read_timeline(&tl_path, cfg)?;
    write(&out.join("experience_curve.svg"), experience_curve_svg(&tl, &cfg.report).as_bytes())?;
    write(&out.join("affect_heatmap.csv"), &csv_bytes(|b| write_affect_heatmap(b, &tl))?)?;

    let traj = out.join("trajectory.svg");
    let svg = match game.or_else(|| cfg.paths.game.clone()) {
        Some(p) => {
            let p = resolve(Some(p), &None, "game")?;
            let svg = trajectory_svg(&read_games(&p)?, &tl, &cfg.report);
            if svg.is_none() {
                eprintln!("notice: no hero_path in {}; trajectory omitted", p.display());
            }
            svg
        }
        None => {
            eprintln!("notice: no game records given; trajectory omitted");
            None
        }
    };
    match svg {
        Some(s) => write(&traj, s.as_bytes())?,
        None if traj.exists() => {
            std::fs::remove_file(&traj).with_context(|| format!("removing stale {}", traj.display()))?
        }
        None => {}
    }
    let counts = tl.records.iter().fold([0usize; 3], |mut c, r| {
        c[r.gut.index()] += 1;
        c
    });
    println!(
        "{} seconds: GUT 2 {}, GUT 1 {}, GUT 0 {} -> {}",
        tl.records.len(),
        counts[Gut::Best.index()],
        counts[Gut::Good.index()],
        counts[Gut::Average.index()],
        out.display()
    );
    Ok(())
}
