//! File formats: session CSVs, per-channel manifests, and feature CSVs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{feature_names, Channel, FeatureMatrix, FeatureRole, MatrixLabel, PhysioRecord, Signal};
use crate::affect::Affect;
use crate::error::{Error, Result};

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn parse_f64(field: &str, location: impl Fn() -> String) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(location(), format!("`{field}` is not a number: {e}")))
}

/// Reads a single-rate session CSV with header `t,<channel>,...`. The sample
/// rate is inferred from the `t` column and `start_time` is its first value.
pub fn read_session_csv<R: Read>(reader: R, name: &str, session_id: &str) -> Result<PhysioRecord> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("t") {
        return Err(parse_err(format!("{name}:1"), "first column must be `t`"));
    }
    let mut channels = Vec::new();
    for h in headers.iter().skip(1) {
        let c: Channel = h.parse().map_err(|e: String| parse_err(format!("{name}:1"), e))?;
        channels.push(c);
    }
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let loc = || format!("{name}:{line}");
        if rec.len() != headers.len() {
            return Err(parse_err(loc(), format!("expected {} fields, got {}", headers.len(), rec.len())));
        }
        times.push(parse_f64(&rec[0], loc)?);
        for (col, field) in columns.iter_mut().zip(rec.iter().skip(1)) {
            col.push(parse_f64(field, loc)?);
        }
    }
    if times.len() < 2 {
        return Err(parse_err(name, "need at least two rows to infer the sample rate"));
    }
    let span = times[times.len() - 1] - times[0];
    let rate = (times.len() - 1) as f64 / span;
    let mut out = PhysioRecord::new(session_id, times[0]);
    for (c, col) in channels.into_iter().zip(columns) {
        out.channels.insert(c, Signal::new(rate, col));
    }
    out.validate()?;
    Ok(out)
}

pub fn write_session_csv<W: Write>(writer: W, rec: &PhysioRecord) -> Result<()> {
    let rate = rec.channels.values().next().map(|s| s.rate_hz).unwrap_or(1.0);
    if rec.channels.values().any(|s| s.rate_hz != rate) {
        return Err(Error::InvalidParameter(
            "single-table CSV needs every channel at one rate; use a manifest".into(),
        ));
    }
    let n = rec.channels.values().map(|s| s.samples.len()).min().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(rec.channels.keys().map(|c| c.to_string()));
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![format!("{}", rec.start_time + i as f64 / rate)];
        row.extend(rec.channels.values().map(|s| format!("{}", s.samples[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub file: String,
    pub rate_hz: f64,
}

/// Maps each channel to a native-rate CSV file, relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub session_id: String,
    #[serde(default)]
    pub start_time: f64,
    pub channels: BTreeMap<Channel, ChannelFile>,
}

fn read_channel_csv(path: &Path) -> Result<Vec<f64>> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| parse_err(&name, e.to_string()))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.iter().last().unwrap_or("");
        out.push(parse_f64(field, || format!("{name}:{}", i + 2))?);
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<PhysioRecord> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut rec = PhysioRecord::new(manifest.session_id, manifest.start_time);
    for (c, cf) in manifest.channels {
        let samples = read_channel_csv(&dir.join(&cf.file))?;
        rec.channels.insert(c, Signal::new(cf.rate_hz, samples));
    }
    rec.validate()?;
    Ok(rec)
}

/// Writes `manifest.json` plus one `<channel>.csv` per channel into `dir`.
pub fn write_manifest(dir: &Path, rec: &PhysioRecord) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut channels = BTreeMap::new();
    for (&c, s) in &rec.channels {
        let file = format!("{c}.csv");
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        w.write_record([c.name()])?;
        for x in &s.samples {
            w.write_record([format!("{x}")])?;
        }
        w.flush()?;
        channels.insert(c, ChannelFile { file, rate_hz: s.rate_hz });
    }
    let manifest =
        Manifest { session_id: rec.session_id.clone(), start_time: rec.start_time, channels };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

/// Loads a record from a manifest (`.json`) or a single-table CSV.
pub fn read_record(path: &Path) -> Result<PhysioRecord> {
    if path.extension().is_some_and(|e| e == "json") {
        return read_manifest(path);
    }
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| parse_err(&name, e.to_string()))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_session_csv(file, &name, &id)
}

/// One affect-eliciting video recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub affect: Affect,
    /// Path to the recording, relative to the list file.
    pub record: String,
}

pub fn read_video_list(path: &Path) -> Result<Vec<(Affect, PhysioRecord)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    let entries: Vec<VideoEntry> = serde_json::from_str(&text)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    entries.into_iter().map(|e| Ok((e.affect, read_record(&dir.join(&e.record))?))).collect()
}

/// Writes a feature matrix as CSV: `window_start_s` then the 66 named features.
/// Video matrices get a leading `affect` column.
pub fn write_feature_csv<W: Write>(writer: W, matrices: &[FeatureMatrix]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let with_affect = matrices.iter().any(|m| m.role == FeatureRole::Video);
    let mut header = Vec::new();
    if with_affect {
        header.push("affect".to_string());
    }
    header.push("window_start_s".to_string());
    header.extend(feature_names());
    w.write_record(&header)?;
    for m in matrices {
        for (start, row) in m.window_starts.iter().zip(&m.rows) {
            let mut out = Vec::with_capacity(header.len());
            if with_affect {
                out.push(m.affect().map(|a| a.name().to_string()).unwrap_or_default());
            }
            out.push(format!("{start}"));
            out.extend(row.iter().map(|x| format!("{x}")));
            w.write_record(&out)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature CSV. Sliding files yield one matrix; video files yield one
/// single-row matrix per line, labeled with its affect.
pub fn read_feature_csv<R: Read>(
    reader: R,
    name: &str,
    role: FeatureRole,
    window_s: f64,
    step_s: f64,
) -> Result<Vec<FeatureMatrix>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let with_affect = headers.get(0) == Some("affect");
    let offset = usize::from(with_affect) + 1;
    let names = feature_names();
    if headers.len() != offset + names.len()
        || headers.iter().skip(offset).zip(&names).any(|(h, n)| h != n)
        || headers.get(offset - 1) != Some("window_start_s")
    {
        return Err(parse_err(format!("{name}:1"), "unexpected feature header"));
    }
    let empty = |label| FeatureMatrix {
        role,
        rows: Vec::new(),
        window_starts: Vec::new(),
        window_s,
        step_s,
        label,
        hrv_missing: Vec::new(),
    };
    let mut out: Vec<FeatureMatrix> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let loc = || format!("{name}:{line}");
        let mut values = Vec::with_capacity(rec.len());
        for field in rec.iter().skip(offset - 1) {
            values.push(parse_f64(field, loc)?);
        }
        let start = values.remove(0);
        let hrv_missing = values[60..].iter().all(|&x| x == 0.0);
        let m = if with_affect {
            let affect: Affect = rec[0].parse().map_err(|e: String| parse_err(loc(), e))?;
            out.push(empty(Some(MatrixLabel::Affect(affect))));
            out.last_mut().expect("just pushed")
        } else {
            if out.is_empty() {
                out.push(empty(None));
            }
            &mut out[0]
        };
        m.rows.push(values);
        m.window_starts.push(start);
        m.hrv_missing.push(hrv_missing);
    }
    if out.is_empty() {
        return Err(parse_err(name, "no feature rows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physio::{extract_features, Windowing};

    fn demo_record() -> PhysioRecord {
        let mut rec = PhysioRecord::new("demo", 0.0);
        for (k, c) in Channel::ALL.into_iter().enumerate() {
            let xs = (0..120).map(|i| ((i * (k + 3)) % 11) as f64 * 0.5).collect();
            rec.channels.insert(c, Signal::new(10.0, xs));
        }
        rec
    }

    #[test]
    fn session_csv_round_trip() {
        let rec = demo_record();
        let mut buf = Vec::new();
        write_session_csv(&mut buf, &rec).unwrap();
        let back = read_session_csv(buf.as_slice(), "mem", "demo").unwrap();
        assert_eq!(back.channels.len(), 10);
        for (c, s) in &rec.channels {
            assert_eq!(back.channels[c].samples, s.samples);
            assert!((back.channels[c].rate_hz - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_cell_reports_line() {
        let text = "t,gsr\n0,1\n0.1,oops\n";
        let err = read_session_csv(text.as_bytes(), "s.csv", "s").unwrap_err();
        assert!(err.to_string().contains("s.csv:3"), "{err}");
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = demo_record();
        rec.channels.get_mut(&Channel::Ecg).unwrap().rate_hz = 182.0;
        let path = write_manifest(dir.path(), &rec).unwrap();
        assert_eq!(read_record(&path).unwrap(), rec);
    }

    #[test]
    fn feature_csv_round_trip() {
        let m = extract_features(&demo_record(), None, FeatureRole::Sliding, &Windowing::default())
            .unwrap();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, std::slice::from_ref(&m)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 67);
        let back = read_feature_csv(buf.as_slice(), "mem", FeatureRole::Sliding, 10.0, 1.0).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].rows, m.rows);
        assert_eq!(back[0].window_starts, m.window_starts);
    }

    #[test]
    fn video_csv_keeps_labels() {
        let m = extract_features(&demo_record(), None, FeatureRole::Video, &Windowing::default())
            .unwrap()
            .with_label(MatrixLabel::Affect(Affect::Regret));
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[m.clone(), m]).unwrap();
        let back = read_feature_csv(buf.as_slice(), "mem", FeatureRole::Video, 12.0, 12.0).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].affect(), Some(Affect::Regret));
    }
}
