use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::affect::{Affect, Valence};
use crate::error::{Error, Result};
use crate::gut::{classify, motivation_delta, Gut, GutParams};

/// One labeled second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRecord {
    /// Seconds from the session start (window centre).
    pub t: f64,
    pub affect_probs: [f64; 7],
    pub affect_flags: [bool; 7],
    pub flow_prob: f64,
    pub flow: bool,
    pub pa_count: u32,
    pub na_count: u32,
    pub delta: i32,
    pub gut: Gut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceTimeline {
    pub records: Vec<TimelineRecord>,
    /// PA-flow correlation used by the GUT rules; 0 when undefined.
    pub x1: f64,
    /// NA-flow correlation; 0 when undefined.
    pub x2: f64,
    pub x1_undefined: bool,
    pub x2_undefined: bool,
}

impl ExperienceTimeline {
    /// Builds records from per-second probabilities, thresholding at `threshold`,
    /// and classifies each second with the session-level `x1`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_probabilities(
        times: &[f64],
        affect_probs: &[[f64; 7]],
        flow_probs: &[f64],
        threshold: f64,
        x1: Option<f64>,
        x2: Option<f64>,
        valence: &Valence,
        params: &GutParams,
    ) -> Result<Self> {
        if times.len() != affect_probs.len() {
            return Err(Error::LengthMismatch(times.len(), affect_probs.len()));
        }
        if times.len() != flow_probs.len() {
            return Err(Error::LengthMismatch(times.len(), flow_probs.len()));
        }
        let records = times
            .iter()
            .zip(affect_probs)
            .zip(flow_probs)
            .map(|((&t, probs), &fp)| {
                let flags = probs.map(|p| p >= threshold);
                record(t, *probs, flags, fp, fp >= threshold, x1.unwrap_or(0.0), valence, params)
            })
            .collect();
        Ok(ExperienceTimeline {
            records,
            x1: x1.unwrap_or(0.0),
            x2: x2.unwrap_or(0.0),
            x1_undefined: x1.is_none(),
            x2_undefined: x2.is_none(),
        })
    }

    pub fn guts(&self) -> Vec<Gut> {
        self.records.iter().map(|r| r.gut).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((0..7).map(|i| format!("pa{i}")));
        header.extend(["flow", "delta", "gut"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![format!("{}", r.t)];
            row.extend(r.affect_flags.iter().map(|&f| u8::from(f).to_string()));
            row.push(u8::from(r.flow).to_string());
            row.push(r.delta.to_string());
            row.push(r.gut.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV export back. Probabilities are reconstructed from the
    /// flags and session correlations are left undefined.
    pub fn read_csv<R: Read>(reader: R, name: &str, valence: &Valence, params: &GutParams) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((0..7).map(|i| format!("pa{i}")))
            .chain(["flow", "delta", "gut"].map(String::from))
            .collect();
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse { location: format!("{name}:1"), message: "unexpected timeline header".into() });
        }
        let mut records = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let loc = format!("{name}:{}", i + 2);
            let bad = |m: String| Error::Parse { location: loc.clone(), message: m };
            let t: f64 = rec[0].parse().map_err(|e| bad(format!("t: {e}")))?;
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(format!("flag must be 0 or 1, got `{other}`"))),
            };
            let mut flags = [false; 7];
            for (k, f) in flags.iter_mut().enumerate() {
                *f = flag(&rec[k + 1])?;
            }
            let flow = flag(&rec[8])?;
            let gut_raw: u8 = rec[10].parse().map_err(|e| bad(format!("gut: {e}")))?;
            let gut = Gut::try_from(gut_raw).map_err(bad)?;
            let (pa, na) = valence.counts(&flags);
            records.push(TimelineRecord {
                t,
                affect_probs: flags.map(|f| if f { 1.0 } else { 0.0 }),
                affect_flags: flags,
                flow_prob: if flow { 1.0 } else { 0.0 },
                flow,
                pa_count: pa,
                na_count: na,
                delta: motivation_delta(pa, na, params),
                gut,
            });
        }
        Ok(ExperienceTimeline { records, x1: 0.0, x2: 0.0, x1_undefined: true, x2_undefined: true })
    }

    /// GUT state at time `t`: the record whose time is nearest.
    pub fn gut_at(&self, t: f64) -> Option<Gut> {
        self.records
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .map(|r| r.gut)
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    t: f64,
    affect_probs: [f64; 7],
    affect_flags: [bool; 7],
    flow_prob: f64,
    flow: bool,
    x1: f64,
    valence: &Valence,
    params: &GutParams,
) -> TimelineRecord {
    let (pa_count, na_count) = valence.counts(&affect_flags);
    let delta = motivation_delta(pa_count, na_count, params);
    TimelineRecord {
        t,
        affect_probs,
        affect_flags,
        flow_prob,
        flow,
        pa_count,
        na_count,
        delta,
        gut: classify(flow, delta, x1),
    }
}

/// Affects flagged present in a record.
pub fn present(r: &TimelineRecord) -> Vec<Affect> {
    Affect::ALL.into_iter().filter(|a| r.affect_flags[a.index()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn timeline(flow: f64, probs: [f64; 7], x1: Option<f64>) -> ExperienceTimeline {
        let n = 5;
        let times: Vec<f64> = (0..n).map(|i| i as f64 + 5.0).collect();
        ExperienceTimeline::from_probabilities(
            &times,
            &vec![probs; n],
            &vec![flow; n],
            0.5,
            x1,
            Some(0.0),
            &Valence::default(),
            &GutParams::default(),
        )
        .unwrap()
    }

    // pleasure + trust present, nothing negative: δ = 2 − 0 − 2 = 0.
    const BALANCED: [f64; 7] = [0.9, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1];
    // pleasure, trust, lucky: δ = 1.
    const EAGER: [f64; 7] = [0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1];

    #[test]
    fn no_flow_is_average() {
        assert!(timeline(0.2, BALANCED, Some(0.9)).guts().iter().all(|&g| g == Gut::Average));
    }

    #[test]
    fn balanced_flow_with_strong_correlation_is_best() {
        let tl = timeline(0.8, BALANCED, Some(0.7));
        assert!(tl.records.iter().all(|r| r.delta == 0 && r.gut == Gut::Best));
    }

    #[test]
    fn unbalanced_flow_is_good() {
        let tl = timeline(0.8, EAGER, Some(0.9));
        assert!(tl.records.iter().all(|r| r.delta == 1 && r.gut == Gut::Good));
        let undefined = timeline(0.8, BALANCED, None);
        assert!(undefined.x1_undefined);
        assert!(undefined.guts().iter().all(|&g| g == Gut::Good));
    }

    #[test]
    fn counts_follow_flags() {
        let tl = timeline(0.8, [0.9, 0.1, 0.9, 0.9, 0.9, 0.9, 0.1], Some(0.0));
        let r = &tl.records[0];
        assert_eq!((r.pa_count, r.na_count), (3, 2));
        assert_eq!(r.delta, 3 - 2 - 2);
        assert_eq!(present(r).len(), 5);
    }

    #[test]
    fn csv_round_trip() {
        let tl = timeline(0.8, EAGER, Some(0.9));
        let mut buf = Vec::new();
        tl.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,pa0,pa1,pa2,pa3,pa4,pa5,pa6,flow,delta,gut");
        assert_eq!(text.lines().nth(1).unwrap(), "5,1,1,1,0,0,0,0,1,1,1");
        let back =
            ExperienceTimeline::read_csv(buf.as_slice(), "mem", &Valence::default(), &GutParams::default())
                .unwrap();
        assert_eq!(back.guts(), tl.guts());
        assert_eq!(back.records[0].affect_flags, tl.records[0].affect_flags);
    }
}
