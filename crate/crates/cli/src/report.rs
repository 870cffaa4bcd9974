use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use guxas_core::affect::Affect;
use guxas_core::gut::Gut;
use guxas_core::labeler::ExperienceTimeline;
use guxas_core::metric::GamePlayRecord;

use crate::config::ReportConfig;

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;
const UNLABELED: &str = "#bdbdbd";

const STATE_NAMES: [&str; 3] = ["GUT 0 (average)", "GUT 1 (good)", "GUT 2 (best)"];

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN_LEFT}" y="18" font-size="14">{title}</text>"#);
}

/// Lists all three states, dark to light, whatever the data holds.
fn legend(out: &mut String, cfg: &ReportConfig, x: f64, y: f64) {
    for (row, gut) in (0..3).rev().enumerate() {
        let yy = y + row as f64 * 20.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{yy}" width="14" height="14" fill="{}"/>"#, cfg.color(gut));
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 20.0, yy + 11.0, STATE_NAMES[gut]);
    }
}

/// Round step for roughly `target` ticks over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    if !(span > 0.0) {
        return 1.0;
    }
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// GUT level per second as colored bars of height proportional to the level.
pub fn experience_curve_svg(timeline: &ExperienceTimeline, cfg: &ReportConfig) -> String {
    let (w, h) = (cfg.width, cfg.height);
    let pw = w - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = h - MARGIN_TOP - MARGIN_BOTTOM;
    let mut out = String::new();
    header(&mut out, w, h, "Experience curve");
    let recs = &timeline.records;
    let step = if recs.len() >= 2 { recs[1].t - recs[0].t } else { 1.0 };
    let t0 = recs.first().map_or(0.0, |r| r.t - 0.5 * step);
    let t1 = recs.last().map_or(1.0, |r| r.t + 0.5 * step);
    let span = (t1 - t0).max(f64::EPSILON);
    let x = |t: f64| MARGIN_LEFT + (t - t0) / span * pw;
    let y = |level: f64| MARGIN_TOP + ph - level / 3.0 * ph;

    // Runs of equal state become one bar.
    let mut i = 0;
    while i < recs.len() {
        let g = recs[i].gut;
        let mut j = i;
        while j + 1 < recs.len() && recs[j + 1].gut == g {
            j += 1;
        }
        let (a, b) = (recs[i].t - 0.5 * step, recs[j].t + 0.5 * step);
        let level = g.index() as f64 + 1.0;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x(a),
            y(level),
            x(b) - x(a),
            y(0.0) - y(level),
            cfg.color(g.index())
        );
        i = j + 1;
    }

    let _ = writeln!(
        out,
        r#"<path d="M{:.2} {:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        MARGIN_LEFT,
        MARGIN_TOP,
        y(0.0),
        MARGIN_LEFT + pw
    );
    for g in 0..3 {
        let yy = y(g as f64 + 1.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{g}</text>"#, MARGIN_LEFT - 6.0, yy + 4.0);
    }
    let ts = tick_step(span, 8.0);
    let mut k = (t0 / ts).ceil() as i64;
    while k as f64 * ts <= t1 + 1e-9 {
        let t = k as f64 * ts;
        let xx = x(t);
        let _ = writeln!(out, r#"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}" stroke="black"/>"#, y(0.0), y(0.0) + 5.0);
        let _ = writeln!(out, r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, y(0.0) + 18.0);
        k += 1;
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (s)</text>"#, MARGIN_LEFT + 0.5 * pw, h - 6.0);
    legend(&mut out, cfg, MARGIN_LEFT + pw + 20.0, MARGIN_TOP + 10.0);
    out.push_str("</svg>\n");
    out
}

fn record_state(r: &GamePlayRecord, timeline: &ExperienceTimeline) -> Option<Gut> {
    r.gut_label.or_else(|| r.t.and_then(|t| timeline.gut_at(t)))
}

/// Hero paths as polylines colored by the record's GUT state. `None` when no
/// record carries a path.
pub fn trajectory_svg(records: &[GamePlayRecord], timeline: &ExperienceTimeline, cfg: &ReportConfig) -> Option<String> {
    let paths: Vec<(&Vec<(f64, f64, f64)>, Option<Gut>)> = records
        .iter()
        .filter_map(|r| r.hero_path.as_ref().filter(|p| !p.is_empty()).map(|p| (p, record_state(r, timeline))))
        .collect();
    if paths.is_empty() {
        return None;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (p, _) in &paths {
        for &(_, x, y) in p.iter() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let side = cfg.height.max(240.0);
    let (w, h) = (side + MARGIN_LEFT + MARGIN_RIGHT, side + MARGIN_TOP + MARGIN_BOTTOM);
    let plot = side;
    let sx = (x1 - x0).max(f64::EPSILON);
    let sy = (y1 - y0).max(f64::EPSILON);
    let px = |x: f64| MARGIN_LEFT + (x - x0) / sx * plot;
    let py = |y: f64| MARGIN_TOP + plot - (y - y0) / sy * plot;

    let mut out = String::new();
    header(&mut out, w, h, "Movement trajectory");
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot}" height="{plot}" fill="none" stroke="black"/>"#
    );
    // Lighter states first so the best experience is drawn on top.
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by_key(|&i| (paths[i].1.map_or(-1, |g| g.index() as i32), i));
    for i in order {
        let (p, g) = &paths[i];
        let color = g.map_or(UNLABELED, |g| cfg.color(g.index()));
        let pts: Vec<String> = p.iter().map(|&(_, x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-opacity="0.8"/>"#,
            pts.join(" ")
        );
    }
    legend(&mut out, cfg, MARGIN_LEFT + plot + 20.0, MARGIN_TOP + 10.0);
    out.push_str("</svg>\n");
    Some(out)
}

/// One row per affect plus a flow row; one column per labeled second.
pub fn write_affect_heatmap<W: Write>(writer: W, timeline: &ExperienceTimeline) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["affect".to_string()];
    header.extend(timeline.records.iter().map(|r| format!("{}", r.t)));
    w.write_record(&header)?;
    for a in Affect::ALL {
        let mut row = vec![a.name().to_string()];
        row.extend(timeline.records.iter().map(|r| u8::from(r.affect_flags[a.index()]).to_string()));
        w.write_record(&row)?;
    }
    let mut row = vec!["flow".to_string()];
    row.extend(timeline.records.iter().map(|r| u8::from(r.flow).to_string()));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}
