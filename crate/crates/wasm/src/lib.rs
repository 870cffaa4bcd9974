//! Browser bindings for a few pure pieces of the pipeline: the experience
//! tunnel, the GUT rules and DTW alignment. `www/index.html` drives them.

use guxas_core::dtw::{dtw_path, DtwConfig};
use guxas_core::gut::{
    axis_distance, classify, gux_value, in_tunnel, motivation_delta, net_force_direction, off_axis_component,
    GutParams, GuxPoint,
};
use wasm_bindgen::prelude::*;

fn params(c: f64, k: f64) -> Result<GutParams, String> {
    let p = GutParams { c, k, ..GutParams::default() };
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// Standard normal density at the tunnel wall.
#[wasm_bindgen]
pub fn wall_density(c: f64) -> f64 {
    (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `[axis distance, GUX value, inside (0/1), fx, fy, fz, off-axis |F|]`.
/// Force entries are NaN on a coordinate axis, where the pull is singular.
pub fn probe(challenge: f64, skill: f64, motivation: f64, c: f64, k: f64) -> Result<Vec<f64>, String> {
    let p = GuxPoint::new(challenge, skill, motivation);
    let params = params(c, k)?;
    let mut out = vec![axis_distance(p), gux_value(p), f64::from(u8::from(in_tunnel(p, &params)))];
    match net_force_direction(p, &params) {
        Ok(f) => {
            out.extend(f);
            out.push(off_axis_component(f).iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        Err(_) => out.extend([f64::NAN; 4]),
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn tunnel_probe(challenge: f64, skill: f64, motivation: f64, c: f64, k: f64) -> Result<Vec<f64>, JsError> {
    probe(challenge, skill, motivation, c, k).map_err(|e| JsError::new(&e))
}

/// GUX values on an `n × n` grid of (challenge, skill) over
/// `[-extent, extent]²` at fixed motivation, row-major with skill rising
/// down the rows.
#[wasm_bindgen]
pub fn tunnel_slice(motivation: f64, extent: f64, n: usize) -> Vec<f64> {
    let step = if n > 1 { 2.0 * extent / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let skill = -extent + row as f64 * step;
        for col in 0..n {
            let challenge = -extent + col as f64 * step;
            out.push(gux_value(GuxPoint::new(challenge, skill, motivation)));
        }
    }
    out
}

/// `#PA − #NA − D`.
#[wasm_bindgen]
pub fn motivation(pa: u32, na: u32, d: i32) -> i32 {
    motivation_delta(pa, na, &GutParams { d, ..GutParams::default() })
}

/// GUT state 0, 1 or 2 for one second.
#[wasm_bindgen]
pub fn gut_state(flow: bool, pa: u32, na: u32, d: i32, x1: f64) -> u8 {
    classify(flow, motivation(pa, na, d), x1).index() as u8
}

/// Parses comma- or space-separated numbers.
pub fn parse_series(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: `{s}`")))
        .collect()
}

/// `[cost, path length, i0, j0, i1, j1, ...]` for two scalar series.
/// A negative band means no band.
pub fn align(a: &[f64], b: &[f64], band: i32) -> Result<Vec<f64>, String> {
    let wrap = |xs: &[f64]| xs.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    let cfg = DtwConfig { band: usize::try_from(band).ok(), ..DtwConfig::default() };
    let (d, path) = dtw_path(&wrap(a), &wrap(b), &cfg).map_err(|e| e.to_string())?;
    let mut out = vec![d.cost, d.path_len as f64];
    for (i, j) in path {
        out.push(i as f64);
        out.push(j as f64);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn dtw_align(a: &str, b: &str, band: i32) -> Result<Vec<f64>, JsError> {
    let run = || align(&parse_series(a)?, &parse_series(b)?, band);
    run().map_err(|e| JsError::new(&e))
}

/// Absolute differences `|a_i − b_j|`, row-major `len(a) × len(b)`.
#[wasm_bindgen]
pub fn local_costs(a: &str, b: &str) -> Result<Vec<f64>, JsError> {
    let run = || -> Result<Vec<f64>, String> {
        let (a, b) = (parse_series(a)?, parse_series(b)?);
        Ok(a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).collect())
    };
    run().map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_on_axis() {
        let v = probe(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - wall_density(0.0)).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
        // Symmetric pulls leave no off-axis component.
        assert!(v[6].abs() < 1e-12);
    }

    #[test]
    fn probe_outside_and_singular() {
        let v = probe(3.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(v[2], 0.0);
        assert!(v[3].is_nan());
        assert!(probe(0.0, 0.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn slice_peaks_on_the_diagonal() {
        let n = 21;
        let g = tunnel_slice(0.0, 2.0, n);
        assert_eq!(g.len(), n * n);
        let centre = g[10 * n + 10];
        assert!((centre - wall_density(0.0)).abs() < 1e-15);
        assert!(g.iter().all(|&v| v <= centre));
    }

    #[test]
    fn gut_rules() {
        assert_eq!(gut_state(false, 2, 0, 2, 1.0), 0);
        assert_eq!(gut_state(true, 2, 0, 2, 0.6), 2);
        assert_eq!(gut_state(true, 2, 0, 2, 0.59), 1);
        assert_eq!(gut_state(true, 3, 0, 2, 0.9), 1);
        assert_eq!(motivation(1, 2, 2), -3);
    }

    #[test]
    fn alignment_output() {
        let v = align(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0, 2.0], -1).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 4.0);
        assert_eq!(&v[2..], &[0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0]);
        assert!(align(&[], &[1.0], -1).is_err());
    }

    #[test]
    fn series_parsing() {
        assert_eq!(parse_series("1, 2 3,,4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse_series("1, x").is_err());
    }
}
