use serde::{Deserialize, Serialize};

use super::pearson::pearson_with_grad;
use crate::error::{Error, Result};

/// Default bound on `X1 − X2`; `C − 1` is the weak-correlation threshold for X2.
pub const DEFAULT_C: f64 = 1.4;

/// Loss value and the two correlations it was built from. An undefined
/// correlation (constant list) is `None` and its terms contribute nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub loss: f64,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

/// `C − 1`, rounded so that a decimal C gives the decimal threshold exactly.
pub fn weak_threshold(c: f64) -> f64 {
    ((c - 1.0) * 1e9).round() / 1e9
}

/// `(1 − X1)² + max(0, X1 − X2 − C)² + max(0, |X2| − (C − 1))²` with its partial
/// derivatives in X1 and X2. Terms that need a missing correlation are dropped.
pub fn loss_from_correlations(x1: Option<f64>, x2: Option<f64>, c: f64) -> (f64, f64, f64) {
    let mut loss = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    if let Some(x1) = x1 {
        loss += (1.0 - x1).powi(2);
        d1 -= 2.0 * (1.0 - x1);
    }
    if let (Some(x1), Some(x2)) = (x1, x2) {
        let gap = (x1 - x2 - c).max(0.0);
        loss += gap * gap;
        d1 += 2.0 * gap;
        d2 -= 2.0 * gap;
    }
    if let Some(x2) = x2 {
        let excess = (x2.abs() - weak_threshold(c)).max(0.0);
        loss += excess * excess;
        d2 += 2.0 * excess * x2.signum();
    }
    (loss, d1, d2)
}

/// Gradient of the loss with respect to the three soft lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ListGrads {
    pub pa: Vec<f64>,
    pub na: Vec<f64>,
    pub flow: Vec<f64>,
}

fn correlation(
    a: &[f64],
    flow: &[f64],
) -> Result<Option<(f64, Vec<f64>, Vec<f64>)>> {
    match pearson_with_grad(a, flow) {
        Ok(v) => Ok(Some(v)),
        Err(Error::ConstantInput) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Loss on soft PA/NA aggregate lists and the soft flow list.
pub fn labeler_loss(pa: &[f64], na: &[f64], flow: &[f64], c: f64) -> Result<LossReport> {
    labeler_loss_with_grad(pa, na, flow, c).map(|(r, _)| r)
}

pub fn labeler_loss_with_grad(
    pa: &[f64],
    na: &[f64],
    flow: &[f64],
    c: f64,
) -> Result<(LossReport, ListGrads)> {
    let r1 = correlation(pa, flow)?;
    let r2 = correlation(na, flow)?;
    let x1 = r1.as_ref().map(|v| v.0);
    let x2 = r2.as_ref().map(|v| v.0);
    let (loss, d1, d2) = loss_from_correlations(x1, x2, c);
    let n = flow.len();
    let mut grads = ListGrads { pa: vec![0.0; n], na: vec![0.0; n], flow: vec![0.0; n] };
    if let Some((_, dpa, dflow)) = r1 {
        for t in 0..n {
            grads.pa[t] = d1 * dpa[t];
            grads.flow[t] += d1 * dflow[t];
        }
    }
    if let Some((_, dna, dflow)) = r2 {
        for t in 0..n {
            grads.na[t] = d2 * dna[t];
            grads.flow[t] += d2 * dflow[t];
        }
    }
    Ok((LossReport { loss, x1, x2 }, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loss(x1: f64, x2: f64) -> f64 {
        loss_from_correlations(Some(x1), Some(x2), DEFAULT_C).0
    }

    #[test]
    fn worked_examples() {
        assert_eq!(loss(1.0, 0.0), 0.0);
        assert_eq!(loss(1.0, 0.4), 0.0);
        assert_eq!(loss(1.0, -0.4), 0.0);
        assert_eq!(loss(0.0, 0.0), 1.0);
    }

    #[test]
    fn zero_only_at_ideal() {
        assert!(loss(0.999, 0.0) > 0.0);
        assert!(loss(1.0, 0.41) > 0.0);
        assert!(loss(1.0, -0.41) > 0.0);
        // X1 − X2 > C only happens with X2 below −0.4, which the third term also catches.
        assert!(loss(1.0, -0.5) > 0.0);
    }

    #[test]
    fn undefined_correlations_drop_terms() {
        assert_eq!(loss_from_correlations(None, None, DEFAULT_C).0, 0.0);
        assert_eq!(loss_from_correlations(None, Some(0.9), DEFAULT_C).0, 0.5f64.powi(2));
        let (l, _, d2) = loss_from_correlations(Some(0.5), None, DEFAULT_C);
        assert_eq!((l, d2), (0.25, 0.0));
    }

    #[test]
    fn constant_flow_is_not_an_error() {
        let r = labeler_loss(&[0.1, 0.5, 0.2], &[0.3, 0.1, 0.0], &[0.5; 3], DEFAULT_C).unwrap();
        assert_eq!(r.x1, None);
        assert_eq!(r.loss, 0.0);
    }

    proptest! {
        #[test]
        fn non_negative(x1 in -1.0f64..=1.0, x2 in -1.0f64..=1.0) {
            prop_assert!(loss(x1, x2) >= 0.0);
        }

        #[test]
        fn partials_match_finite_differences(x1 in -0.99f64..0.99, x2 in -0.99f64..0.99) {
            let eps = 1e-6;
            let (_, d1, d2) = loss_from_correlations(Some(x1), Some(x2), DEFAULT_C);
            let n1 = (loss(x1 + eps, x2) - loss(x1 - eps, x2)) / (2.0 * eps);
            let n2 = (loss(x1, x2 + eps) - loss(x1, x2 - eps)) / (2.0 * eps);
            prop_assert!((n1 - d1).abs() < 1e-5);
            // |X2| has a kink at 0 but the term is flat there.
            prop_assert!((n2 - d2).abs() < 1e-5);
        }
    }
}
