use crate::error::{Error, Result};

fn centered(xs: &[f64]) -> (Vec<f64>, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let c: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let ss = c.iter().map(|v| v * v).sum();
    (c, ss)
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooShort { need: 2, got: x.len() });
    }
    Ok(())
}

/// Pearson correlation coefficient. Constant inputs have no correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_with_grad(x, y).map(|(r, _, _)| r)
}

/// Correlation plus its gradient with respect to every element of `x` and `y`.
pub fn pearson_with_grad(x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check(x, y)?;
    let (xc, sxx) = centered(x);
    let (yc, syy) = centered(y);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    let sxy: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
    let norm = (sxx * syy).sqrt();
    let r = sxy / norm;
    // Centering terms vanish because centered deviations sum to zero.
    let dx = xc.iter().zip(&yc).map(|(a, b)| b / norm - r * a / sxx).collect();
    let dy = xc.iter().zip(&yc).map(|(a, b)| a / norm - r * b / syy).collect();
    Ok((r.clamp(-1.0, 1.0), dx, dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-15);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r, 9.0 / 84f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.98198, epsilon = 1e-5);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ConstantInput)));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::TooShort { .. })));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
    }

    /// Two-pass covariance over the product of standard deviations.
    fn oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        for i in 0..x.len() {
            cov += (x[i] - mx) * (y[i] - my);
        }
        cov /= n;
        let sx = (x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n).sqrt();
        let sy = (y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n).sqrt();
        cov / (sx * sy)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn matches_two_pass_oracle(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            match pearson(&x, &y) {
                Ok(r) => prop_assert!((r - oracle(&x, &y)).abs() <= 1e-10),
                Err(Error::ConstantInput) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn gradient_matches_finite_differences(pairs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..12)) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let Ok((_, dx, dy)) = pearson_with_grad(&x, &y) else { return Ok(()) };
            let eps = 1e-6;
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += eps;
                xm[i] -= eps;
                let num = (pearson(&xp, &y).unwrap() - pearson(&xm, &y).unwrap()) / (2.0 * eps);
                prop_assert!((num - dx[i]).abs() < 1e-5 * (1.0 + num.abs()), "{} vs {}", num, dx[i]);
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[i] += eps;
                ym[i] -= eps;
                let num = (pearson(&x, &yp).unwrap() - pearson(&x, &ym).unwrap()) / (2.0 * eps);
                prop_assert!((num - dy[i]).abs() < 1e-5 * (1.0 + num.abs()));
            }
        }
    }
}
