//! Small estimators shared by the rate and ergodic diagnostics.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `NaN` when fewer than three points or no spread in `y`.
    pub r_squared: f64,
    /// Standard error of the slope; `NaN` below three points.
    pub slope_se: f64,
    pub n: usize,
}

/// Ordinary least squares `y = intercept + slope * x`. `None` when fewer than
/// two points or no spread in `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = mean(&x[..n]);
    let my = mean(&y[..n]);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (dx, dy) = (x[k] - mx, y[k] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = (syy - slope * sxy).max(0.0);
    let r_squared = if n >= 3 && syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        f64::NAN
    };
    let slope_se = if n >= 3 {
        libm::sqrt(sse / (n - 2) as f64 / sxx)
    } else {
        f64::NAN
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_se,
        n,
    })
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(x) / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (x.len() - 1) as f64
}

/// Standard error of the mean of independent draws.
pub fn standard_error(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    libm::sqrt(variance(x) / x.len() as f64)
}

/// Mean and standard error by splitting `x` into `batches` contiguous
/// blocks; a trailing remainder is dropped from the error estimate but
/// kept in the mean.
pub fn batch_means(x: &[f64], batches: usize) -> (f64, f64) {
    let m = mean(x);
    let b = batches.min(x.len());
    if b < 2 {
        return (m, 0.0);
    }
    let size = x.len() / b;
    let block: Vec<f64> = (0..b).map(|k| mean(&x[k * size..(k + 1) * size])).collect();
    (m, standard_error(&block))
}

/// Sum by recursive halving. The association order depends only on the
/// length, so the result does not depend on how the inputs were computed.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        2 => x[0] + x[1],
        n => {
            let (a, b) = x.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Median of three, used to smooth short noisy series.
pub fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        assert!(linear_fit(&[0.0, 1.0], &[0.0, 1.0]).unwrap().r_squared.is_nan());
    }

    #[test]
    fn variance_and_batches() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((variance(&x) - 5.0 / 3.0).abs() < 1e-14);
        let (m, se) = batch_means(&[1.0; 100], 10);
        assert_eq!((m, se), (1.0, 0.0));
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median3(3.0, 1.0, 2.0), 2.0);
        assert_eq!(median3(1.0, 2.0, 3.0), 2.0);
        assert_eq!(median3(2.0, 3.0, 1.0), 2.0);
    }
}
