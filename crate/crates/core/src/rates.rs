//! Analytic decay exponents and their empirical counterparts.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{simulate_coupled, SimConfig};
use crate::ensemble::{ensemble_map, pairwise_sum_rows};
use crate::error::{domain, Error, Result};
use crate::models::{Builtin, JumpForm, ModelClass, ModelSpec};
use crate::noise::NoiseStream;
use crate::paths::{Segment, TIME_SNAP};
use crate::stats::linear_fit;

/// Safety margin subtracted from the largest admissible Razumikhin exponent.
pub const RAZUMIKHIN_MARGIN: f64 = 1e-9;

/// The positive root of `lambda = a - b * exp(lambda * tau)`.
pub fn halanay_rate(a: f64, b: f64, tau: f64) -> Result<f64> {
    if !(a > b && b > 0.0) || !a.is_finite() {
        return Err(domain(format!("halanay_rate needs a > b > 0, got a = {a}, b = {b}")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(domain("halanay_rate needs tau >= 0"));
    }
    let f = |l: f64| l - a + b * libm::exp(l * tau);
    let (mut lo, mut hi) = (0.0, a - b);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `gamma < lambda` with `kappa e^{gamma tau / 2} < 1` and
/// `e^{gamma tau} / (1 - kappa e^{gamma tau / 2})^2 < q`, less
/// [`RAZUMIKHIN_MARGIN`].
pub fn razumikhin_gamma(kappa: f64, lambda: f64, tau: f64, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(domain("razumikhin_gamma needs kappa in [0, 1)"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) || !(tau >= 0.0 && tau.is_finite()) {
        return Err(domain("razumikhin_gamma needs lambda > 0 and tau >= 0"));
    }
    let floor = 1.0 / ((1.0 - kappa) * (1.0 - kappa));
    if !(q > floor) {
        return Err(domain(format!("razumikhin_gamma needs q > (1 - kappa)^-2 = {floor}, got {q}")));
    }
    let admissible = |g: f64| {
        let half = kappa * libm::exp(0.5 * g * tau);
        half < 1.0 && libm::exp(g * tau) / ((1.0 - half) * (1.0 - half)) < q
    };
    let top = if admissible(lambda) {
        lambda
    } else {
        let (mut lo, mut hi) = (0.0, lambda);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let gamma = top - RAZUMIKHIN_MARGIN;
    if !(gamma > 0.0) {
        return Err(domain("no positive Razumikhin exponent fits the margin"));
    }
    Ok(gamma)
}

/// `(delta / lambda + e^{-gamma t} (1 + kappa)^2 |xi|^2) / (1 - kappa e^{gamma tau / 2})^2`
/// on each time of `t_grid`.
pub fn razumikhin_bound_curve(
    delta: f64,
    lambda: f64,
    kappa: f64,
    gamma: f64,
    tau: f64,
    xi_norm: f64,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    let half = kappa * libm::exp(0.5 * gamma * tau);
    if !(half < 1.0) || !(lambda > 0.0) || !(delta >= 0.0) || !(kappa >= 0.0) {
        return Err(domain("bound curve inputs violate kappa e^{gamma tau/2} < 1"));
    }
    let denom = (1.0 - half) * (1.0 - half);
    let lead = (1.0 + kappa) * (1.0 + kappa) * xi_norm * xi_norm;
    Ok(t_grid
        .iter()
        .map(|&t| (delta / lambda + libm::exp(-gamma * t) * lead) / denom)
        .collect())
}

/// `min(p, 1) gamma` with `p = log((1 - kappa) / kappa) / (gamma tau)`;
/// requires `kappa e^{gamma tau} / (1 - kappa) < 1`.
pub fn neutral_mixing_exponent(kappa: f64, gamma: f64, tau: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(domain("neutral_mixing_exponent needs kappa in (0, 1/2)"));
    }
    if !(gamma > 0.0 && tau > 0.0) {
        return Err(domain("neutral_mixing_exponent needs gamma, tau > 0"));
    }
    let q = kappa * libm::exp(gamma * tau) / (1.0 - kappa);
    if !(q < 1.0) {
        return Err(domain(format!("q = {q} >= 1: gamma too large for kappa and tau")));
    }
    let p = libm::log((1.0 - kappa) / kappa) / (gamma * tau);
    Ok(p.min(1.0) * gamma)
}

/// Analytic exponent for the coupled distance of a recognised built-in, in
/// the power [`distance_power`] uses for its class.
pub fn analytic_rate(model: &ModelSpec) -> Option<f64> {
    let tau = model.tau();
    match model.builtin()? {
        Builtin::LinearRetarded { a, b_lag } => squared_rate(2.0 * a - b_lag.abs(), b_lag.abs(), *a, tau),
        Builtin::JumpLinear {
            a,
            b_lag,
            jump_scale,
            intensity,
            form,
        } => {
            let extra = match form {
                JumpForm::Additive => 0.0,
                JumpForm::Delayed => {
                    let law = &model.jump_part()?.law;
                    intensity * jump_scale * jump_scale * law.second_moment()
                }
                JumpForm::Saturating { .. } => return None,
            };
            squared_rate(2.0 * a - b_lag.abs(), b_lag.abs() + extra, *a, tau).map(|r| 0.5 * r)
        }
        Builtin::NeutralLinear { kappa, a, b_lag } => {
            let (a1, a2) = neutral_constants(*kappa, *a, *b_lag)?;
            let lambda = halanay_rate(a1, a2, tau).ok()?;
            let q = 2.0 / ((1.0 - kappa) * (1.0 - kappa));
            let cap = libm::log((1.0 - kappa) / kappa) / tau * (1.0 - 1e-9);
            let gamma = razumikhin_gamma(*kappa, lambda, tau, q).ok()?.min(cap);
            neutral_mixing_exponent(*kappa, gamma, tau).ok()
        }
        Builtin::Zero => None,
    }
}

fn squared_rate(a1: f64, a2: f64, a: f64, tau: f64) -> Option<f64> {
    if a2 == 0.0 {
        return Some(2.0 * a);
    }
    halanay_rate(a1, a2, tau).ok()
}

/// Closed-form dissipativity constants of the neutral linear built-in,
/// splitting the cross term evenly between the two squares.
pub fn neutral_constants(kappa: f64, a: f64, b_lag: f64) -> Option<(f64, f64)> {
    let cross = (b_lag + a * kappa).abs();
    let a1 = 2.0 * a - cross;
    let a2 = cross - 2.0 * kappa * b_lag;
    (a1 > a2 && a2 > 0.0).then_some((a1, a2))
}

/// Power of the sup distance whose mean decays exponentially: squared for
/// continuous classes, first power for the jump class.
pub fn distance_power(class: ModelClass) -> i32 {
    match class {
        ModelClass::Jump => 1,
        _ => 2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `-slope` of the log-linear fit; `+inf` when the distance vanishes.
    pub fitted_rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub window: (f64, f64),
    pub analytic_rate: Option<f64>,
    pub n_points: usize,
    pub power: i32,
    pub pairs: usize,
    pub diverged: usize,
    pub degenerate: bool,
    pub trusted: bool,
    /// `(t, D(t))` over the requested window.
    pub curve: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Fits `D(t) = mean ||X_t(xi) - X_t(eta)||^p_inf` over synchronously
/// coupled pairs to `c e^{-rate t}` on `window`.
pub fn mixing_rate_estimate(
    model: &ModelSpec,
    xi: &Segment,
    eta: &Segment,
    cfg: &SimConfig,
    window: (f64, f64),
) -> Result<RateReport> {
    let tau = model.tau();
    let snap = TIME_SNAP * tau;
    cfg.validate(tau)?;
    if window.0 < tau - snap || window.1 > cfg.horizon + snap || !(window.1 > window.0) {
        return Err(domain("rate window must satisfy tau <= t_start < t_end <= T"));
    }
    if cfg.ensemble_size < 100 {
        return Err(domain("mixing_rate_estimate needs at least 100 coupled pairs"));
    }
    let spacing = tau / (cfg.segment_points - 1) as f64;
    let first = libm::ceil(window.0 / spacing - 1e-9) as usize;
    let last = libm::floor(window.1 / spacing + 1e-9) as usize;
    let at: Vec<f64> = (first..=last).map(|k| k as f64 * spacing).collect();
    let power = distance_power(model.class());

    let runs: Vec<Result<Option<Vec<f64>>>> = ensemble_map(cfg.ensemble_size, |i| {
        let stream = NoiseStream::new(cfg.master_seed, i as u64);
        let (a, b) = simulate_coupled(model, xi, eta, cfg, &stream)?;
        if a.is_diverged() || b.is_diverged() {
            return Ok(None);
        }
        let d = a.sup_distance_series(&b, &at)?;
        Ok(Some(d.into_iter().map(|x| libm::pow(x, power as f64)).collect()))
    });
    let mut rows = Vec::with_capacity(runs.len());
    let mut diverged = 0;
    for r in runs {
        match r? {
            Some(row) => rows.push(row),
            None => diverged += 1,
        }
    }
    if diverged * 100 > cfg.ensemble_size {
        return Err(Error::Divergence {
            diverged,
            total: cfg.ensemble_size,
        });
    }
    let count = rows.len() as f64;
    let d: Vec<f64> = pairwise_sum_rows(&rows).into_iter().map(|s| s / count).collect();
    let curve: Vec<(f64, f64)> = at.iter().copied().zip(d.iter().copied()).collect();

    let mut warnings = Vec::new();
    let usable = d.iter().position(|&v| !(v > 0.0)).unwrap_or(d.len());
    if usable < d.len() {
        warnings.push(format!(
            "distance vanished at t = {}; window truncated",
            at.get(usable).copied().unwrap_or(window.0)
        ));
    }
    let analytic = analytic_rate(model);
    let mut report = RateReport {
        fitted_rate: f64::INFINITY,
        intercept: f64::NEG_INFINITY,
        r_squared: f64::NAN,
        slope_se: f64::NAN,
        window,
        analytic_rate: analytic,
        n_points: usable,
        power,
        pairs: rows.len(),
        diverged,
        degenerate: true,
        trusted: false,
        curve,
        warnings,
    };
    if usable < 3 {
        report.warnings.push(String::from("too few positive points to fit; rate reported as +inf"));
        return Ok(report);
    }
    let logs: Vec<f64> = d[..usable].iter().map(|v| libm::log(*v)).collect();
    let fit = linear_fit(&at[..usable], &logs).ok_or_else(|| domain("degenerate rate window"))?;
    report.fitted_rate = -fit.slope;
    report.intercept = fit.intercept;
    report.r_squared = fit.r_squared;
    report.slope_se = fit.slope_se;
    report.window = (at[0], at[usable - 1]);
    report.degenerate = false;
    report.trusted = fit.r_squared >= 0.95;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halanay_examples() {
        assert!((halanay_rate(2.0, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((halanay_rate(2.0, 1.0, 1.0).unwrap() - 0.44285).abs() < 1e-5);
        let l = halanay_rate(3.0, 1.0, 1.0).unwrap();
        assert!((l - 3.0 + libm::exp(l)).abs() < 1e-10);
        assert!(matches!(halanay_rate(1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(halanay_rate(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn halanay_monotone_sweep() {
        let grid = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / 9.0;
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    let b = grid(0.1, 5.0, j);
                    let a = b + grid(0.1, 5.0, i);
                    let tau = grid(0.0, 5.0, k);
                    let l = halanay_rate(a, b, tau).unwrap();
                    assert!(halanay_rate(a + 0.1, b, tau).unwrap() > l);
                    assert!(halanay_rate(a, b * 0.9, tau).unwrap() > l);
                    if tau > 0.0 {
                        assert!(halanay_rate(a, b, tau * 0.9).unwrap() > l);
                    }
                }
            }
        }
    }

    #[test]
    fn razumikhin_examples() {
        let g = razumikhin_gamma(0.25, 1.0, 1.0, 4.0).unwrap();
        assert!((g - 0.576).abs() < 1e-3, "{g}");
        let g0 = razumikhin_gamma(0.0, 0.5, 1.0, 2.0).unwrap();
        assert!((g0 - (0.5 - RAZUMIKHIN_MARGIN)).abs() < 1e-15);
        assert!(razumikhin_gamma(0.25, 1.0, 1.0, 1.7).is_err());
    }

    #[test]
    fn razumikhin_largeness() {
        let (kappa, tau, q) = (0.25, 1.0, 4.0);
        let g = razumikhin_gamma(kappa, 5.0, tau, q).unwrap();
        let ok = |g: f64| {
            let h = kappa * libm::exp(0.5 * g * tau);
            h < 1.0 && libm::exp(g * tau) / ((1.0 - h) * (1.0 - h)) < q
        };
        assert!(ok(g) && !ok(g + 1e-3));
    }

    #[test]
    fn bound_curve() {
        let t = [0.0, 1.0, 10.0, 1000.0];
        let c0 = razumikhin_bound_curve(1.0, 2.0, 0.0, 0.5, 1.0, 3.0, &t).unwrap();
        for (ti, ci) in t.iter().zip(&c0) {
            assert!((ci - (0.5 + libm::exp(-0.5 * ti) * 9.0)).abs() < 1e-12);
        }
        let c = razumikhin_bound_curve(1.0, 2.0, 0.25, 0.5, 1.0, 3.0, &t).unwrap();
        assert!(c.windows(2).all(|w| w[1] < w[0]));
        let limit = 0.5 / (1.0 - 0.25 * libm::exp(0.25)).powi(2);
        assert!((c[3] - limit).abs() < 1e-12);
    }

    #[test]
    fn neutral_exponent_examples() {
        assert!((neutral_mixing_exponent(0.25, 0.5, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((neutral_mixing_exponent(0.45, 0.1, 1.0).unwrap() - 0.1).abs() < 1e-15);
        // q < 1 is the same as p > 1, so the p < 1 branch is never admissible
        // and kappa -> 1/2 at fixed gamma * tau ends in the q >= 1 error.
        assert!((neutral_mixing_exponent(0.4999, 0.0001, 1.0).unwrap() - 0.0001).abs() < 1e-18);
        assert!(neutral_mixing_exponent(0.4999, 0.1, 1.0).is_err());
        assert!(neutral_mixing_exponent(0.45, 0.5, 1.0).is_err());
    }

    #[test]
    fn neutral_builtin_constants() {
        let (a1, a2) = neutral_constants(0.25, 3.0, 0.5).unwrap();
        assert!((a1 - 4.75).abs() < 1e-15 && (a2 - 1.0).abs() < 1e-15);
    }
}
