//! Time averages, mixing gaps, and the tightness diagnostics behind the
//! existence of an invariant measure.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::engine::{simulate, SimConfig, Trajectory};
use crate::ensemble::{ensemble_map, pairwise_sum_rows};
use crate::error::{domain, Error, Result};
use crate::models::{ModelClass, ModelSpec};
use crate::noise::{derive_seed, NoiseStream};
use crate::paths::{Segment, SegmentView};
use crate::stats::{batch_means, linear_fit, mean, median3, pairwise_sum, standard_error};

pub type FunctionalFn = Arc<dyn Fn(&dyn SegmentView) -> f64 + Send + Sync>;

/// A real-valued map on segments.
#[derive(Clone)]
pub struct Functional {
    name: String,
    map: FunctionalFn,
    lipschitz: Option<f64>,
    bound: Option<f64>,
}

impl core::fmt::Debug for Functional {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Functional")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Functional {
    pub fn new(name: impl Into<String>, map: FunctionalFn) -> Self {
        Self {
            name: name.into(),
            map,
            lipschitz: None,
            bound: None,
        }
    }

    /// Declares `|F(phi) - F(psi)| <= l ||phi - psi||_inf`.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// Declares `|F| <= bound`; checked on every evaluation.
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_bounded(&self) -> bool {
        self.bound.is_some()
    }

    pub fn eval(&self, phi: &dyn SegmentView) -> Result<f64> {
        let v = (self.map)(phi);
        if let Some(b) = self.bound {
            if !(v.abs() <= b * (1.0 + 1e-12)) {
                return Err(Error::Contract(format!("functional {} returned {v} beyond its bound {b}", self.name)));
            }
        }
        Ok(v)
    }

    /// `phi(0)`, first component.
    pub fn value_at_zero() -> Self {
        Self::new("phi0", Arc::new(|phi| phi.component(0.0, 0))).with_lipschitz(1.0)
    }

    pub fn tanh_at_zero() -> Self {
        Self::new("tanh_phi0", Arc::new(|phi| libm::tanh(phi.component(0.0, 0))))
            .with_lipschitz(1.0)
            .with_bound(1.0)
    }

    pub fn square_at_zero() -> Self {
        Self::new("phi0_sq", Arc::new(|phi| {
            let x = phi.component(0.0, 0);
            x * x
        }))
    }

    /// `min(||phi||_inf, cap)`.
    pub fn clipped_sup_norm(cap: f64) -> Self {
        Self::new("sup_norm_clipped", Arc::new(move |phi| phi.sup_norm().min(cap)))
            .with_lipschitz(1.0)
            .with_bound(cap)
    }

    pub fn constant(c: f64) -> Self {
        Self::new("constant", Arc::new(move |_| c))
            .with_lipschitz(0.0)
            .with_bound(c.abs())
    }

    /// Looks a built-in up by the name it reports.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "phi0" => Some(Self::value_at_zero()),
            "tanh_phi0" => Some(Self::tanh_at_zero()),
            "phi0_sq" => Some(Self::square_at_zero()),
            "sup_norm_clipped" => Some(Self::clipped_sup_norm(10.0)),
            "constant" => Some(Self::constant(1.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    pub estimate: f64,
    pub standard_error: f64,
    pub paths: usize,
    pub diverged: usize,
}

fn divergence_check(diverged: usize, total: usize) -> Result<()> {
    if diverged * 100 > total {
        return Err(Error::Divergence { diverged, total });
    }
    Ok(())
}

/// Simulates the ensemble and applies `per_path` to each surviving
/// trajectory, counting diverged ones.
fn over_paths<T: Send>(
    model: &ModelSpec,
    xi: &Segment,
    cfg: &SimConfig,
    per_path: impl Fn(&Trajectory) -> Result<T> + Sync + Send,
) -> Result<(Vec<T>, usize)> {
    let results = ensemble_map(cfg.ensemble_size, |i| -> Result<Option<T>> {
        let tr = simulate(model, xi, cfg, &NoiseStream::new(cfg.master_seed, i as u64))?;
        if tr.is_diverged() {
            return Ok(None);
        }
        per_path(&tr).map(Some)
    });
    let mut out = Vec::with_capacity(results.len());
    let mut diverged = 0;
    for r in results {
        match r? {
            Some(v) => out.push(v),
            None => diverged += 1,
        }
    }
    divergence_check(diverged, cfg.ensemble_size)?;
    Ok((out, diverged))
}

/// Grid times `k h` in `[from, to]`.
fn step_times(cfg: &SimConfig, from: f64, to: f64) -> Vec<f64> {
    let h = cfg.step;
    let first = libm::ceil(from / h - 1e-9).max(0.0) as usize;
    let last = libm::floor(to / h + 1e-9) as usize;
    (first..=last).map(|k| k as f64 * h).collect()
}

/// Ensemble mean of the time average of `F(X_t)` over grid times past
/// `burn_in`. The error bar comes from batch means over `sqrt(M)` blocks
/// of paths.
pub fn time_average(model: &ModelSpec, xi: &Segment, f: &Functional, cfg: &SimConfig, burn_in: f64) -> Result<TimeAverage> {
    if !(burn_in >= 0.0 && burn_in < cfg.horizon) {
        return Err(domain("burn_in must lie in [0, T)"));
    }
    let times = step_times(cfg, burn_in, cfg.horizon);
    let (per_path, diverged) = over_paths(model, xi, cfg, |tr| {
        let values = times
            .iter()
            .map(|&t| f.eval(&tr.view_at(t)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(mean(&values))
    })?;
    let batches = libm::sqrt(per_path.len() as f64) as usize;
    let (estimate, se) = batch_means(&per_path, batches);
    Ok(TimeAverage {
        estimate,
        standard_error: se,
        paths: per_path.len(),
        diverged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingParams {
    /// Horizon of the long runs estimating the invariant mean.
    pub stationary_horizon: f64,
    pub burn_in: f64,
    /// Paths in each of the two long runs.
    pub stationary_paths: usize,
}

impl Default for MixingParams {
    fn default() -> Self {
        Self {
            stationary_horizon: 200.0,
            burn_in: 20.0,
            stationary_paths: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    pub functional: String,
    /// `(t, |P_t F(xi) - pi(F)|)`.
    pub gaps: Vec<(f64, f64)>,
    /// Standard error of each `P_t F(xi)` estimate.
    pub transient_se: Vec<f64>,
    pub fitted_rate: f64,
    pub fit_points: usize,
    pub pi_estimate: f64,
    pub pi_standard_error: f64,
    /// The two independent invariant-mean estimates `(value, se)`.
    pub pi_runs: [(f64, f64); 2],
    pub pi_agree: bool,
    pub analytic_rate: Option<f64>,
}

impl MixingReport {
    /// Gap at the sample time nearest `t`.
    pub fn gap_at(&self, t: f64) -> Option<f64> {
        self.nearest(t).map(|k| self.gaps[k].1)
    }

    /// Median of the gaps at `t` and its two neighbouring samples.
    pub fn smoothed_gap_at(&self, t: f64) -> Option<f64> {
        let k = self.nearest(t)?;
        if k == 0 || k + 1 >= self.gaps.len() {
            return Some(self.gaps[k].1);
        }
        Some(median3(self.gaps[k - 1].1, self.gaps[k].1, self.gaps[k + 1].1))
    }

    fn nearest(&self, t: f64) -> Option<usize> {
        (0..self.gaps.len()).min_by(|&a, &b| (self.gaps[a].0 - t).abs().total_cmp(&(self.gaps[b].0 - t).abs()))
    }
}

/// Compares `P_t F(xi)` from an ensemble against `pi(F)` estimated by two
/// long time averages on seeds disjoint from the ensemble's: one started
/// at `eta`, the other at `xi`.
pub fn mixing_check(
    model: &ModelSpec,
    xi: &Segment,
    eta: &Segment,
    f: &Functional,
    cfg: &SimConfig,
    params: &MixingParams,
) -> Result<MixingReport> {
    if f.lipschitz().is_none() {
        return Err(domain("mixing_check needs a functional with a declared Lipschitz bound"));
    }
    let tau = model.tau();
    let spacing = tau / 10.0;
    let n_samples = libm::floor(cfg.horizon / spacing + 1e-9) as usize;
    let at: Vec<f64> = (0..=n_samples).map(|k| k as f64 * spacing).collect();
    let (rows, _) = over_paths(model, xi, cfg, |tr| {
        at.iter().map(|&t| f.eval(&tr.view_at(t)?)).collect::<Result<Vec<f64>>>()
    })?;
    let m = rows.len() as f64;
    let means: Vec<f64> = pairwise_sum_rows(&rows).into_iter().map(|s| s / m).collect();
    let transient_se: Vec<f64> = (0..at.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            standard_error(&col)
        })
        .collect();

    let mut long = cfg.clone();
    long.horizon = params.stationary_horizon;
    long.ensemble_size = params.stationary_paths;
    long.master_seed = derive_seed(cfg.master_seed, 1);
    let run_a = time_average(model, eta, f, &long, params.burn_in)?;
    long.master_seed = derive_seed(long.master_seed, 2);
    let run_b = time_average(model, xi, f, &long, params.burn_in)?;
    let combined_se = libm::hypot(run_a.standard_error, run_b.standard_error);
    let pi = 0.5 * (run_a.estimate + run_b.estimate);
    let pi_se = 0.5 * combined_se;
    let pi_agree = (run_a.estimate - run_b.estimate).abs() <= 3.0 * combined_se;

    let gaps: Vec<(f64, f64)> = at.iter().zip(&means).map(|(&t, &p)| (t, (p - pi).abs())).collect();
    // Fit only where the gap stands clear of Monte Carlo noise.
    let (xs, ys): (Vec<f64>, Vec<f64>) = gaps
        .iter()
        .zip(&transient_se)
        .filter(|((t, g), se)| *t >= tau - 1e-9 && *g > 3.0 * libm::hypot(**se, pi_se))
        .map(|((t, g), _)| (*t, libm::log(*g)))
        .unzip();
    let (fitted_rate, fit_points) = match linear_fit(&xs, &ys) {
        Some(fit) if xs.len() >= 3 => (-fit.slope, xs.len()),
        _ => (f64::NAN, xs.len()),
    };
    Ok(MixingReport {
        functional: String::from(f.name()),
        gaps,
        transient_se,
        fitted_rate,
        fit_points,
        pi_estimate: pi,
        pi_standard_error: pi_se,
        pi_runs: [(run_a.estimate, run_a.standard_error), (run_b.estimate, run_b.standard_error)],
        pi_agree,
        analytic_rate: crate::rates::analytic_rate(model).map(|r| 0.5 * r),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub exponent: f64,
    pub times: Vec<f64>,
    /// Ensemble mean of `||X_t||_inf^exponent` at each time.
    pub moments: Vec<f64>,
    pub max: f64,
    /// Mean of per-path slopes after burn-in, with a 99% interval.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub bounded: bool,
    pub diverged: usize,
}

/// Estimates `E ||X_t||_inf^{2 + kappa_exp}` every `tau` and tests whether
/// its trend after `burn_in` is flat.
pub fn moment_bound_check(
    model: &ModelSpec,
    xi: &Segment,
    cfg: &SimConfig,
    kappa_exp: f64,
    burn_in: f64,
) -> Result<MomentReport> {
    if !(kappa_exp >= 0.0) {
        return Err(domain("moment exponent excess must be nonnegative"));
    }
    if !(burn_in >= 0.0 && burn_in < cfg.horizon) {
        return Err(domain("burn_in must lie in [0, T)"));
    }
    let tau = model.tau();
    let p = 2.0 + kappa_exp;
    let n = libm::floor(cfg.horizon / tau + 1e-9) as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * tau).collect();
    let tail: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= burn_in - 1e-9).collect();
    if tail.len() < 3 {
        return Err(domain("need at least three moment times after burn_in"));
    }
    let tail_t: Vec<f64> = tail.iter().map(|&k| times[k]).collect();
    let (rows, diverged) = over_paths(model, xi, cfg, |tr| {
        let row = times
            .iter()
            .map(|&t| Ok(libm::pow(tr.view_at(t)?.sup_norm(), p)))
            .collect::<Result<Vec<f64>>>()?;
        let tail_y: Vec<f64> = tail.iter().map(|&k| row[k]).collect();
        let slope = linear_fit(&tail_t, &tail_y).map_or(0.0, |f| f.slope);
        Ok((row, slope))
    })?;
    let m = rows.len() as f64;
    let (rows, slopes): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();
    let moments: Vec<f64> = pairwise_sum_rows(&rows).into_iter().map(|s| s / m).collect();
    let max = moments.iter().copied().fold(0.0, f64::max);
    let slope = mean(&slopes);
    let half = 2.576 * standard_error(&slopes);
    let slope_ci = (slope - half, slope + half);
    Ok(MomentReport {
        exponent: p,
        times,
        moments,
        max,
        slope,
        slope_ci,
        bounded: slope_ci.0 <= 0.0 && 0.0 <= slope_ci.1,
        diverged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessTable {
    pub epsilon: f64,
    pub deltas: Vec<f64>,
    /// Fraction of sampled segments with modulus at least `epsilon`.
    pub fractions: Vec<f64>,
    pub segments: usize,
}

fn check_decreasing(list: &[f64], what: &str) -> Result<()> {
    if list.is_empty() || list.iter().any(|d| !(*d > 0.0)) || list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(domain(format!("{what} must be positive and strictly decreasing")));
    }
    Ok(())
}

/// Fraction of segments `X_t`, `t` every `tau / 10` in `[0, T]`, whose
/// modulus of continuity at `delta` reaches `epsilon`.
pub fn tightness_diagnostic(
    model: &ModelSpec,
    xi: &Segment,
    cfg: &SimConfig,
    deltas: &[f64],
    epsilon: f64,
) -> Result<TightnessTable> {
    if model.class() == ModelClass::Jump {
        return Err(domain("tightness_diagnostic needs continuous paths"));
    }
    check_decreasing(deltas, "delta list")?;
    let tau = model.tau();
    let n = libm::floor(cfg.horizon / (tau / 10.0) + 1e-9) as usize;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * tau / 10.0).collect();
    let (counts, _) = over_paths(model, xi, cfg, |tr| {
        let mut hits = vec![0u64; deltas.len()];
        for &t in &times {
            let seg = tr.native_segment(t)?;
            for (j, &d) in deltas.iter().enumerate() {
                if seg.modulus_of_continuity(d)? >= epsilon {
                    hits[j] += 1;
                }
            }
        }
        Ok(hits)
    })?;
    let segments = counts.len() * times.len();
    let fractions = (0..deltas.len())
        .map(|j| counts.iter().map(|c| c[j]).sum::<u64>() as f64 / segments as f64)
        .collect();
    Ok(TightnessTable {
        epsilon,
        deltas: deltas.to_vec(),
        fractions,
        segments,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KurtzTable {
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    /// `sup_theta` of the lookahead integral, ensemble mean; `[time][eps]`.
    pub sup_theta: Vec<Vec<f64>>,
    /// The same integral averaged over `theta`.
    pub mean_theta: Vec<Vec<f64>>,
    /// Tail-window means of the two tables, per epsilon.
    pub sup_tail: Vec<f64>,
    pub mean_tail: Vec<f64>,
    /// Stationary mean of `|b|^2 + intensity E|sigma|^2` over the tail.
    pub integrand_mean: f64,
}

/// Lookahead displacement bound `int_{t+theta}^{t+theta+eps} (|b|^2 +
/// intensity E_z |sigma(z)|^2) ds`, over tail times `t` spaced by `tau`
/// from `tail_start`.
pub fn kurtz_diagnostic(
    model: &ModelSpec,
    xi: &Segment,
    cfg: &SimConfig,
    epsilons: &[f64],
    tail_start: f64,
) -> Result<KurtzTable> {
    if model.class() != ModelClass::Jump {
        return Err(domain("kurtz_diagnostic needs a jump model"));
    }
    check_decreasing(epsilons, "epsilon list")?;
    let tau = model.tau();
    if epsilons[0] > tau * (1.0 + 1e-12) {
        return Err(domain("each epsilon must be at most tau"));
    }
    let h = cfg.step;
    let last_t = cfg.horizon - epsilons[0];
    if !(tail_start >= tau && tail_start <= last_t) {
        return Err(domain("tail_start must lie in [tau, T - max epsilon]"));
    }
    let n_t = libm::floor((last_t - tail_start) / tau + 1e-9) as usize;
    let times: Vec<f64> = (0..=n_t).map(|k| tail_start + k as f64 * tau).collect();
    let steps = cfg.steps();
    let lag = libm::round(tau / h) as usize;
    let eps_steps: Vec<usize> = epsilons.iter().map(|e| libm::round(e / h) as usize).collect();
    let n_eps = epsilons.len();
    let first_k = libm::round(tail_start / h) as usize - lag;

    let (per_path, _) = over_paths(model, xi, cfg, |tr| {
        // Prefix sums of the integrand on the step grid.
        let mut prefix = vec![0.0; steps + 1];
        let mut b = vec![0.0; model.dim()];
        let mut tail_g = Vec::new();
        for k in 0..steps {
            let s = k as f64 * h;
            let view = tr.view_at(s)?;
            model.drift(s, &view, &mut b);
            let g = b.iter().map(|x| x * x).sum::<f64>() + model.jump_second_moment(s, &view);
            prefix[k + 1] = prefix[k] + g * h;
            if k >= first_k {
                tail_g.push(g);
            }
        }
        let mut sup = vec![0.0; times.len() * n_eps];
        let mut avg = vec![0.0; times.len() * n_eps];
        for (i, &t) in times.iter().enumerate() {
            let kt = libm::round(t / h) as usize;
            for (j, &e) in eps_steps.iter().enumerate() {
                let window: Vec<f64> = (kt - lag..=kt).map(|k0| prefix[k0 + e] - prefix[k0]).collect();
                sup[i * n_eps + j] = window.iter().copied().fold(0.0, f64::max);
                avg[i * n_eps + j] = mean(&window);
            }
        }
        Ok((sup, avg, mean(&tail_g)))
    })?;
    let m = per_path.len() as f64;
    let sups: Vec<Vec<f64>> = per_path.iter().map(|p| p.0.clone()).collect();
    let avgs: Vec<Vec<f64>> = per_path.iter().map(|p| p.1.clone()).collect();
    let gs: Vec<f64> = per_path.iter().map(|p| p.2).collect();
    let sup_flat: Vec<f64> = pairwise_sum_rows(&sups).into_iter().map(|s| s / m).collect();
    let avg_flat: Vec<f64> = pairwise_sum_rows(&avgs).into_iter().map(|s| s / m).collect();
    let reshape = |flat: &[f64]| -> Vec<Vec<f64>> { flat.chunks(n_eps).map(|c| c.to_vec()).collect() };
    let tail_mean = |table: &Vec<Vec<f64>>| -> Vec<f64> {
        (0..n_eps)
            .map(|j| {
                let col: Vec<f64> = table.iter().map(|r| r[j]).collect();
                pairwise_sum(&col) / col.len() as f64
            })
            .collect()
    };
    let sup_theta = reshape(&sup_flat);
    let mean_theta = reshape(&avg_flat);
    Ok(KurtzTable {
        epsilons: epsilons.to_vec(),
        times,
        sup_tail: tail_mean(&sup_theta),
        mean_tail: tail_mean(&mean_theta),
        sup_theta,
        mean_theta,
        integrand_mean: mean(&gs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{linear_retarded, DelaySpec, Matrix};
    use crate::paths::Interp;

    fn constant(v: f64) -> Segment {
        Segment::constant(Interp::ContinuousLinear, 1.0, 101, &[v]).unwrap()
    }

    #[test]
    fn constant_functional_average() {
        let m = linear_retarded(1.0, 0.0, Matrix::scalar(1.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 5.0).with_ensemble(16, 3);
        let r = time_average(&m, &constant(0.0), &Functional::constant(1.0), &cfg, 1.0).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.standard_error, 0.0);
    }

    #[test]
    fn bound_is_enforced() {
        let f = Functional::new("liar", Arc::new(|_| 2.0)).with_bound(1.0);
        assert!(matches!(f.eval(&constant(0.0)), Err(Error::Contract(_))));
    }

    #[test]
    fn deterministic_moments_vanish() {
        let m = linear_retarded(3.0, 1.0, Matrix::scalar(0.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 6.0).with_ensemble(4, 0);
        let r = moment_bound_check(&m, &constant(0.0), &cfg, 0.1, 2.0).unwrap();
        assert!(r.moments.iter().all(|&v| v == 0.0));
        assert!(r.bounded);
    }

    #[test]
    fn tightness_zero_for_slow_paths() {
        let m = linear_retarded(1.0, 0.0, Matrix::scalar(0.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 3.0).with_ensemble(2, 0);
        let t = tightness_diagnostic(&m, &constant(1.0), &cfg, &[0.1, 0.01], 0.2).unwrap();
        assert!(t.fractions.iter().all(|&f| f == 0.0));
        assert!(tightness_diagnostic(&m, &constant(1.0), &cfg, &[0.01, 0.1], 0.2).is_err());
    }
}
