//! Euler-Maruyama stepping for the three model classes.

mod poisson;
mod trajectory;

pub use poisson::sample_poisson_measure;
pub use trajectory::{Trajectory, WindowView};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::models::{ModelClass, ModelSpec};
use crate::noise::NoiseStream;
use crate::paths::{norm, Interp, Segment, SegmentView, TIME_SNAP};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub step: f64,
    pub horizon: f64,
    /// Nodes of extracted segments on `[-tau, 0]`.
    pub segment_points: usize,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub divergence_guard: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
}

impl SimConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            segment_points: 101,
            ensemble_size: 1,
            master_seed: 0,
            divergence_guard: 1e8,
            fixed_point_tol: 1e-12,
            fixed_point_max_iter: 100,
        }
    }

    pub fn with_ensemble(mut self, size: usize, seed: u64) -> Self {
        self.ensemble_size = size;
        self.master_seed = seed;
        self
    }

    pub fn with_segment_points(mut self, points: usize) -> Self {
        self.segment_points = points;
        self
    }

    /// Number of `h`-steps up to the horizon.
    pub fn steps(&self) -> usize {
        libm::round(self.horizon / self.step) as usize
    }

    pub fn validate(&self, tau: f64) -> Result<()> {
        let h = self.step;
        if !(h > 0.0 && h.is_finite()) {
            return Err(domain("step must be positive"));
        }
        if h > tau * (1.0 + 1e-12) {
            return Err(domain("step must not exceed tau"));
        }
        if !is_multiple(tau, h) {
            return Err(domain("tau must be an integer multiple of the step"));
        }
        if self.segment_points < 2 {
            return Err(domain("segment_points must be at least 2"));
        }
        if !is_multiple(tau / (self.segment_points - 1) as f64, h) {
            return Err(domain("segment grid spacing must be a multiple of the step"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || !is_multiple(self.horizon, h) {
            return Err(domain("horizon must be a positive multiple of the step"));
        }
        if self.ensemble_size == 0 {
            return Err(domain("ensemble_size must be positive"));
        }
        if !(self.divergence_guard > 0.0) {
            return Err(domain("divergence_guard must be positive"));
        }
        if !(self.fixed_point_tol > 0.0) || self.fixed_point_max_iter == 0 {
            return Err(domain("fixed-point tolerance and iteration cap must be positive"));
        }
        Ok(())
    }
}

fn is_multiple(x: f64, h: f64) -> bool {
    let r = x / h;
    r >= 1.0 - 1e-9 && (r - libm::round(r)).abs() <= 1e-9 * r.max(1.0)
}

/// One Euler-Maruyama path from `xi`.
///
/// Retarded: `X += b h + sigma dW`. Neutral: the same step moves
/// `Y = X(t) - G(X_t)`, and `X(t+h)` is recovered from `X = Y + G(X_{t+h})`
/// by fixed-point iteration on the newest node. Jump: compensated drift
/// between nodes, with each Poisson epoch inserted as a node.
pub fn simulate(model: &ModelSpec, xi: &Segment, cfg: &SimConfig, stream: &NoiseStream) -> Result<Trajectory> {
    cfg.validate(model.tau())?;
    check_initial(model, xi)?;
    let mut traj = history(model, xi, cfg);
    match model.class() {
        ModelClass::Retarded => step_retarded(model, cfg, stream, &mut traj)?,
        ModelClass::Neutral => step_neutral(model, cfg, stream, &mut traj)?,
        ModelClass::Jump => step_jump(model, cfg, stream, &mut traj)?,
    }
    Ok(traj)
}

/// Two paths driven by one noise realisation. Both initial segments are
/// first put on a common grid so the trajectories share every node.
pub fn simulate_coupled(
    model: &ModelSpec,
    xi: &Segment,
    eta: &Segment,
    cfg: &SimConfig,
    stream: &NoiseStream,
) -> Result<(Trajectory, Trajectory)> {
    xi.compatible(eta)?;
    if xi.kind() != eta.kind() {
        return Err(domain("coupled initial segments must share an interpolation kind"));
    }
    let (a, b) = if xi.grid() == eta.grid() {
        (simulate(model, xi, cfg, stream)?, simulate(model, eta, cfg, stream)?)
    } else {
        let grid = union_grid(xi.grid(), eta.grid(), TIME_SNAP * xi.tau());
        (
            simulate(model, &refine(xi, &grid)?, cfg, stream)?,
            simulate(model, &refine(eta, &grid)?, cfg, stream)?,
        )
    };
    Ok((a, b))
}

pub fn extract_segment(traj: &Trajectory, t: f64, cfg: &SimConfig) -> Result<Segment> {
    traj.extract_segment(t, cfg.segment_points)
}

pub fn extract_segment_left(traj: &Trajectory, t: f64, cfg: &SimConfig) -> Result<Segment> {
    traj.extract_segment_left(t, cfg.segment_points)
}

fn check_initial(model: &ModelSpec, xi: &Segment) -> Result<()> {
    if xi.dim() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: xi.dim(),
        });
    }
    if (xi.tau() - model.tau()).abs() > TIME_SNAP * model.tau() {
        return Err(domain("initial segment window differs from the model's delay window"));
    }
    if model.class() != ModelClass::Jump && xi.kind() != Interp::ContinuousLinear {
        return Err(domain("retarded and neutral models need a continuous initial segment"));
    }
    Ok(())
}

fn union_grid(a: &[f64], b: &[f64], snap: f64) -> Vec<f64> {
    let mut g: Vec<f64> = a.iter().chain(b).copied().collect();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|x, y| (*x - *y).abs() <= snap);
    let last = g.len() - 1;
    g[last] = 0.0;
    g
}

/// Same path on a finer grid; exact for both interpolation kinds.
fn refine(seg: &Segment, grid: &[f64]) -> Result<Segment> {
    let dim = seg.dim();
    let snap = TIME_SNAP * seg.tau();
    let mut values = Vec::with_capacity(grid.len() * dim);
    let mut flags = Vec::with_capacity(grid.len());
    let mut v = vec![0.0; dim];
    for &t in grid {
        seg.eval_into(t, &mut v);
        values.extend_from_slice(&v);
        let k = seg.grid().partition_point(|&g| g <= t + snap).saturating_sub(1);
        flags.push((seg.grid()[k] - t).abs() <= snap && seg.jump_flags()[k]);
    }
    let flags = (seg.kind() == Interp::CadlagStep).then_some(flags);
    Segment::new(seg.kind(), grid.to_vec(), dim, values, flags)
}

fn history(model: &ModelSpec, xi: &Segment, cfg: &SimConfig) -> Trajectory {
    let dim = model.dim();
    let tau = model.tau();
    let kind = match model.class() {
        ModelClass::Jump => Interp::CadlagStep,
        _ => Interp::ContinuousLinear,
    };
    // A continuous history under step interpolation is sampled at least at
    // the step size.
    let grid: Vec<f64> = if kind == Interp::CadlagStep && xi.kind() == Interp::ContinuousLinear {
        let n = libm::round(tau / cfg.step) as usize + 1;
        union_grid(xi.grid(), &Segment::uniform_grid(tau, n), TIME_SNAP * tau)
    } else {
        xi.grid().to_vec()
    };
    let mut states = Vec::with_capacity((grid.len() + cfg.steps() + 1) * dim);
    let mut left = Vec::new();
    let mut flags = Vec::with_capacity(grid.len() + cfg.steps() + 1);
    let mut v = vec![0.0; dim];
    for &t in &grid {
        xi.eval_into(t, &mut v);
        states.extend_from_slice(&v);
        if kind == Interp::CadlagStep {
            let l = xi.evaluate_left(t).unwrap_or_else(|_| v.clone());
            left.extend_from_slice(&l);
        }
        let k = xi.grid().partition_point(|&g| g <= t + TIME_SNAP * tau).saturating_sub(1);
        flags.push(xi.kind() == Interp::CadlagStep && (xi.grid()[k] - t).abs() <= TIME_SNAP * tau && xi.jump_flags()[k]);
    }
    let origin = grid.len() - 1;
    Trajectory {
        class: model.class(),
        kind,
        dim,
        tau,
        times: grid,
        states,
        left,
        jump_flags: flags,
        jump_times: Vec::new(),
        origin,
        diverged_at: None,
        max_fixed_point_iterations: 0,
    }
}

impl Trajectory {
    fn push(&mut self, t: f64, x: &[f64], jump: bool) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.jump_flags.push(jump);
        if self.kind == Interp::CadlagStep {
            self.left.extend_from_slice(x);
        }
    }

    fn last_state(&self) -> Vec<f64> {
        self.state(self.len() - 1).to_vec()
    }

    fn view_now(&self) -> WindowView<'_> {
        WindowView::new(&self.times, &self.states, self.dim, self.tau, self.kind, self.end_time())
    }

    /// Marks divergence at the newest node and reports whether it fired.
    fn guard(&mut self, guard: f64) -> bool {
        let x = self.state(self.len() - 1);
        if x.iter().any(|v| !v.is_finite()) || norm(x) > guard {
            self.diverged_at = Some(self.end_time());
            return true;
        }
        false
    }
}

struct Buffers {
    drift: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
    next: Vec<f64>,
}

impl Buffers {
    fn new(n: usize, m: usize) -> Self {
        Self {
            drift: vec![0.0; n],
            sigma: vec![0.0; n * m],
            dw: vec![0.0; m],
            next: vec![0.0; n],
        }
    }

    /// `drift * h + sigma * dW` into `next`, on top of `base`.
    fn euler(&mut self, base: &[f64], h: f64) {
        let m = self.dw.len();
        for (i, out) in self.next.iter_mut().enumerate() {
            let noise: f64 = (0..m).map(|j| self.sigma[i * m + j] * self.dw[j]).sum();
            *out = base[i] + self.drift[i] * h + noise;
        }
    }
}

fn step_retarded(model: &ModelSpec, cfg: &SimConfig, stream: &NoiseStream, traj: &mut Trajectory) -> Result<()> {
    let (n, m) = (model.dim(), model.noise_dim());
    let h = cfg.step;
    let sqrt_h = libm::sqrt(h);
    let mut brownian = stream.brownian(m);
    let mut buf = Buffers::new(n, m);
    for k in 0..cfg.steps() {
        let t = k as f64 * h;
        {
            let view = traj.view_now();
            model.drift(t, &view, &mut buf.drift);
            model.diffusion(t, &view, &mut buf.sigma);
        }
        brownian.fill(k as u64, &mut buf.dw);
        buf.dw.iter_mut().for_each(|w| *w *= sqrt_h);
        let x = traj.last_state();
        buf.euler(&x, h);
        traj.push((k + 1) as f64 * h, &buf.next, false);
        if traj.guard(cfg.divergence_guard) {
            break;
        }
    }
    Ok(())
}

fn step_neutral(model: &ModelSpec, cfg: &SimConfig, stream: &NoiseStream, traj: &mut Trajectory) -> Result<()> {
    let (n, m) = (model.dim(), model.noise_dim());
    let h = cfg.step;
    let sqrt_h = libm::sqrt(h);
    let mut brownian = stream.brownian(m);
    let mut buf = Buffers::new(n, m);
    let mut g = vec![0.0; n];
    model.neutral_map(0.0, &traj.view_now(), &mut g);
    let mut y: Vec<f64> = traj.last_state().iter().zip(&g).map(|(x, g)| x - g).collect();
    for k in 0..cfg.steps() {
        let t = k as f64 * h;
        {
            let view = traj.view_now();
            model.drift(t, &view, &mut buf.drift);
            model.diffusion(t, &view, &mut buf.sigma);
        }
        brownian.fill(k as u64, &mut buf.dw);
        buf.dw.iter_mut().for_each(|w| *w *= sqrt_h);
        buf.euler(&y, h);
        y.copy_from_slice(&buf.next);

        let t_next = (k + 1) as f64 * h;
        let guess = traj.last_state();
        traj.push(t_next, &guess, false);
        let newest = traj.len() - 1;
        let mut iterations = 0;
        loop {
            iterations += 1;
            model.neutral_map(t_next, &traj.view_now(), &mut g);
            let mut residual: f64 = 0.0;
            let mut scale: f64 = 1.0;
            for i in 0..n {
                let x = y[i] + g[i];
                let slot = &mut traj.states[newest * n + i];
                residual = residual.max((x - *slot).abs());
                scale = scale.max(x.abs());
                *slot = x;
            }
            if !residual.is_finite() {
                break;
            }
            if residual <= cfg.fixed_point_tol.max(4.0 * f64::EPSILON * scale) {
                break;
            }
            if iterations >= cfg.fixed_point_max_iter {
                return Err(Error::FixedPoint { t: t_next, iterations });
            }
        }
        traj.max_fixed_point_iterations = traj.max_fixed_point_iterations.max(iterations);
        if traj.guard(cfg.divergence_guard) {
            break;
        }
    }
    Ok(())
}

fn step_jump(model: &ModelSpec, cfg: &SimConfig, stream: &NoiseStream, traj: &mut Trajectory) -> Result<()> {
    let n = model.dim();
    let h = cfg.step;
    let jump = model.jump_part().ok_or_else(|| domain("jump model without a jump part"))?;
    let atoms = sample_poisson_measure(jump.intensity, &jump.law, cfg.horizon, stream)?;
    let snap = TIME_SNAP * model.tau();
    let mut drift = vec![0.0; n];
    let mut comp = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut x = vec![0.0; n];

    // Compensated drift from the newest node to time `u`.
    let advance = |traj: &Trajectory, u: f64, drift: &mut [f64], comp: &mut [f64], out: &mut [f64]| {
        let s = traj.end_time();
        let view = traj.view_now();
        model.drift(s, &view, drift);
        model.compensator(s, &view, comp);
        let xs = traj.state(traj.len() - 1);
        for i in 0..out.len() {
            out[i] = xs[i] + (drift[i] - comp[i]) * (u - s);
        }
    };

    let mut next_atom = 0;
    'steps: for k in 0..cfg.steps() {
        let t_next = (k + 1) as f64 * h;
        let mut landed_on_node = false;
        while next_atom < atoms.len() && atoms[next_atom].0 <= t_next + snap {
            let (epoch, z) = atoms[next_atom];
            next_atom += 1;
            let at = if (epoch - t_next).abs() <= snap { t_next } else { epoch };
            if at <= traj.end_time() + snap {
                // Coincides with the node just written; jump there.
                let newest = traj.len() - 1;
                let pre = traj.state(newest).to_vec();
                apply_jump(model, traj, newest, &pre, z, &mut delta);
            } else {
                advance(traj, at, &mut drift, &mut comp, &mut x);
                traj.push(at, &x, false);
                let newest = traj.len() - 1;
                apply_jump(model, traj, newest, &x.clone(), z, &mut delta);
            }
            traj.jump_times.push(at);
            landed_on_node = at == t_next;
            if traj.guard(cfg.divergence_guard) {
                break 'steps;
            }
        }
        if !landed_on_node {
            advance(traj, t_next, &mut drift, &mut comp, &mut x);
            traj.push(t_next, &x, false);
            if traj.guard(cfg.divergence_guard) {
                break;
            }
        }
    }
    Ok(())
}

/// Adds `sigma(t, X_{t-}, z)` at node `k`, whose stored value is still the
/// pre-jump state.
fn apply_jump(model: &ModelSpec, traj: &mut Trajectory, k: usize, pre: &[f64], z: f64, delta: &mut [f64]) {
    let n = traj.dim;
    let t = traj.times[k];
    model.jump_coeff(t, &traj.view_now(), z, delta);
    for i in 0..n {
        traj.states[k * n + i] = pre[i] + delta[i];
        traj.left[k * n + i] = if traj.jump_flags[k] { traj.left[k * n + i] } else { pre[i] };
    }
    traj.jump_flags[k] = true;
}

/// Ensemble of independent paths from one initial segment; path `i` uses
/// substream `i` of the master seed.
pub fn simulate_ensemble(model: &ModelSpec, xi: &Segment, cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    crate::ensemble::ensemble_map(cfg.ensemble_size, |i| {
        simulate(model, xi, cfg, &NoiseStream::new(cfg.master_seed, i as u64))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{jump_linear, linear_retarded, neutral_linear, zero_model, DelaySpec, Matrix, MarkLaw};
    use crate::stats::{mean, standard_error};
    use alloc::sync::Arc;

    fn constant(value: f64) -> Segment {
        Segment::constant(Interp::ContinuousLinear, 1.0, 101, &[value]).unwrap()
    }

    #[test]
    fn zero_model_keeps_constant() {
        let m = zero_model(1, 1.0).unwrap();
        let cfg = SimConfig::new(0.01, 5.0);
        let tr = simulate(&m, &constant(2.5), &cfg, &NoiseStream::new(1, 0)).unwrap();
        assert!(tr.states().iter().all(|&v| v == 2.5));
        assert_eq!(tr.end_time(), 5.0);
    }

    #[test]
    fn pure_delay_method_of_steps() {
        // dX = X(t-1) dt: X = 1 + t on [0,1], 2 + (t^2 - 1)/2 on [1,2].
        let drift: crate::models::DriftFn = Arc::new(|_, phi, out: &mut [f64]| out[0] = phi.component(-1.0, 0));
        let diff: crate::models::DiffusionFn = Arc::new(|_, _, out: &mut [f64]| out[0] = 0.0);
        let m = ModelSpec::retarded(1, 1, 1.0, drift, diff).unwrap();
        let cfg = SimConfig::new(1e-3, 2.0);
        let tr = simulate(&m, &constant(1.0), &cfg, &NoiseStream::new(0, 0)).unwrap();
        let x1 = tr.evaluate(1.0).unwrap()[0];
        let x2 = tr.evaluate(2.0).unwrap()[0];
        assert!((x1 - 2.0).abs() < 5e-3, "{x1}");
        assert!((x2 - 3.5).abs() < 1e-2, "{x2}");
    }

    #[test]
    fn decay_ode() {
        let m = linear_retarded(1.0, 0.0, Matrix::scalar(0.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(1e-3, 3.0);
        let tr = simulate(&m, &constant(1.0), &cfg, &NoiseStream::new(0, 0)).unwrap();
        for t in [0.5, 1.0, 2.0, 3.0] {
            let x = tr.evaluate(t).unwrap()[0];
            assert!((x - libm::exp(-t)).abs() < 2e-3, "t={t}: {x}");
        }
    }

    #[test]
    fn reproducible_and_coupled() {
        let m = linear_retarded(3.0, 1.0, Matrix::scalar(0.5), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 3.0);
        let s = NoiseStream::new(11, 3);
        let a = simulate(&m, &constant(1.0), &cfg, &s).unwrap();
        let b = simulate(&m, &constant(1.0), &cfg, &s).unwrap();
        assert_eq!(a, b);
        let (c, d) = simulate_coupled(&m, &constant(0.3), &constant(0.3), &cfg, &s).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn deterministic_coupling_contracts() {
        let m = linear_retarded(3.0, 1.0, Matrix::scalar(0.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 6.0);
        let (a, b) = simulate_coupled(&m, &constant(1.0), &constant(-1.0), &cfg, &NoiseStream::new(0, 0)).unwrap();
        let at: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let d = a.sup_distance_series(&b, &at).unwrap();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    }

    #[test]
    fn neutral_fixed_point_budget() {
        let d = DelaySpec::distributed(1.0, alloc::vec![(-1.0, 0.5), (0.0, 0.5)]).unwrap();
        let m = neutral_linear(0.25, d, 3.0, 0.5, Matrix::scalar(0.5)).unwrap();
        let cfg = SimConfig::new(0.01, 5.0);
        let tr = simulate(&m, &constant(1.0), &cfg, &NoiseStream::new(2, 0)).unwrap();
        assert!(!tr.is_diverged());
        assert!(tr.max_fixed_point_iterations() <= 22, "{}", tr.max_fixed_point_iterations());
        assert!(tr.max_fixed_point_iterations() > 2);
    }

    #[test]
    fn neutral_relation_holds() {
        // X(t) - 0.25 X(t-1) equals the integrated right-hand side.
        let m = neutral_linear(0.25, DelaySpec::point(1.0).unwrap(), 3.0, 0.5, Matrix::scalar(0.0)).unwrap();
        let cfg = SimConfig::new(0.01, 2.0);
        let tr = simulate(&m, &constant(1.0), &cfg, &NoiseStream::new(0, 0)).unwrap();
        assert_eq!(tr.max_fixed_point_iterations(), 2);
        let y0 = 1.0 - 0.25;
        let y1 = tr.evaluate(0.01).unwrap()[0] - 0.25 * tr.evaluate(-0.99).unwrap()[0];
        // One Euler step of b = -3 * 1 + 0.5 * 1.
        assert!((y1 - (y0 + 0.01 * (-3.0 + 0.5))).abs() < 1e-14);
    }

    #[test]
    fn jump_epochs_are_nodes() {
        let m = jump_linear(3.0, 1.0, 0.3, 2.0, MarkLaw::Rademacher, DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 10.0);
        let xi = Segment::step(1.0, 0.0, &[]).unwrap();
        let tr = simulate(&m, &xi, &cfg, &NoiseStream::new(4, 0)).unwrap();
        assert!(!tr.jump_times().is_empty());
        for &e in tr.jump_times() {
            let post = tr.evaluate(e).unwrap()[0];
            let pre = tr.evaluate_left(e).unwrap()[0];
            assert!(((post - pre).abs() - 0.3).abs() < 1e-12);
            let s = tr.extract_segment(e, 101).unwrap();
            let l = tr.extract_segment_left(e, 101).unwrap();
            assert_eq!(s.evaluate(0.0).unwrap()[0], post);
            assert_eq!(l.evaluate(0.0).unwrap()[0], pre);
        }
    }

    #[test]
    fn additive_jumps_cancel_in_coupling() {
        let m = jump_linear(3.0, 1.0, 0.3, 2.0, MarkLaw::Rademacher, DelaySpec::point(1.0).unwrap()).unwrap();
        let det = linear_retarded(3.0, 1.0, Matrix::scalar(0.0), DelaySpec::point(1.0).unwrap()).unwrap();
        let cfg = SimConfig::new(0.01, 4.0);
        let xi = Segment::step(1.0, 1.0, &[]).unwrap();
        let eta = Segment::step(1.0, -1.0, &[]).unwrap();
        let (a, b) = simulate_coupled(&m, &xi, &eta, &cfg, &NoiseStream::new(8, 0)).unwrap();
        let (c, d) = simulate_coupled(&det, &constant(1.0), &constant(-1.0), &cfg, &NoiseStream::new(8, 0)).unwrap();
        for t in [1.0, 2.0, 3.0, 4.0] {
            let jd = a.evaluate(t).unwrap()[0] - b.evaluate(t).unwrap()[0];
            let dd = c.evaluate(t).unwrap()[0] - d.evaluate(t).unwrap()[0];
            // Jump nodes split drift steps, so the two grids agree only to O(h).
            assert!((jd - dd).abs() < 0.05 * dd.abs().max(1e-3), "t={t}: {jd} vs {dd}");
        }
    }

    #[test]
    fn compensated_martingale() {
        let m = jump_linear(3.0, 1.0, 0.3, 2.0, MarkLaw::Uniform { low: 0.0, high: 1.0 }, DelaySpec::point(1.0).unwrap())
            .unwrap();
        let cfg = SimConfig::new(0.01, 5.0);
        let xi = Segment::step(1.0, 0.5, &[]).unwrap();
        // X(t) - X(0) - int b ds is a compensated jump sum.
        let residuals: Vec<f64> = (0..2000)
            .map(|i| {
                let tr = simulate(&m, &xi, &cfg, &NoiseStream::new(21, i)).unwrap();
                let o = tr.origin();
                let mut integral = 0.0;
                let mut b = [0.0];
                for k in o..tr.len() - 1 {
                    let (s, u) = (tr.times()[k], tr.times()[k + 1]);
                    m.drift(s, &tr.view_at(s).unwrap(), &mut b);
                    integral += b[0] * (u - s);
                }
                tr.evaluate(5.0).unwrap()[0] - tr.state(o)[0] - integral
            })
            .collect();
        let (mu, se) = (mean(&residuals), standard_error(&residuals));
        assert!(mu.abs() < 3.0 * se, "{mu} +- {se}");
    }

    #[test]
    fn brownian_paths_uncorrelated() {
        let steps = 100_000u64;
        let mut a = NoiseStream::new(3, 0).brownian(1);
        let mut b = NoiseStream::new(3, 1).brownian(1);
        let (mut x, mut y) = ([0.0], [0.0]);
        let mut sxy = 0.0;
        let (mut sxx, mut syy) = (0.0, 0.0);
        for k in 0..steps {
            a.fill(k, &mut x);
            b.fill(k, &mut y);
            sxy += x[0] * y[0];
            sxx += x[0] * x[0];
            syy += y[0] * y[0];
        }
        let r = sxy / libm::sqrt(sxx * syy);
        assert!(r.abs() < 4.0 / libm::sqrt(steps as f64));
    }

    #[test]
    fn bad_configs_rejected() {
        let m = zero_model(1, 1.0).unwrap();
        let s = NoiseStream::new(0, 0);
        assert!(simulate(&m, &constant(0.0), &SimConfig::new(0.3, 3.0), &s).is_err());
        assert!(simulate(&m, &constant(0.0), &SimConfig::new(2.0, 4.0), &s).is_err());
        let step = Segment::step(1.0, 0.0, &[]).unwrap();
        assert!(simulate(&m, &step, &SimConfig::new(0.01, 1.0), &s).is_err());
    }
}
