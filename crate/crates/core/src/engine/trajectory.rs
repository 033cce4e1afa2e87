use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::models::ModelClass;
use crate::paths::{dist, norm, Interp, Segment, SegmentView, TIME_SNAP};

/// Discretised solution on `[-tau, T]`.
///
/// Nodes before `origin` are the initial segment; after it they step by
/// `h`, with extra nodes at jump epochs. Cadlag trajectories also keep the
/// left limit at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub(crate) class: ModelClass,
    pub(crate) kind: Interp,
    pub(crate) dim: usize,
    pub(crate) tau: f64,
    pub(crate) times: Vec<f64>,
    pub(crate) states: Vec<f64>,
    pub(crate) left: Vec<f64>,
    pub(crate) jump_flags: Vec<bool>,
    pub(crate) jump_times: Vec<f64>,
    pub(crate) origin: usize,
    pub(crate) diverged_at: Option<f64>,
    pub(crate) max_fixed_point_iterations: usize,
}

impl Trajectory {
    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn kind(&self) -> Interp {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    /// `X(t_k-)`.
    pub fn left_state(&self, k: usize) -> &[f64] {
        match self.kind {
            Interp::ContinuousLinear => self.state(k),
            Interp::CadlagStep => &self.left[k * self.dim..(k + 1) * self.dim],
        }
    }

    pub fn jump_flags(&self) -> &[bool] {
        &self.jump_flags
    }

    /// Poisson epochs in `(0, T]`.
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the node at `t = 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Last simulated time.
    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// First time the divergence guard fired; the trajectory stops there.
    pub fn diverged_at(&self) -> Option<f64> {
        self.diverged_at
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Largest number of neutral-map evaluations any step needed.
    pub fn max_fixed_point_iterations(&self) -> usize {
        self.max_fixed_point_iterations
    }

    fn snap(&self) -> f64 {
        TIME_SNAP * self.tau
    }

    fn check_time(&self, s: f64) -> Result<()> {
        let snap = self.snap();
        if s.is_nan() || s < -self.tau - snap || s > self.end_time() + snap {
            return Err(domain("time outside the simulated range"));
        }
        Ok(())
    }

    /// `X(s)` for `s` in `[-tau, T]`.
    pub fn evaluate(&self, s: f64) -> Result<Vec<f64>> {
        self.check_time(s)?;
        let mut out = vec![0.0; self.dim];
        lookup(&self.times, &self.states, self.dim, self.kind, s, self.snap(), &mut out);
        Ok(out)
    }

    /// `X(s-)`.
    pub fn evaluate_left(&self, s: f64) -> Result<Vec<f64>> {
        self.check_time(s)?;
        let mut out = vec![0.0; self.dim];
        self.left_into(s, &mut out);
        Ok(out)
    }

    fn left_into(&self, s: f64, out: &mut [f64]) {
        let snap = self.snap();
        if self.kind == Interp::CadlagStep {
            let k = node_at_or_before(&self.times, s, snap);
            if k > 0 && (self.times[k] - s).abs() <= snap {
                out.copy_from_slice(self.left_state(k));
                return;
            }
        }
        lookup(&self.times, &self.states, self.dim, self.kind, s, snap, out);
    }

    /// The segment `X_t` as a view, without copying.
    pub fn view_at(&self, t: f64) -> Result<WindowView<'_>> {
        if !(t >= -self.snap() && t <= self.end_time() + self.snap()) {
            return Err(domain("segment time outside [0, T]"));
        }
        Ok(WindowView::new(&self.times, &self.states, self.dim, self.tau, self.kind, t))
    }

    /// `X_t` resampled on a uniform grid of `points` nodes.
    pub fn extract_segment(&self, t: f64, points: usize) -> Result<Segment> {
        self.extract(t, points, false)
    }

    /// `X_{t-}`: the same grid, with left limits at every grid point.
    pub fn extract_segment_left(&self, t: f64, points: usize) -> Result<Segment> {
        self.extract(t, points, true)
    }

    fn extract(&self, t: f64, points: usize, left: bool) -> Result<Segment> {
        if !(t >= -self.snap() && t <= self.end_time() + self.snap()) {
            return Err(domain("segment time outside [0, T]"));
        }
        let snap = self.snap();
        let grid = Segment::uniform_grid(self.tau, points);
        let mut values = vec![0.0; grid.len() * self.dim];
        let mut flags = vec![false; grid.len()];
        for (j, &theta) in grid.iter().enumerate() {
            let s = t + theta;
            let out = &mut values[j * self.dim..(j + 1) * self.dim];
            if left {
                self.left_into(s, out);
            } else {
                lookup(&self.times, &self.states, self.dim, self.kind, s, snap, out);
            }
            if self.kind == Interp::CadlagStep && j > 0 {
                let lo = self.times.partition_point(|&x| x <= t + grid[j - 1] + snap);
                let hi = self.times.partition_point(|&x| x <= s + snap);
                flags[j] = self.jump_flags[lo..hi].iter().any(|&f| f);
            }
        }
        let flags = (self.kind == Interp::CadlagStep).then_some(flags);
        Segment::new(self.kind, grid, self.dim, values, flags)
    }

    /// `X_t` on the trajectory's own nodes in `[t - tau, t]`, so no jump
    /// epoch is moved.
    pub fn native_segment(&self, t: f64) -> Result<Segment> {
        if !(t >= -self.snap() && t <= self.end_time() + self.snap()) {
            return Err(domain("segment time outside [0, T]"));
        }
        let snap = self.snap();
        let start = t - self.tau;
        let lo = node_at_or_before(&self.times, start, snap);
        let hi = node_at_or_before(&self.times, t, snap);
        let mut grid = vec![-self.tau];
        let mut values = vec![0.0; self.dim];
        lookup(&self.times, &self.states, self.dim, self.kind, start, snap, &mut values);
        let mut flags = vec![false];
        for k in lo..=hi {
            let theta = self.times[k] - t;
            if theta <= -self.tau + snap {
                continue;
            }
            grid.push(theta.min(0.0));
            values.extend_from_slice(self.state(k));
            flags.push(self.jump_flags[k]);
        }
        if *grid.last().unwrap() < -snap {
            grid.push(0.0);
            let mut v = vec![0.0; self.dim];
            lookup(&self.times, &self.states, self.dim, self.kind, t, snap, &mut v);
            values.extend_from_slice(&v);
            flags.push(false);
        }
        let last = grid.len() - 1;
        grid[last] = 0.0;
        let flags = (self.kind == Interp::CadlagStep).then_some(flags);
        Segment::new(self.kind, grid, self.dim, values, flags)
    }

    /// `||X_t - Y_t||_inf` at each of the increasing times `at`, for two
    /// trajectories on the same nodes (as produced by a coupled run).
    pub fn sup_distance_series(&self, other: &Trajectory, at: &[f64]) -> Result<Vec<f64>> {
        if self.dim != other.dim || self.kind != other.kind {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        let n = self.len().min(other.len());
        if self.times[..n] != other.times[..n] {
            return at
                .iter()
                .map(|&t| self.native_segment(t)?.sup_distance(&other.native_segment(t)?))
                .collect();
        }
        let snap = self.snap();
        let end = self.times[n - 1];
        let d: Vec<f64> = (0..n).map(|k| dist(self.state(k), other.state(k))).collect();
        let mut out = Vec::with_capacity(at.len());
        let mut window: VecDeque<usize> = VecDeque::new();
        let mut next = 0;
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        for &t in at {
            if t > end + snap {
                return Err(domain("distance requested past the end of a trajectory"));
            }
            let hi = node_at_or_before(&self.times[..n], t, snap);
            while next <= hi {
                while window.back().is_some_and(|&j| d[j] <= d[next]) {
                    window.pop_back();
                }
                window.push_back(next);
                next += 1;
            }
            let start = t - self.tau;
            while window.front().is_some_and(|&j| self.times[j] < start - snap) {
                window.pop_front();
            }
            let mut best = window.front().map_or(0.0, |&j| d[j]);
            // The window's left edge and right edge fall between nodes in general.
            for s in [start, t] {
                lookup(&self.times[..n], &self.states, self.dim, self.kind, s, snap, &mut a);
                lookup(&other.times[..n], &other.states, self.dim, self.kind, s, snap, &mut b);
                best = best.max(dist(&a, &b));
            }
            out.push(best);
        }
        Ok(out)
    }
}

/// Greatest node index with `times[k] <= s + snap`, clamped to the slice.
pub(crate) fn node_at_or_before(times: &[f64], s: f64, snap: f64) -> usize {
    times.partition_point(|&x| x <= s + snap).saturating_sub(1).min(times.len() - 1)
}

pub(crate) fn lookup(times: &[f64], states: &[f64], dim: usize, kind: Interp, s: f64, snap: f64, out: &mut [f64]) {
    let k = node_at_or_before(times, s, snap);
    let here = &states[k * dim..(k + 1) * dim];
    if kind == Interp::CadlagStep || k + 1 >= times.len() {
        out.copy_from_slice(here);
        return;
    }
    let w = ((s - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0);
    if w == 0.0 {
        out.copy_from_slice(here);
        return;
    }
    let next = &states[(k + 1) * dim..(k + 2) * dim];
    for ((o, h), n) in out.iter_mut().zip(here).zip(next) {
        *o = h + w * (n - h);
    }
}

/// The segment `X_t` read straight from trajectory storage. Every node up
/// to and including `t` must already be final.
pub struct WindowView<'a> {
    times: &'a [f64],
    states: &'a [f64],
    dim: usize,
    tau: f64,
    kind: Interp,
    now: f64,
}

impl<'a> WindowView<'a> {
    pub(crate) fn new(times: &'a [f64], states: &'a [f64], dim: usize, tau: f64, kind: Interp, now: f64) -> Self {
        Self {
            times,
            states,
            dim,
            tau,
            kind,
            now,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }
}

impl SegmentView for WindowView<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn component(&self, theta: f64, i: usize) -> f64 {
        let s = self.now + theta.clamp(-self.tau, 0.0);
        let snap = TIME_SNAP * self.tau;
        let k = node_at_or_before(self.times, s, snap);
        let here = self.states[k * self.dim + i];
        if self.kind == Interp::CadlagStep || k + 1 >= self.times.len() {
            return here;
        }
        let w = ((s - self.times[k]) / (self.times[k + 1] - self.times[k])).clamp(0.0, 1.0);
        if w == 0.0 {
            return here;
        }
        here + w * (self.states[(k + 1) * self.dim + i] - here)
    }

    fn sup_norm(&self) -> f64 {
        let snap = TIME_SNAP * self.tau;
        let lo = node_at_or_before(self.times, self.now - self.tau, snap);
        let hi = node_at_or_before(self.times, self.now, snap);
        let mut v = vec![0.0; self.dim];
        self.eval_into(-self.tau, &mut v);
        let mut best = norm(&v);
        self.eval_into(0.0, &mut v);
        best = best.max(norm(&v));
        for k in lo + 1..=hi {
            best = best.max(norm(&self.states[k * self.dim..(k + 1) * self.dim]));
        }
        best
    }
}
