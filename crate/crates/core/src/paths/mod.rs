//! Paths over the delay window `[-tau, 0]`.
//!
//! A [`Segment`] stores an explicit grid. Continuous segments interpolate
//! linearly between grid points; cadlag segments hold the value of the
//! greatest grid point at or before the query time. Both disciplines put the
//! extrema of `|f|` and of `|f - g|` on grid points (or their left limits),
//! which keeps norms exact.

mod skorohod;
mod time_change;

pub use skorohod::{skorohod_distance, SearchParams, SkorohodBound};
pub use time_change::{homeomorphism_norm, TimeChange};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};

/// Relative slack when snapping query times onto grid points.
pub(crate) const TIME_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    ContinuousLinear,
    CadlagStep,
}

/// Read access to a path restricted to `[-tau, 0]`.
///
/// Coefficient maps receive a `&dyn SegmentView` so the engine can hand out
/// windows into a running trajectory without copying. Queries outside
/// `[-tau, 0]` are clamped.
pub trait SegmentView {
    fn dim(&self) -> usize;
    fn tau(&self) -> f64;
    /// Component `i` of the path at `theta`.
    fn component(&self, theta: f64, i: usize) -> f64;
    /// `sup_{theta} |phi(theta)|` with the Euclidean norm.
    fn sup_norm(&self) -> f64;

    fn eval_into(&self, theta: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.component(theta, i);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    kind: Interp,
    tau: f64,
    dim: usize,
    grid: Vec<f64>,
    values: Vec<f64>,
    jumps: Vec<bool>,
}

impl Segment {
    /// Builds a segment from a grid and row-major values (`dim` entries per
    /// grid point). `jumps` may only flag points of a cadlag segment.
    pub fn new(
        kind: Interp,
        grid: Vec<f64>,
        dim: usize,
        values: Vec<f64>,
        jumps: Option<Vec<bool>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(domain("segment dimension must be at least 1"));
        }
        if grid.len() < 2 {
            return Err(domain("segment grid needs at least two points"));
        }
        let mut grid = grid;
        let tau = -grid[0];
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain("segment grid must start at -tau with tau > 0"));
        }
        let last = grid.len() - 1;
        if grid[last].abs() > TIME_SNAP * tau {
            return Err(domain("segment grid must end at 0"));
        }
        grid[last] = 0.0;
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("segment grid must be strictly increasing"));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::Dimension {
                expected: grid.len() * dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("segment values must be finite"));
        }
        let jumps = match jumps {
            Some(j) => {
                if j.len() != grid.len() {
                    return Err(Error::Dimension {
                        expected: grid.len(),
                        got: j.len(),
                    });
                }
                if kind == Interp::ContinuousLinear && j.iter().any(|&f| f) {
                    return Err(domain("continuous segments cannot carry jump flags"));
                }
                j
            }
            None => vec![false; grid.len()],
        };
        Ok(Self {
            kind,
            tau,
            dim,
            grid,
            values,
            jumps,
        })
    }

    /// Scalar segment from a grid and one value per grid point.
    pub fn scalar(kind: Interp, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(kind, grid, 1, values, None)
    }

    /// Evenly spaced grid of `points` nodes on `[-tau, 0]`.
    pub fn uniform_grid(tau: f64, points: usize) -> Vec<f64> {
        let n = points.max(2) - 1;
        (0..=n)
            .map(|k| if k == n { 0.0 } else { -tau + tau * k as f64 / n as f64 })
            .collect()
    }

    pub fn constant(kind: Interp, tau: f64, points: usize, value: &[f64]) -> Result<Self> {
        let grid = Self::uniform_grid(tau, points);
        let values = grid.iter().flat_map(|_| value.iter().copied()).collect();
        Self::new(kind, grid, value.len(), values, None)
    }

    /// Samples `f(theta, out)` on a uniform grid.
    pub fn from_fn(
        kind: Interp,
        tau: f64,
        points: usize,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Result<Self> {
        let grid = Self::uniform_grid(tau, points);
        let mut values = vec![0.0; grid.len() * dim];
        for (k, &t) in grid.iter().enumerate() {
            f(t, &mut values[k * dim..(k + 1) * dim]);
        }
        Self::new(kind, grid, dim, values, None)
    }

    /// Scalar cadlag step path: value `initial` on `[-tau, first jump)`, then
    /// the listed `(time, value)` levels. Jump times must lie in `(-tau, 0]`.
    pub fn step(tau: f64, initial: f64, levels: &[(f64, f64)]) -> Result<Self> {
        let mut grid = vec![-tau];
        let mut values = vec![initial];
        let mut jumps = vec![false];
        for &(t, v) in levels {
            if t < 0.0 {
                grid.push(t);
                values.push(v);
                jumps.push(true);
            }
        }
        match levels.last() {
            Some(&(t, v)) if t >= 0.0 => {
                grid.push(0.0);
                values.push(v);
                jumps.push(true);
            }
            _ => {
                let v = *values.last().unwrap();
                grid.push(0.0);
                values.push(v);
                jumps.push(false);
            }
        }
        Self::new(Interp::CadlagStep, grid, 1, values, Some(jumps))
    }

    pub fn kind(&self) -> Interp {
        self.kind
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jump_flags(&self) -> &[bool] {
        &self.jumps
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value stored at grid point `k`.
    pub fn value_at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of the greatest grid point `<= theta` (clamped to the grid).
    fn locate(&self, theta: f64) -> usize {
        let snap = TIME_SNAP * self.tau;
        let k = self.grid.partition_point(|&g| g <= theta + snap);
        k.saturating_sub(1).min(self.grid.len() - 1)
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        let slack = TIME_SNAP * self.tau;
        if theta.is_nan() || theta < -self.tau - slack || theta > slack {
            return Err(domain("evaluation time outside [-tau, 0]"));
        }
        Ok(())
    }

    pub fn evaluate(&self, theta: f64) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let mut out = vec![0.0; self.dim];
        self.eval_into(theta, &mut out);
        Ok(out)
    }

    /// Left limit `phi(theta-)`. Continuous segments return `phi(theta)`.
    pub fn evaluate_left(&self, theta: f64) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let mut out = vec![0.0; self.dim];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.left_component(theta, i);
        }
        Ok(out)
    }

    pub(crate) fn left_component(&self, theta: f64, i: usize) -> f64 {
        match self.kind {
            Interp::ContinuousLinear => self.component(theta, i),
            Interp::CadlagStep => {
                let k = self.locate(theta);
                let on_node = (self.grid[k] - theta).abs() <= TIME_SNAP * self.tau;
                let k = if on_node && k > 0 { k - 1 } else { k };
                self.values[k * self.dim + i]
            }
        }
    }

    /// `sup |phi(theta)|` over the window.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// `sup_{|s-t| <= delta} |phi(s) - phi(t)|`.
    ///
    /// Exact for both interpolation kinds. For a continuous segment the
    /// difference is affine on every cell of the `(s, t)` plane, so the
    /// supremum sits on a vertex: two grid points, or a grid point paired
    /// with its `delta`-shift. For a cadlag segment two levels are reachable
    /// whenever the gap between their intervals is shorter than `delta`.
    pub fn modulus_of_continuity(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(domain("modulus of continuity needs delta > 0"));
        }
        let n = self.grid.len();
        let mut best: f64 = 0.0;
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        match self.kind {
            Interp::ContinuousLinear => {
                for i in 0..n {
                    let gi = self.grid[i];
                    let xi = self.value_at(i);
                    for j in i + 1..n {
                        if self.grid[j] - gi > delta {
                            break;
                        }
                        best = best.max(dist(xi, self.value_at(j)));
                    }
                    // Pair each grid point with its forward and backward shift.
                    let fwd = gi + delta;
                    if fwd <= 0.0 {
                        self.eval_into(fwd, &mut a);
                        best = best.max(dist(xi, &a));
                    } else {
                        best = best.max(dist(xi, self.value_at(n - 1)));
                    }
                    let back = gi - delta;
                    if back >= -self.tau {
                        self.eval_into(back, &mut b);
                        best = best.max(dist(xi, &b));
                    } else {
                        best = best.max(dist(xi, self.value_at(0)));
                    }
                }
            }
            Interp::CadlagStep => {
                // Level k lives on [grid[k], grid[k+1]); the last level is the point {0}.
                for i in 0..n {
                    let end_i = if i + 1 < n { self.grid[i + 1] } else { 0.0 };
                    for j in i + 1..n {
                        let reachable = j == i + 1 || self.grid[j] - end_i < delta;
                        if !reachable {
                            break;
                        }
                        best = best.max(dist(self.value_at(i), self.value_at(j)));
                    }
                }
            }
        }
        Ok(best)
    }

    /// Uniform distance `sup |xi - eta|`, exact on the union of both grids
    /// including left limits.
    pub fn sup_distance(&self, other: &Segment) -> Result<f64> {
        self.compatible(other)?;
        let mut pts: Vec<f64> = self.grid.iter().chain(other.grid.iter()).copied().collect();
        pts.sort_by(f64::total_cmp);
        let mut best: f64 = 0.0;
        for &p in &pts {
            let mut right = 0.0;
            let mut left = 0.0;
            for i in 0..self.dim {
                let d = self.component(p, i) - other.component(p, i);
                right += d * d;
                let dl = self.left_component(p, i) - other.left_component(p, i);
                left += dl * dl;
            }
            best = best.max(libm::sqrt(right)).max(libm::sqrt(left));
        }
        Ok(best)
    }

    pub(crate) fn compatible(&self, other: &Segment) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        if (self.tau - other.tau).abs() > TIME_SNAP * self.tau {
            return Err(domain("segments live on different windows"));
        }
        Ok(())
    }

    /// Interior grid points where a cadlag segment changes value, with the
    /// size of the jump. Continuous segments have none.
    pub fn discontinuities(&self) -> Vec<(f64, f64)> {
        if self.kind == Interp::ContinuousLinear {
            return Vec::new();
        }
        (1..self.grid.len())
            .filter_map(|k| {
                let h = dist(self.value_at(k - 1), self.value_at(k));
                (h > 0.0).then_some((self.grid[k], h))
            })
            .collect()
    }
}

impl SegmentView for Segment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn component(&self, theta: f64, i: usize) -> f64 {
        let theta = theta.clamp(-self.tau, 0.0);
        let k = self.locate(theta);
        let here = self.values[k * self.dim + i];
        match self.kind {
            Interp::CadlagStep => here,
            Interp::ContinuousLinear => {
                if k + 1 >= self.grid.len() {
                    return here;
                }
                let (t0, t1) = (self.grid[k], self.grid[k + 1]);
                let w = ((theta - t0) / (t1 - t0)).clamp(0.0, 1.0);
                if w == 0.0 {
                    return here;
                }
                let next = self.values[(k + 1) * self.dim + i];
                here + w * (next - here)
            }
        }
    }

    fn sup_norm(&self) -> f64 {
        Segment::sup_norm(self)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Segment {
        Segment::from_fn(Interp::ContinuousLinear, 1.0, 101, 1, |t, v| v[0] = t).unwrap()
    }

    #[test]
    fn linear_midpoint() {
        let s = Segment::scalar(Interp::ContinuousLinear, vec![-1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(s.evaluate(-0.5).unwrap(), vec![0.5]);
    }

    #[test]
    fn step_is_right_continuous() {
        let s = Segment::step(1.0, 0.0, &[(-0.5, 1.0)]).unwrap();
        assert_eq!(s.evaluate(-0.5).unwrap(), vec![1.0]);
        assert_eq!(s.evaluate_left(-0.5).unwrap(), vec![0.0]);
        assert_eq!(s.evaluate(-0.6).unwrap(), vec![0.0]);
    }

    #[test]
    fn endpoint_returns_last_value() {
        let s = Segment::scalar(Interp::ContinuousLinear, vec![-1.0, -0.3, 0.0], vec![4.0, 2.0, 7.0])
            .unwrap();
        assert_eq!(s.evaluate(0.0).unwrap(), vec![7.0]);
    }

    #[test]
    fn out_of_window_is_domain_error() {
        let s = ramp();
        assert!(matches!(s.evaluate(0.1), Err(Error::Domain(_))));
        assert!(matches!(s.evaluate(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn sup_norm_examples() {
        let c = Segment::constant(Interp::ContinuousLinear, 1.0, 5, &[3.0, -4.0]).unwrap();
        assert_eq!(c.sup_norm(), 5.0);
        let s = Segment::scalar(Interp::ContinuousLinear, vec![-1.0, -0.5, 0.0], vec![1.0, -2.0, 0.5])
            .unwrap();
        assert_eq!(s.sup_norm(), 2.0);
        assert_eq!(ramp().sup_norm(), 1.0);
    }

    #[test]
    fn modulus_examples() {
        assert!((ramp().modulus_of_continuity(0.1).unwrap() - 0.1).abs() < 1e-12);
        let c = Segment::constant(Interp::ContinuousLinear, 1.0, 11, &[2.0]).unwrap();
        assert_eq!(c.modulus_of_continuity(0.3).unwrap(), 0.0);
        let s = Segment::step(1.0, 0.0, &[(-0.5, 1.0)]).unwrap();
        assert_eq!(s.modulus_of_continuity(0.01).unwrap(), 1.0);
        assert!(matches!(c.modulus_of_continuity(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn modulus_between_grid_points() {
        // Tent of height 1 on a coarse grid: any window of width 0.25 that
        // straddles the peak sees at most 0.5.
        let s = Segment::scalar(
            Interp::ContinuousLinear,
            vec![-1.0, -0.5, 0.0],
            vec![0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!((s.modulus_of_continuity(0.25).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Segment::scalar(Interp::ContinuousLinear, vec![-1.0, -1.0, 0.0], vec![0.0; 3]).is_err());
        assert!(Segment::scalar(Interp::ContinuousLinear, vec![-1.0, -0.2], vec![0.0; 2]).is_err());
        assert!(Segment::scalar(Interp::ContinuousLinear, vec![-1.0, 0.0], vec![0.0, f64::NAN]).is_err());
        assert!(Segment::new(Interp::ContinuousLinear, vec![-1.0, 0.0], 1, vec![0.0, 1.0], Some(vec![false, true])).is_err());
    }

    #[test]
    fn sup_distance_sees_left_limits() {
        let a = Segment::step(1.0, 0.0, &[(-0.5, 1.0)]).unwrap();
        let b = Segment::step(1.0, 0.0, &[(-0.4, 1.0)]).unwrap();
        assert_eq!(a.sup_distance(&b).unwrap(), 1.0);
        assert_eq!(a.sup_distance(&a).unwrap(), 0.0);
    }
}
