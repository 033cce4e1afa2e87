//! Bracketing the Skorohod distance
//! `d_S(xi, eta) = inf_lambda max(||lambda||°, ||xi - eta∘lambda||_inf)`.
//!
//! The upper bound minimises over piecewise-linear time changes whose
//! breakpoints come from monotone matchings of the two jump sets, then
//! polishes the winner by coordinate search on a refinement grid of knots.
//! The lower bound combines conditions every admissible time change must
//! meet: fixed endpoints, preserved sup norm, and the requirement that each
//! jump of one path be met by a comparable jump of the other within the
//! time distortion allowed.

use alloc::vec;
use alloc::vec::Vec;

use super::{Segment, SegmentView, TimeChange};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    /// Knot spacing of the refinement grid, as a fraction of `tau`.
    pub resolution: f64,
    pub refine_rounds: usize,
    /// Largest jump count per segment for exhaustive matching.
    pub max_jumps: usize,
    /// Objective values closer than this are treated as ties.
    pub tolerance: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            refine_rounds: 3,
            max_jumps: 8,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkorohodBound {
    pub upper: f64,
    pub lower: f64,
    /// Time change attaining `upper`.
    pub time_change: TimeChange,
    pub time_distortion: f64,
    pub matched_sup: f64,
}

#[derive(Clone)]
struct Candidate {
    lambda: TimeChange,
    objective: f64,
    norm: f64,
    sup: f64,
}

impl Candidate {
    fn evaluate(xi: &Segment, eta: &Segment, lambda: TimeChange) -> Self {
        let norm = lambda.norm();
        let sup = matched_sup(xi, eta, &lambda);
        Self {
            objective: norm.max(sup),
            norm,
            sup,
            lambda,
        }
    }

    fn beats(&self, other: &Candidate, tol: f64) -> bool {
        self.objective < other.objective - tol
            || ((self.objective - other.objective).abs() <= tol && self.norm < other.norm)
    }
}

pub fn skorohod_distance(xi: &Segment, eta: &Segment, search: SearchParams) -> Result<SkorohodBound> {
    xi.compatible(eta)?;
    let tau = xi.tau;
    let tol = search.tolerance;

    let mut best = Candidate::evaluate(xi, eta, TimeChange::identity(tau));
    if best.objective > 0.0 {
        for lambda in matching_candidates(xi, eta, search.max_jumps) {
            let c = Candidate::evaluate(xi, eta, lambda);
            if c.beats(&best, tol) {
                best = c;
            }
        }
        if best.objective > 0.0 {
            best = refine(xi, eta, best, &search);
        }
    }

    let lower = lower_bound(xi, eta).min(best.objective);
    Ok(SkorohodBound {
        upper: best.objective,
        lower,
        time_distortion: best.norm,
        matched_sup: best.sup,
        time_change: best.lambda,
    })
}

/// `||xi - eta∘lambda||_inf`, checked on every point where either side can
/// change slope or level, from both sides.
fn matched_sup(xi: &Segment, eta: &Segment, lambda: &TimeChange) -> f64 {
    let mut pts: Vec<f64> = Vec::with_capacity(xi.len() + eta.len() + lambda.breakpoints().len());
    pts.extend_from_slice(xi.grid());
    pts.extend(eta.grid().iter().map(|&s| lambda.inverse(s)));
    pts.extend_from_slice(lambda.breakpoints());
    let mut best: f64 = 0.0;
    for &p in &pts {
        let q = lambda.apply(p);
        let mut right = 0.0;
        let mut left = 0.0;
        for i in 0..xi.dim {
            let d = xi.component(p, i) - eta.component(q, i);
            right += d * d;
            let dl = xi.left_component(p, i) - eta.left_component(q, i);
            left += dl * dl;
        }
        best = best.max(right).max(left);
    }
    libm::sqrt(best)
}

fn interior_jumps(seg: &Segment) -> Vec<f64> {
    seg.discontinuities()
        .into_iter()
        .map(|(t, _)| t)
        .filter(|&t| t > -seg.tau && t < 0.0)
        .collect()
}

/// Time changes sending a matched subset of `xi`'s jumps onto `eta`'s, in
/// order. Exhaustive when both jump sets are small; otherwise only the
/// rank-for-rank matching.
fn matching_candidates(xi: &Segment, eta: &Segment, max_jumps: usize) -> Vec<TimeChange> {
    let a = interior_jumps(xi);
    let b = interior_jumps(eta);
    let tau = xi.tau;
    let mut out = Vec::new();
    if a.is_empty() || b.is_empty() {
        return out;
    }
    let build = |pairs: &[(f64, f64)]| {
        let mut bp = vec![-tau];
        let mut im = vec![-tau];
        for &(x, y) in pairs {
            bp.push(x);
            im.push(y);
        }
        bp.push(0.0);
        im.push(0.0);
        TimeChange::new(bp, im).ok()
    };
    if a.len() <= max_jumps && b.len() <= max_jumps {
        let mut stack = Vec::new();
        enumerate(&a, &b, 0, 0, &mut stack, &mut |pairs| {
            if !pairs.is_empty() {
                out.extend(build(pairs));
            }
        });
    } else {
        let k = a.len().min(b.len());
        let pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).take(k).collect();
        out.extend(build(&pairs));
    }
    out
}

fn enumerate(
    a: &[f64],
    b: &[f64],
    i: usize,
    j: usize,
    stack: &mut Vec<(f64, f64)>,
    emit: &mut dyn FnMut(&[(f64, f64)]),
) {
    emit(stack);
    for ii in i..a.len() {
        for jj in j..b.len() {
            stack.push((a[ii], b[jj]));
            enumerate(a, b, ii + 1, jj + 1, stack, emit);
            stack.pop();
        }
    }
}

/// Coordinate search over the images of the breakpoints of `start`, after
/// adding knots on a uniform grid of spacing `resolution * tau`.
fn refine(xi: &Segment, eta: &Segment, start: Candidate, search: &SearchParams) -> Candidate {
    let tau = xi.tau;
    let res = search.resolution.clamp(1e-3, 1.0);
    let knots = (libm::ceil(1.0 / res) as usize).min(64);
    let mut bp: Vec<f64> = start.lambda.breakpoints().to_vec();
    for k in 1..knots {
        let t = -tau + tau * k as f64 / knots as f64;
        if bp.iter().all(|&b| (b - t).abs() > 1e-9 * tau) {
            bp.push(t);
        }
    }
    bp.sort_by(f64::total_cmp);
    let mut im: Vec<f64> = bp.iter().map(|&t| start.lambda.apply(t)).collect();
    let mut best = start;
    let step0 = res * tau;
    for _ in 0..search.refine_rounds {
        let mut improved = false;
        for i in 1..bp.len() - 1 {
            let mut s = step0;
            while s >= step0 / 64.0 {
                for sign in [1.0, -1.0] {
                    let cand = im[i] + sign * s;
                    if !(cand > im[i - 1] && cand < im[i + 1]) {
                        continue;
                    }
                    let old = im[i];
                    im[i] = cand;
                    let accepted = match TimeChange::new(bp.clone(), im.clone()) {
                        Ok(lambda) => {
                            let c = Candidate::evaluate(xi, eta, lambda);
                            if c.beats(&best, search.tolerance) {
                                best = c;
                                true
                            } else {
                                false
                            }
                        }
                        Err(_) => false,
                    };
                    if accepted {
                        improved = true;
                    } else {
                        im[i] = old;
                    }
                }
                s *= 0.5;
            }
        }
        if !improved {
            break;
        }
    }
    best
}

fn lower_bound(xi: &Segment, eta: &Segment) -> f64 {
    let tau = xi.tau;
    let mut lb: f64 = 0.0;
    for theta in [-tau, 0.0] {
        let mut d = 0.0;
        for i in 0..xi.dim {
            let x = xi.component(theta, i) - eta.component(theta, i);
            d += x * x;
        }
        lb = lb.max(libm::sqrt(d));
    }
    lb = lb.max((xi.sup_norm() - eta.sup_norm()).abs());
    let jx = xi.discontinuities();
    let je = eta.discontinuities();
    for &(a, h) in &jx {
        lb = lb.max(jump_bound(a, h, &je, tau));
    }
    for &(b, h) in &je {
        lb = lb.max(jump_bound(b, h, &jx, tau));
    }
    lb
}

/// Smallest `r` for which a time change with objective `r` could carry the
/// jump of size `height` at `at` onto a jump of the other path. Below `r`,
/// the matched sup distance would force a partner jump of size at least
/// `height - 2r` inside the window `lambda(at)` can reach.
fn jump_bound(at: f64, height: f64, others: &[(f64, f64)], tau: f64) -> f64 {
    let reachable = |b: f64, r: f64| {
        let (up, down) = (libm::exp(r), libm::exp(-r));
        let from_left = at + tau;
        let from_right = -at;
        let bl = b + tau;
        let br = -b;
        bl >= from_left * down && bl <= from_left * up && br >= from_right * down && br <= from_right * up
    };
    let feasible = |r: f64| {
        height - 2.0 * r <= 0.0 || others.iter().any(|&(b, h)| h >= height - 2.0 * r && reachable(b, r))
    };
    if feasible(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 0.5 * height);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}
