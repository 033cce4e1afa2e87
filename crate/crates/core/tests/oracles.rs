//! Library results against independently computed reference values.

use std::sync::Arc;

use sdde_core::engine::{simulate, SimConfig};
use sdde_core::models::ModelSpec;
use sdde_core::noise::NoiseStream;
use sdde_core::paths::{skorohod_distance, Interp, SearchParams, Segment};
use sdde_core::rates::halanay_rate;

/// Newton on `f(l) = l - a + b e^{l tau}` from `l = a - b`, where `f >= 0`;
/// `f` is convex and increasing, so the iterates fall monotonically.
fn halanay_newton(a: f64, b: f64, tau: f64) -> f64 {
    let mut l = a - b;
    for _ in 0..200 {
        let e = (l * tau).exp();
        let step = (l - a + b * e) / (1.0 + b * tau * e);
        l -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    l
}

#[test]
fn halanay_matches_newton() {
    // Frozen from the Newton iteration above.
    assert!((halanay_newton(2.0, 1.0, 1.0) - 0.442_854_401_002_388_6).abs() < 1e-13);
    let cases = [(2.0, 1.0, 1.0), (5.0, 1.0, 1.0), (1.0, 0.5, 3.0), (10.0, 9.9, 0.1), (0.3, 0.1, 5.0)];
    for (a, b, tau) in cases {
        let l = halanay_rate(a, b, tau).unwrap();
        assert!((l - halanay_newton(a, b, tau)).abs() < 1e-11, "{a} {b} {tau}");
    }
}

/// `x' = x(t - 1)` with unit history: `1 + t` on `[0, 1]`,
/// `2 + (t^2 - 1) / 2` on `[1, 2]`.
fn method_of_steps(t: f64) -> f64 {
    if t <= 1.0 {
        1.0 + t
    } else {
        2.0 + (t * t - 1.0) / 2.0
    }
}

fn pure_delay() -> ModelSpec {
    ModelSpec::retarded(
        1,
        1,
        1.0,
        Arc::new(|_, phi, out| out[0] = phi.component(-1.0, 0)),
        Arc::new(|_, _, out| out[0] = 0.0),
    )
    .unwrap()
}

#[test]
fn delay_ode_matches_method_of_steps() {
    let model = pure_delay();
    let xi = Segment::constant(Interp::ContinuousLinear, 1.0, 11, &[1.0]).unwrap();
    let cfg = SimConfig::new(1e-3, 2.0);
    let traj = simulate(&model, &xi, &cfg, &NoiseStream::new(0, 0)).unwrap();
    for t in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let x = traj.evaluate(t).unwrap()[0];
        // Forward Euler error is O(h) with a constant below 1 here.
        assert!((x - method_of_steps(t)).abs() < 2e-3, "t = {t}: {x}");
    }
}

#[test]
fn euler_error_halves_with_step() {
    let model = pure_delay();
    let xi = Segment::constant(Interp::ContinuousLinear, 1.0, 11, &[1.0]).unwrap();
    let err = |h: f64| {
        let traj = simulate(&model, &xi, &SimConfig::new(h, 2.0), &NoiseStream::new(0, 0)).unwrap();
        (traj.evaluate(2.0).unwrap()[0] - 3.5).abs()
    };
    let ratio = err(2e-3) / err(1e-3);
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
}

/// Sup of `|xi(t) - eta(lambda(t))|` on a dense grid plus the breakpoints.
fn dense_sup(xi: &Segment, eta: &Segment, knots: &[(f64, f64)]) -> f64 {
    let lambda = |t: f64| {
        for w in knots.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if t <= t1 {
                return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
            }
        }
        0.0
    };
    let mut sup: f64 = 0.0;
    let n = 4000;
    let times = (0..=n).map(|k| -1.0 + k as f64 / n as f64).chain(knots.iter().map(|k| k.0));
    for t in times {
        let d = xi.evaluate(t).unwrap()[0] - eta.evaluate(lambda(t)).unwrap()[0];
        sup = sup.max(d.abs());
    }
    sup
}

/// Minimum over time changes with at most three linear pieces whose
/// breakpoints and images lie on a grid of spacing 0.05.
fn brute_force_skorohod(xi: &Segment, eta: &Segment) -> f64 {
    let grid: Vec<f64> = (1..20).map(|k| -1.0 + 0.05 * k as f64).collect();
    let cost = |knots: &[(f64, f64)]| {
        let norm = knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).ln().abs())
            .fold(0.0, f64::max);
        norm.max(dense_sup(xi, eta, knots))
    };
    let mut best = cost(&[(-1.0, -1.0), (0.0, 0.0)]);
    for (i, &t1) in grid.iter().enumerate() {
        for (j, &s1) in grid.iter().enumerate() {
            best = best.min(cost(&[(-1.0, -1.0), (t1, s1), (0.0, 0.0)]));
            for &t2 in &grid[i + 1..] {
                for &s2 in &grid[j + 1..] {
                    let knots = [(-1.0, -1.0), (t1, s1), (t2, s2), (0.0, 0.0)];
                    // Cheap prune on the time distortion before the dense sup.
                    let norm = knots
                        .windows(2)
                        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).ln().abs())
                        .fold(0.0, f64::max);
                    if norm < best {
                        best = best.min(cost(&knots));
                    }
                }
            }
        }
    }
    best
}

#[test]
fn shifted_indicators_match_brute_force() {
    let xi = Segment::step(1.0, 0.0, &[(-0.5, 1.0)]).unwrap();
    let eta = Segment::step(1.0, 0.0, &[(-0.4, 1.0)]).unwrap();
    let oracle = brute_force_skorohod(&xi, &eta);
    assert!((oracle - 1.25f64.ln()).abs() < 1e-12, "{oracle}");
    let d = skorohod_distance(&xi, &eta, SearchParams::default()).unwrap();
    assert!((d.upper - oracle).abs() < 1e-3);
    assert!(d.lower <= d.upper);
}

#[test]
fn two_jump_pair_matches_brute_force() {
    let xi = Segment::step(1.0, 0.0, &[(-0.7, 1.0), (-0.3, 0.5)]).unwrap();
    let eta = Segment::step(1.0, 0.0, &[(-0.6, 1.0), (-0.35, 0.5)]).unwrap();
    let oracle = brute_force_skorohod(&xi, &eta);
    let d = skorohod_distance(&xi, &eta, SearchParams::default()).unwrap();
    // The library searches a superset of these time changes.
    assert!(d.upper <= oracle + 1e-9, "{} vs {oracle}", d.upper);
    assert!(d.lower <= d.upper);
}
