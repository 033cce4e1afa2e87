//! Constant fitting for one-sided dissipativity inequalities of the form
//! `lhs <= -alpha1 * a + alpha2 * r` over sampled triples.

/// One sampled triple reduced to the three scalars the inequality needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Left-hand side.
    pub lhs: f64,
    /// Coefficient of `alpha1` (the present-value term).
    pub a: f64,
    /// Coefficient of `alpha2` (the sup-over-window term).
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitOutcome {
    Feasible { alpha1: f64, alpha2: f64 },
    Infeasible,
}

/// Largest admissible `alpha1` for a given `alpha2`.
pub(crate) fn envelope(samples: &[Sample], alpha2: f64) -> f64 {
    samples
        .iter()
        .filter(|s| s.a > 0.0)
        .map(|s| (alpha2 * s.r - s.lhs) / s.a)
        .fold(f64::INFINITY, f64::min)
}

/// Samples with a vanishing present value pin a lower bound on `alpha2`.
fn alpha2_floor(samples: &[Sample]) -> Option<f64> {
    let mut lo: f64 = 0.0;
    for s in samples.iter().filter(|s| !(s.a > 0.0)) {
        if s.r > 0.0 {
            lo = lo.max(s.lhs / s.r);
        } else if s.lhs > 0.0 {
            return None;
        }
    }
    Some(lo)
}

/// Maximises `alpha1 - weight * alpha2` over the feasible set, breaking ties
/// towards the smallest `alpha2`.
///
/// The envelope is a minimum of affine maps, so the objective is concave:
/// golden-section search finds the maximum and bisection finds the left end
/// of the plateau.
pub fn fit_dissipativity(samples: &[Sample], weight: f64) -> FitOutcome {
    let Some(lo) = alpha2_floor(samples) else {
        return FitOutcome::Infeasible;
    };
    if samples.iter().all(|s| !(s.a > 0.0)) {
        return FitOutcome::Infeasible;
    }
    let g = |x: f64| envelope(samples, x) - weight * x;

    let mut hi = lo + 1.0;
    for _ in 0..80 {
        if g(2.0 * hi) <= g(hi) {
            break;
        }
        hi *= 2.0;
    }
    let hi = 2.0 * hi;

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut x0, mut x1) = (lo, hi);
    let mut c = x1 - INV_PHI * (x1 - x0);
    let mut d = x0 + INV_PHI * (x1 - x0);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if gc >= gd {
            x1 = d;
            d = c;
            gd = gc;
            c = x1 - INV_PHI * (x1 - x0);
            gc = g(c);
        } else {
            x0 = c;
            c = d;
            gc = gd;
            d = x0 + INV_PHI * (x1 - x0);
            gd = g(d);
        }
        if x1 - x0 <= 1e-14 * (1.0 + x1.abs()) {
            break;
        }
    }
    let mut best = 0.5 * (x0 + x1);
    let mut g_best = g(best);
    if g(lo) >= g_best {
        best = lo;
        g_best = g(lo);
    }
    if !g_best.is_finite() {
        return FitOutcome::Infeasible;
    }

    let level = g_best - 1e-9 * g_best.abs().max(1.0);
    let (mut left, mut right) = (lo, best);
    if g(left) < level {
        for _ in 0..200 {
            let mid = 0.5 * (left + right);
            if g(mid) >= level {
                right = mid;
            } else {
                left = mid;
            }
            if right - left <= 1e-14 * (1.0 + right.abs()) {
                break;
            }
        }
    } else {
        right = left;
    }
    let alpha2 = right;
    FitOutcome::Feasible {
        alpha1: envelope(samples, alpha2),
        alpha2,
    }
}

/// Smallest `alpha3` with `lhs <= alpha3 * r` on every sample, or `None` when
/// some sample has `r = 0 < lhs`.
pub fn fit_growth(samples: &[(f64, f64)]) -> Option<f64> {
    let mut c: f64 = 0.0;
    for &(lhs, r) in samples {
        if r > 0.0 {
            c = c.max(lhs / r);
        } else if lhs > 0.0 {
            return None;
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    // lhs = -6x^2 + 2xy with x = 1, y = s, r = max(1, s^2): the retarded
    // linear drift -3x + y with unit delayed coefficient.
    fn retarded_samples() -> Vec<Sample> {
        (-4000..=4000)
            .map(|k| {
                let s = k as f64 / 1000.0;
                Sample {
                    lhs: -6.0 + 2.0 * s,
                    a: 1.0,
                    r: f64::max(1.0, s * s),
                }
            })
            .collect()
    }

    #[test]
    fn recovers_plateau_left_end() {
        match fit_dissipativity(&retarded_samples(), 1.0) {
            FitOutcome::Feasible { alpha1, alpha2 } => {
                assert!((alpha2 - 1.0).abs() < 2e-3, "{alpha2}");
                assert!((alpha1 - 5.0).abs() < 2e-3, "{alpha1}");
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn interior_optimum_with_weight() {
        // envelope(alpha2) = 6 - 1.5625 / (alpha2 + 0.25) near the optimum.
        let samples: Vec<Sample> = (0..=4000)
            .map(|k| {
                let s = k as f64 / 1000.0;
                Sample {
                    lhs: -6.0 + 2.5 * s - 0.25 * s * s,
                    a: 1.0,
                    r: f64::max(1.0, s * s),
                }
            })
            .collect();
        match fit_dissipativity(&samples, 4.0) {
            FitOutcome::Feasible { alpha1, alpha2 } => {
                assert!((alpha2 - 0.375).abs() < 1e-3, "{alpha2}");
                assert!((alpha1 - 3.5).abs() < 1e-3, "{alpha1}");
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn positive_lhs_at_zero_is_infeasible() {
        let s = [Sample { lhs: 1.0, a: 0.0, r: 0.0 }];
        assert_eq!(fit_dissipativity(&s, 1.0), FitOutcome::Infeasible);
        assert_eq!(fit_growth(&[(1.0, 0.0)]), None);
        assert_eq!(fit_growth(&[(1.0, 2.0), (3.0, 2.0)]), Some(1.5));
    }
}
