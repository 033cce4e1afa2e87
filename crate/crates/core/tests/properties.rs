use proptest::prelude::*;

use sdde_core::paths::{skorohod_distance, Interp, SearchParams, Segment};
use sdde_core::rates::{halanay_rate, razumikhin_gamma};

fn cadlag(jumps: Vec<(f64, f64)>, initial: f64) -> Segment {
    let mut levels: Vec<(f64, f64)> = jumps;
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    levels.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
    Segment::step(1.0, initial, &levels).unwrap()
}

fn jump_list() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.99f64..-0.01, -2.0f64..2.0), 0..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn skorohod_sandwich(a in jump_list(), b in jump_list(), x0 in -2.0f64..2.0, y0 in -2.0f64..2.0) {
        let xi = cadlag(a, x0);
        let eta = cadlag(b, y0);
        let d = skorohod_distance(&xi, &eta, SearchParams::default()).unwrap();
        let sup = xi.sup_distance(&eta).unwrap();
        prop_assert!(d.lower <= d.upper + 1e-12);
        prop_assert!(d.upper <= sup + 1e-12);
        let swapped = skorohod_distance(&eta, &xi, SearchParams::default()).unwrap();
        prop_assert!((swapped.upper - d.upper).abs() <= 1e-6, "{} vs {}", d.upper, swapped.upper);
    }

    #[test]
    fn skorohod_self_distance(a in jump_list(), x0 in -2.0f64..2.0) {
        let xi = cadlag(a, x0);
        prop_assert_eq!(skorohod_distance(&xi, &xi, SearchParams::default()).unwrap().upper, 0.0);
    }

    #[test]
    fn modulus_is_monotone(values in prop::collection::vec(-3.0f64..3.0, 11), d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
        let grid = Segment::uniform_grid(1.0, 11);
        let s = Segment::scalar(Interp::ContinuousLinear, grid, values).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(s.modulus_of_continuity(lo).unwrap() <= s.modulus_of_continuity(hi).unwrap());
    }

    #[test]
    fn grid_points_evaluate_exactly(values in prop::collection::vec(-3.0f64..3.0, 7), step in any::<bool>()) {
        let grid = Segment::uniform_grid(2.0, 7);
        let kind = if step { Interp::CadlagStep } else { Interp::ContinuousLinear };
        let s = Segment::scalar(kind, grid.clone(), values.clone()).unwrap();
        for (t, v) in grid.iter().zip(&values) {
            prop_assert_eq!(s.evaluate(*t).unwrap()[0], *v);
        }
    }

    #[test]
    fn halanay_residual(b in 0.01f64..5.0, gap in 0.01f64..5.0, tau in 0.0f64..5.0) {
        let a = (b + gap).min(10.0);
        prop_assume!(a > b);
        let l = halanay_rate(a, b, tau).unwrap();
        prop_assert!((l - a + b * (l * tau).exp()).abs() < 1e-10);
    }

    #[test]
    fn razumikhin_is_certified(kappa in 0.0f64..0.45, lambda in 0.1f64..5.0, tau in 0.1f64..3.0, q in 1.5f64..10.0) {
        if let Ok(g) = razumikhin_gamma(kappa, lambda, tau, q) {
            let ok = |g: f64| {
                let h = kappa * (0.5 * g * tau).exp();
                g < lambda && h < 1.0 && (g * tau).exp() / ((1.0 - h) * (1.0 - h)) < q
            };
            prop_assert!(g > 0.0 && ok(g));
            prop_assert!(!ok(g + 1e-3));
        }
    }
}
