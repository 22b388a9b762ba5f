use fracmart::bounds::{self, BoundSpec, Case};
use fracmart::deterministic::WeightedQuadrature;
use fracmart::experiments::{ks_distance, score_interval, trend_verdict};
use fracmart::fractional::{kernel_weights, Alpha};
use fracmart::paths::{bm_increments, RandomStream, TimeGrid};
use proptest::prelude::*;

proptest! {
    #[test]
    fn score_interval_brackets_estimate(n in 1usize..100_000, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
        let k = ((n as f64) * frac).floor() as usize;
        let (lo, hi) = score_interval(k, n, level).unwrap();
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0, "k={} n={} [{}, {}]", k, n, lo, hi);
    }

    #[test]
    fn last_grid_point_is_the_horizon(t in 1e-3f64..1e4, n in 1usize..100_000) {
        let g = TimeGrid::new(t, n).unwrap();
        prop_assert!((g.point(n) - t).abs() <= t * f64::EPSILON);
        prop_assert_eq!(g.point(0), 0.0);
    }

    #[test]
    fn kernel_weights_positive_and_ordered(a in -0.49f64..0.49, n in 2usize..200, t in 0.01f64..100.0) {
        let alpha = Alpha::new(a).unwrap();
        prop_assert_eq!(alpha.beta() > 2.0, a < 0.0);
        let g = TimeGrid::new(t, n).unwrap();
        let w = kernel_weights(alpha, &g, n).unwrap().weights;
        prop_assert!(w.iter().all(|&x| x > 0.0 && x.is_finite()));
        for p in w.windows(2) {
            if a < 0.0 {
                prop_assert!(p[1] > p[0]);
            } else if a > 0.0 {
                prop_assert!(p[1] < p[0]);
            }
        }
    }

    #[test]
    fn quadrature_weights_telescope(p in -0.95f64..1.0, n in 1usize..5000, t in 0.01f64..1000.0) {
        let g = TimeGrid::new(t, n).unwrap();
        let q = WeightedQuadrature::new(p, &g).unwrap();
        let exact = t.powf(p + 1.0) / (p + 1.0);
        prop_assert!((q.total_weight() / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn increments_are_keyed_by_seed_and_index(seed in any::<u64>(), index in any::<u64>()) {
        let g = TimeGrid::new(1.0, 32).unwrap();
        let a = bm_increments(&g, &RandomStream::new(seed, index));
        let b = bm_increments(&g, &RandomStream::new(seed, index));
        prop_assert_eq!(&a, &b);
        let c = bm_increments(&g, &RandomStream::new(seed, index.wrapping_add(1)));
        prop_assert_ne!(a, c);
    }

    #[test]
    fn ks_distance_is_a_bounded_symmetric_metric(
        a in prop::collection::vec(-10.0f64..10.0, 1..60),
        b in prop::collection::vec(-10.0f64..10.0, 1..60),
    ) {
        let d = ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_distance(&b, &a).unwrap());
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn decreasing_verdict_implies_halving(
        values in prop::collection::vec(0.0f64..1.0, 2..6),
        se in 0.0f64..0.05,
    ) {
        let v = trend_verdict(&values, &vec![se; values.len()]);
        if v.decreasing {
            prop_assert!(values[values.len() - 1] <= 0.5 * values[0]);
            for w in values.windows(2) {
                prop_assert!(w[1] - w[0] <= 2.0 * (2.0f64).sqrt() * se + 1e-15);
            }
        }
    }

    #[test]
    fn case_iii_bound_at_unit_scale(a in -0.45f64..0.45, frac in 0.05f64..0.95, c_inf in 0.1f64..10.0) {
        let eps = frac * (0.5 + a);
        let spec = BoundSpec::new(Alpha::new(a).unwrap(), Case::Iii { eps, c_inf }, 1.0, 1.0, 0.0).unwrap();
        let v = bounds::bound(&spec).unwrap();
        let k = bounds::kappa_eps(eps).unwrap();
        prop_assert!((v.probability_bound - bounds::c_t(1.0) * (-k * k).exp()).abs() <= 1e-15);
    }
}
