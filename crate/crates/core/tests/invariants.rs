//! Randomized invariants over the continuous parameter ranges the unit
//! tests only spot-check.

use approx::assert_relative_eq;
use bpp_lab::barrier::{admissible_epsilon, Barrier};
use bpp_lab::geometry::{chain_ratio, cone_chain};
use bpp_lab::weight::RadialWeight;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Lambda is non-increasing and its iterated integrals obey
    // I2(r) <= r I1(r) (Fubini) with I1 increasing.
    #[test]
    fn power_weight_integral_ordering(
        c in 0.5f64..4.0,
        alpha in 0.05f64..0.95,
        r in 0.01f64..1.0,
    ) {
        let w = RadialWeight::power(c, alpha, 1.0).unwrap();
        let i1 = w.integrate_first(r).unwrap();
        let i2 = w.integrate_second(r).unwrap();
        prop_assert!(i1 > 0.0 && i2 > 0.0);
        prop_assert!(i2 <= r * i1 * (1.0 + 1e-12));
        let i1_half = w.integrate_first(0.5 * r).unwrap();
        prop_assert!(i1_half < i1);
        prop_assert!(w.eval(r).unwrap() <= w.eval(0.5 * r).unwrap());
        // Closed forms against each other.
        assert_relative_eq!(
            i2,
            c * r.powf(2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha)),
            max_relative = 1e-12
        );
    }

    // The barrier profile stays in [0, m] and decreases with |x|.
    #[test]
    fn barrier_range_and_monotonicity(
        n in 1usize..4,
        r_outer in 0.5f64..3.0,
        m in 0.1f64..5.0,
        t in 0.0f64..1.0,
    ) {
        let w = RadialWeight::power(1.0, 0.5, r_outer).unwrap();
        let eps = admissible_epsilon(n, r_outer, &w).unwrap();
        let b = Barrier::new(n, r_outer, eps, m, w).unwrap();
        let r1 = r_outer - eps * (1.0 - t);
        let r2 = r_outer - eps * (1.0 - 0.5 * t);
        let at = |r: f64| {
            let mut x = vec![0.0; n];
            x[0] = r;
            b.eval(&x).unwrap().v
        };
        // r2 <= r1, and v decreases with |x|.
        let (v1, v2) = (at(r1), at(r2));
        prop_assert!((0.0..=m * (1.0 + 1e-12)).contains(&v1));
        prop_assert!(v2 >= v1 * (1.0 - 1e-12));
    }

    // The Harnack chain contraction ratio lives in (3/4, 1) and the chain
    // radii decay geometrically with that exact ratio.
    #[test]
    fn cone_chain_geometric_decay(
        theta in 0.05f64..std::f64::consts::FRAC_PI_2,
        r0 in 0.05f64..1.0,
    ) {
        let kappa = chain_ratio(theta);
        prop_assert!(kappa > 0.75 && kappa < 1.0);
        let chain = cone_chain(&[0.0, 0.0], &[1.0, 0.0], theta, r0, 8).unwrap();
        for w in chain.balls.windows(2) {
            assert_relative_eq!(w[1].1, kappa * w[0].1, max_relative = 1e-12);
        }
    }
}
