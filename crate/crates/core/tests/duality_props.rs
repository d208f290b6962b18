use proptest::prelude::*;
use zopd_core::duality_diag::{
    check_sandwich, dual_value_grid, fit_through_origin, gamma_bounds, is_midpoint_convex, scalar_lambda_grid,
    tent_grids, AffineFixture, Dims, LipschitzMeta, SandwichDomain, SmoothedModel, TentToy,
};
use zopd_core::rng::Stream;
use zopd_core::smoothing::SmoothingConfig;

/// Closed form of the smoothed tent dual:
/// `D(l) = 2 max(0, 1 - l) + l (1 - mu sqrt(2/pi) - C mu)`.
fn tent_dual(lambda: f64, mu: f64, c: f64) -> f64 {
    let k = mu * (2.0 / std::f64::consts::PI).sqrt() + c * mu;
    2.0 * (1.0 - lambda).max(0.0) + lambda * (1.0 - k)
}

#[test]
fn tent_dual_matches_closed_form() {
    let (lg, inner) = tent_grids();
    let toy = TentToy::default();
    let mut rng = Stream::new(1);
    for (mu, c) in [(0.0, 0.0), (0.1, 0.0), (0.01, 1.0), (0.1, 2.0)] {
        let cfg = if mu == 0.0 {
            SmoothingConfig::exact(1)
        } else {
            SmoothingConfig::new(mu, mu, vec![c]).unwrap()
        };
        let table = dual_value_grid(&toy, &cfg, &lg, &inner, &mut rng).unwrap();
        for (l, v) in lg.iter().zip(&table.values) {
            assert!(
                (v - tent_dual(l.1[0], mu, c)).abs() < 1e-12,
                "mu {mu} lambda {}",
                l.1[0]
            );
        }
        assert!((table.d_star - tent_dual(1.0, mu, c)).abs() < 1e-12);
        assert!((table.lambda_star().1[0] - 1.0).abs() < 1e-9);
        assert!(is_midpoint_convex(&table.values, 1e-12));
    }
}

#[test]
fn gamma_example_by_substitution() {
    let meta = LipschitzMeta::new(1.0, vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
    let dims = Dims {
        n_s: 2,
        n_g: 2,
        n_phi: 3,
    };
    let sm = SmoothingConfig::new(0.1, 0.2, vec![0.0]).unwrap();
    let g = gamma_bounds(&[1.0, 1.0], &[1.0, 1.0], &meta, &sm, dims);
    let r2 = 2f64.sqrt();
    let r3 = 3f64.sqrt();
    let want_r = 0.2 * 4.0 * r3;
    assert!((g.gamma_l - (0.1 * r2 + 0.1 * 2.0 * r2 + want_r)).abs() < 1e-12);
    assert!((g.gamma_r - want_r).abs() < 1e-12);
}

#[test]
fn fit_recovers_exact_line() {
    let (slope, r2) = fit_through_origin(&[0.1, 0.01, 0.001], &[0.2, 0.02, 0.002]);
    assert!((slope - 2.0).abs() < 1e-12);
    assert!((r2 - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gamma_bounds_monotone_in_mu(
        mu1 in 0.0f64..1.0, dmu in 0.0f64..1.0,
        ls in prop::collection::vec(0.0f64..3.0, 2),
        lr in prop::collection::vec(0.0f64..3.0, 2),
    ) {
        let meta = LipschitzMeta::new(1.5, vec![0.5, 2.0], vec![1.0, 3.0]).unwrap();
        let dims = Dims { n_s: 2, n_g: 2, n_phi: 4 };
        let g = |mu: f64| {
            let sm = SmoothingConfig::new(mu, mu, vec![0.0]).unwrap_or_else(|_| SmoothingConfig::exact(2));
            gamma_bounds(&ls, &lr, &meta, &sm, dims)
        };
        let (a, b) = (g(mu1), g(mu1 + dmu));
        prop_assert!(a.gamma_l >= 0.0 && a.gamma_r >= 0.0);
        prop_assert!(b.gamma_l >= a.gamma_l - 1e-12);
        prop_assert!(b.gamma_r >= a.gamma_r - 1e-12);
    }

    #[test]
    fn sandwich_holds_on_random_affine(seed in any::<u64>(), mu in 0.001f64..0.5, c in 0.0f64..2.0) {
        let mut rng = Stream::new(seed);
        let fx = AffineFixture::random(3, 2, 4, &mut rng);
        let cfg = SmoothingConfig::new(mu, mu, vec![c]).unwrap();
        let domain = SandwichDomain { x: (-2.0, 2.0), theta: (-2.0, 2.0), lambda_max: 3.0 };
        let rep = check_sandwich(&fx, &cfg, domain, 200, &mut rng);
        prop_assert!(rep.ok, "worst margin {}", rep.worst_margin);
        prop_assert_eq!(fx.dims().n_s, 3);
    }

    #[test]
    fn plain_tent_dual_is_convex_on_any_grid(hi in 1.5f64..4.0, step in 0.01f64..0.2) {
        let lg = scalar_lambda_grid(hi, step);
        let (_, inner) = tent_grids();
        let t = dual_value_grid(&TentToy::default(), &SmoothingConfig::exact(1), &lg, &inner, &mut Stream::new(0)).unwrap();
        prop_assert!(is_midpoint_convex(&t.values, 1e-12));
        prop_assert!(t.d_star >= TentToy::D_STAR - 1e-12);
    }
}
