use proptest::prelude::*;
use tailrisk::margins::*;

proptest! {
    #[test]
    fn quantile_inverts_survival(sigma in 0.1f64..50.0, xi in -0.4f64..0.8, zeta in 1e-3f64..0.5, frac in 1e-6f64..1.0) {
        let p = GpdParams::new(sigma, xi, 100.0, zeta).unwrap();
        let prob = zeta * frac;
        let y = gpd_quantile(prob, &p).unwrap();
        let back = gpd_survival(y, &p).unwrap();
        prop_assert!((back - prob).abs() <= 1e-9 * prob, "{back} vs {prob}");
    }

    #[test]
    fn return_level_increases_with_period(sigma in 1.0f64..30.0, xi in -0.3f64..0.5, t in 2.0f64..500.0) {
        let p = GpdParams::new(sigma, xi, 50.0, 0.01).unwrap();
        let a = return_level(t, 300.0, &p).unwrap();
        let b = return_level(2.0 * t, 300.0, &p).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn xi_branch_is_continuous(sigma in 1.0f64..30.0, frac in 1e-4f64..1.0) {
        let zero = GpdParams::new(sigma, 0.0, 0.0, 0.1).unwrap();
        let tiny = GpdParams::new(sigma, 2e-8, 0.0, 0.1).unwrap();
        let a = gpd_quantile(0.1 * frac, &zero).unwrap();
        let b = gpd_quantile(0.1 * frac, &tiny).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
    }

    #[test]
    fn frechet_transform_preserves_probability(y in -3.0f64..12.0, alpha in 0.5f64..3.0) {
        let x = gumbel_to_frechet(y, alpha);
        prop_assert!((frechet_cdf(x, alpha) - gumbel_cdf(y)).abs() < 1e-12);
    }

    #[test]
    fn loss_shape(q in 1.0f64..1000.0, r in 0.5f64..1.5) {
        let spec = LossSpec { variant: LossVariant::Corrected };
        let l = challenge_loss(q, q * r, spec).unwrap();
        prop_assert!(l >= 0.0);
        if (r - 1.0).abs() < 0.0099 {
            prop_assert_eq!(l, 0.0);
        }
        let printed = challenge_loss(q, q * r, LossSpec::default()).unwrap();
        if r >= 0.99 {
            prop_assert_eq!(l, printed);
        }
    }
}

#[test]
fn printed_loss_is_negative_just_below_truth() {
    let l = challenge_loss(100.0, 95.0, LossSpec::default()).unwrap();
    assert!(l < 0.0);
    let c = challenge_loss(100.0, 95.0, LossSpec { variant: LossVariant::Corrected }).unwrap();
    assert!((c - 0.9 * 4.0).abs() < 1e-12);
}
