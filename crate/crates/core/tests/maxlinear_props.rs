mod common;

use ndarray::Array2;
use proptest::prelude::*;
use tailrisk::maxlinear::*;
use tailrisk::tpdm::compress_columns;

fn model_strategy(alpha: f64) -> impl Strategy<Value = MaxLinearModel> {
    (1usize..=4, 1usize..=6).prop_flat_map(move |(d, q)| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..2.0], d * q).prop_filter_map("zero row or column", move |v| {
            MaxLinearModel::new(Array2::from_shape_vec((d, q), v).unwrap(), alpha).ok()
        })
    })
}

fn subset(d: usize, mask: u32) -> Vec<usize> {
    let b: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
    if b.is_empty() { vec![0] } else { b }
}

proptest! {
    #[test]
    fn formula_scales_with_threshold(m in model_strategy(1.0), mask in 0u32..16, u in 10.0f64..1e4, t in 1.0f64..50.0) {
        let beta = subset(m.dim(), mask);
        let r1 = FailureRegion::uniform(m.dim(), beta.clone(), u, None).unwrap();
        let r2 = FailureRegion::uniform(m.dim(), beta, u * t, None).unwrap();
        let p1 = failure_prob_approx(&m, &r1, 0.0).unwrap().raw;
        let p2 = failure_prob_approx(&m, &r2, 0.0).unwrap().raw;
        prop_assert!((p1 / t - p2).abs() <= 1e-12 * p1.max(1e-300));
    }

    #[test]
    fn formula_below_upper_bound(m in model_strategy(1.0), mask in 0u32..16, u in 10.0f64..1e4) {
        let beta = subset(m.dim(), mask);
        let r = FailureRegion::uniform(m.dim(), beta, u, None).unwrap();
        let p = failure_prob_approx(&m, &r, 0.0).unwrap().raw;
        let h = failure_prob_upper_bound(&m, &r).unwrap();
        prop_assert!(p <= h * (1.0 + 1e-12));
    }

    #[test]
    fn angular_mass_is_sum_of_scales(m in model_strategy(2.0)) {
        let mass = angular_measure_of(&m).total_mass();
        let scales: f64 = (0..m.dim()).map(|i| m.margin_scale_pow(i)).sum();
        prop_assert!((mass - scales).abs() <= 1e-12 * scales);
    }

    #[test]
    fn compression_keeps_probabilities(m in model_strategy(1.0), mask in 0u32..16) {
        let mut a = m.coefficients().clone();
        // duplicate every column at a different scale so that merging happens
        let dup = a.mapv(|x| 2.0 * x);
        a.append(ndarray::Axis(1), dup.view()).unwrap();
        let big = MaxLinearModel::new(a, 1.0).unwrap();
        let small = compress_columns(&big);
        prop_assert!(small.n_factors() <= m.n_factors());
        let beta = subset(m.dim(), mask);
        let r = FailureRegion::uniform(m.dim(), beta, 100.0, None).unwrap();
        let p = failure_prob_approx(&big, &r, 0.0).unwrap().raw;
        let q = failure_prob_approx(&small, &r, 0.0).unwrap().raw;
        prop_assert!((p - q).abs() <= 1e-12 * p.max(1e-300));
    }

    #[test]
    fn product_of_one_cluster_is_the_cluster(m in model_strategy(2.0), u in 5.0f64..100.0) {
        let r = FailureRegion::uniform(m.dim(), (0..m.dim()).collect(), u, None).unwrap();
        let single = failure_prob_approx(&m, &r, 0.0).unwrap();
        let prod = product_rule_prob(&[m.clone()], &[r], 0.0).unwrap();
        prop_assert_eq!(single, prod);
    }

    #[test]
    fn sample_rows_are_transforms(m in model_strategy(1.0), seed in 0u64..1000) {
        let x = sample_max_linear(&m, 50, seed);
        prop_assert_eq!(x.dim(), (50, m.dim()));
        prop_assert!(x.iter().all(|&v| v > 0.0 && v.is_finite()));
        prop_assert_eq!(&x, &sample_max_linear(&m, 50, seed));
    }

    #[test]
    fn cap_factor_is_a_probability(m in model_strategy(1.0), mask in 0u32..16, l in 0.1f64..10.0) {
        let beta = subset(m.dim(), mask);
        let rest = m.dim() - beta.len();
        let r = FailureRegion::uniform(m.dim(), beta, 10.0, (rest > 0).then(|| vec![l; rest])).unwrap();
        let c = cap_factor(&m, &r).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}

#[test]
fn library_sampler_matches_independent_oracle() {
    let a = ndarray::array![[0.6, 0.4, 0.0], [0.5, 0.0, 0.5]];
    let m = MaxLinearModel::new(a.clone(), 1.0).unwrap();
    let r = FailureRegion::uniform(2, vec![0, 1], 20.0, None).unwrap();
    let lib = tailrisk::oracle::mc_failure_prob(&m, &r, 1_000_000, 3).unwrap();
    let (p, se) = common::mc_region(&a, 1.0, &[0, 1], &[20.0, 20.0], None, 1_000_000, 4);
    let both = (lib.std_err.powi(2) + se * se).sqrt();
    assert!((lib.p_hat - p).abs() < 4.0 * both, "{} vs {p}", lib.p_hat);
}
