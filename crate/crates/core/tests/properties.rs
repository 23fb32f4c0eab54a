use contigsieve::basis::{BasisSpec, Scaling, Sieve};
use contigsieve::contiguity::quantile_sorted;
use contigsieve::leastfav::max_second_divided_difference;
use contigsieve::montecarlo::{replication_seed, KRule};
use contigsieve::plm::{fit_plm, simulate_plm, PlmDgp, PlmSieveModel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bspline_partition_of_unity(k in 4usize..20, z in 0.0f64..=1.0) {
        let spec = BasisSpec::bspline(k, 3, Scaling::Raw);
        let v = spec.evaluate(z).unwrap();
        prop_assert_eq!(v.len(), k);
        prop_assert!(v.iter().all(|x| *x >= -1e-15));
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_sieve_has_identity_gram(k in 3usize..16) {
        let sieve = Sieve::uniform(BasisSpec::bspline(k, 2, Scaling::ProbabilityOrthonormal)).unwrap();
        let g = sieve.effective_gram();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g[(i, j)] - target).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plm_estimate_is_profile_maximiser(seed in 0u64..1000, k in 4usize..10) {
        let data = simulate_plm(&PlmDgp::standard(), 150, seed).unwrap();
        let sieve = Sieve::uniform(BasisSpec::bspline(k, 3, Scaling::Raw)).unwrap();
        let z: Vec<f64> = data.iter().map(|s| s.z).collect();
        let basis = sieve.basis_matrix(&z).unwrap();
        let fit = fit_plm(&data, &basis, Some(1.0)).unwrap();
        let model = PlmSieveModel::new(&data, &basis, 1.0).unwrap();
        let p = model.partialled();
        for d in [-1e-3, 1e-3, 0.1] {
            prop_assert!(p.rss(fit.theta_hat) <= p.rss(fit.theta_hat + d) + 1e-9);
        }
    }

    #[test]
    fn quantiles_are_monotone(mut v in prop::collection::vec(-1e6f64..1e6, 1..200), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        v.sort_by(|a, b| a.total_cmp(b));
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(quantile_sorted(&v, lo) <= quantile_sorted(&v, hi));
        prop_assert!(quantile_sorted(&v, 0.0) == v[0]);
    }

    #[test]
    fn concave_quadratic_has_negative_curvature(a in 0.01f64..10.0, b in -5.0f64..5.0) {
        let h = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let f: Vec<f64> = h.iter().map(|x| b * x - 0.5 * a * x * x).collect();
        prop_assert!((max_second_divided_difference(&h, &f) + a).abs() < 1e-9);
    }

    #[test]
    fn replication_seeds_distinct(master in any::<u64>(), n in 1u64..100_000, rep in 0u64..10_000) {
        prop_assert_ne!(replication_seed(master, n, rep), replication_seed(master, n, rep + 1));
        prop_assert_ne!(replication_seed(master, n, rep), replication_seed(master, n + 1, rep));
    }

    #[test]
    fn power_rule_respects_minimum(n in 2usize..1_000_000, min in 1usize..20) {
        let rule = KRule::Power { scale: 0.5, exponent: 0.25, min };
        prop_assert!(rule.k_for(n).unwrap() >= min);
    }
}
