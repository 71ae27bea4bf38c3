mod common;

use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reprank::metrics::concordance_score;
use reprank::{auc, auc_pairwise, kendall_tau, quality_rmse, rank_objects, BenchmarkSet, Ranking};

fn tied_list() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..120).prop_flat_map(|len| {
        let v = prop::collection::vec((0u8..8).prop_map(|x| x as f64 * 0.5), len);
        (v.clone(), v)
    })
}

proptest! {
    #[test]
    fn fast_tau_equals_definition((y, z) in tied_list()) {
        prop_assert_eq!(kendall_tau(&y, &z).unwrap(), common::tau_by_definition(&y, &z));
    }

    #[test]
    fn fast_tau_equals_definition_continuous(
        pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..150)
    ) {
        let (y, z): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert_eq!(kendall_tau(&y, &z).unwrap(), common::tau_by_definition(&y, &z));
    }

    #[test]
    fn tau_is_symmetric_and_rank_invariant((y, z) in tied_list()) {
        let t = kendall_tau(&y, &z).unwrap();
        prop_assert_eq!(t, kendall_tau(&z, &y).unwrap());
        let warped: Vec<f64> = y.iter().map(|v| (v * 3.0).exp() - 7.0).collect();
        prop_assert_eq!(t, kendall_tau(&warped, &z).unwrap());
        prop_assert!((-1.0..=1.0).contains(&t));
    }

    #[test]
    fn pairwise_auc_matches_enumeration(seed in any::<u64>(), m in 2usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rng.random_range(1..m);
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let ranking = Ranking::from_order(order, m);
        let bench = BenchmarkSet::new(0..s, m).unwrap();
        let fast = auc_pairwise(&ranking, &bench).unwrap();
        prop_assert!((0.0..=1.0).contains(&fast));
        prop_assert!((fast - common::pairwise_auc_brute_force(&ranking, &bench)).abs() < 1e-12);
        if s == 1 {
            prop_assert_eq!(fast, auc(&ranking, &bench).unwrap());
        }
    }

    #[test]
    fn distinct_values_rank_independently_of_seed(
        q in prop::collection::vec(0.0f64..5.0, 1..50),
        s1 in any::<u64>(),
        s2 in any::<u64>(),
    ) {
        let mut sorted = q.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        prop_assume!(sorted.len() == q.len());
        let a = rank_objects(&q, &mut ChaCha8Rng::seed_from_u64(s1));
        let b = rank_objects(&q, &mut ChaCha8Rng::seed_from_u64(s2));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rmse_zero_iff_equal(q in prop::collection::vec(0.0f64..5.0, 1..30), k in 0usize..30, eps in 1e-6f64..1.0) {
        prop_assert_eq!(quality_rmse(&q, &q).unwrap(), 0.0);
        let mut other = q.clone();
        let k = k % q.len();
        other[k] += eps;
        prop_assert!(quality_rmse(&q, &other).unwrap() > 0.0);
        let shifted: Vec<f64> = q.iter().map(|v| v - 0.75).collect();
        prop_assert!((quality_rmse(&q, &shifted).unwrap() - 0.75).abs() < 1e-12);
    }
}

#[test]
fn tau_endpoints() {
    let y: Vec<f64> = (0..200).map(|i| i as f64).collect();
    let rev: Vec<f64> = y.iter().rev().copied().collect();
    assert_eq!(kendall_tau(&y, &y).unwrap(), 1.0);
    assert_eq!(kendall_tau(&y, &rev).unwrap(), -1.0);
}

#[test]
fn tau_score_is_exact_for_long_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y: Vec<f64> = (0..2000).map(|_| rng.random_range(0..30) as f64).collect();
    let z: Vec<f64> = (0..2000).map(|_| rng.random_range(0..30) as f64).collect();
    assert_eq!(
        kendall_tau(&y, &z).unwrap(),
        common::tau_by_definition(&y, &z)
    );
    assert!(concordance_score(&y, &z).unwrap().abs() < 2000 * 1999 / 2);
}

#[test]
fn random_rankings_average_one_half() {
    let (m, s, trials) = (1000, 50, 1000);
    let bench = BenchmarkSet::new(0..s, m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let flat = vec![1.0; m];
    let (mut pairwise, mut eq9) = (0.0, 0.0);
    for _ in 0..trials {
        let r = rank_objects(&flat, &mut rng);
        pairwise += auc_pairwise(&r, &bench).unwrap();
        eq9 += auc(&r, &bench).unwrap();
    }
    let (pairwise, eq9) = (pairwise / trials as f64, eq9 / trials as f64);
    assert!((pairwise - 0.5).abs() < 0.02, "{pairwise}");
    // the two variants differ by O(S / M)
    assert!(
        (eq9 - pairwise).abs() < 2.0 * s as f64 / m as f64,
        "{eq9} vs {pairwise}"
    );
}
