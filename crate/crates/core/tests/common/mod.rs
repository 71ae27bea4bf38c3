//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reprank::{build_table, BenchmarkSet, Ranking, RatingBounds, RatingTable};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_movielens")
}

fn sgn(x: f64) -> i64 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's tau straight from the pairwise definition, O(L^2).
pub fn tau_by_definition(y: &[f64], z: &[f64]) -> f64 {
    let l = y.len();
    let mut sum = 0i64;
    for i in 0..l {
        for j in i + 1..l {
            sum += sgn(y[i] - y[j]) * sgn(z[i] - z[j]);
        }
    }
    2.0 / (l * (l - 1)) as f64 * sum as f64
}

/// Arithmetic mean of each object's ratings, read from the raw triples.
pub fn simple_means(table: &RatingTable) -> Vec<Option<f64>> {
    let mut sums = vec![0.0; table.num_objects()];
    let mut counts = vec![0usize; table.num_objects()];
    let mut triples = table.triples().to_vec();
    triples.sort_by_key(|r| (r.object, r.user));
    for r in triples {
        sums[r.object] += r.value;
        counts[r.object] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

/// AUC as the fraction of correctly ordered (benchmark, other) pairs, by
/// enumerating every pair.
pub fn pairwise_auc_brute_force(ranking: &Ranking, bench: &BenchmarkSet) -> f64 {
    let mut wins = 0usize;
    let mut total = 0usize;
    for &b in ranking.order().iter().filter(|&&k| bench.contains(k)) {
        for &n in ranking.order().iter().filter(|&&k| !bench.contains(k)) {
            total += 1;
            if ranking.rank(b).unwrap() < ranking.rank(n).unwrap() {
                wins += 1;
            }
        }
    }
    wins as f64 / total as f64
}

/// CDF of the density proportional to q^-1.5 on [q_min, q_max].
pub fn truncated_power_law_cdf(q: f64, q_min: f64, q_max: f64) -> f64 {
    (q_min.powf(-0.5) - q.powf(-0.5)) / (q_min.powf(-0.5) - q_max.powf(-0.5))
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Random table with up to `max_users` x `max_objects` entries and integer
/// or continuous ratings.
pub fn random_table(seed: u64, max_users: usize, max_objects: usize) -> RatingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_users);
    let m = rng.random_range(1..=max_objects);
    let density: f64 = rng.random_range(0.05..0.6);
    let discrete = rng.random_bool(0.5);
    let mut triples = Vec::new();
    for i in 0..n {
        for k in 0..m {
            if rng.random_bool(density) {
                let v = if discrete {
                    rng.random_range(1..=5) as f64
                } else {
                    rng.random_range(0.0..=5.0)
                };
                triples.push((i, k, v));
            }
        }
    }
    if triples.is_empty() {
        triples.push((0, 0, 3.0));
    }
    build_table(triples, n, m, RatingBounds::default()).unwrap()
}

/// Standard error of the difference between two independent means.
pub fn se_of_difference(std_a: f64, n_a: usize, std_b: f64, n_b: usize) -> f64 {
    (std_a * std_a / n_a as f64 + std_b * std_b / n_b as f64).sqrt()
}
