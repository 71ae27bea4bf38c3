use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reprank::{auc, auc_pairwise, kendall_tau, rank_objects, BenchmarkSet};

fn tau(c: &mut Criterion) {
    let mut group = c.benchmark_group("kendall_tau");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for len in [1_000usize, 10_000, 100_000] {
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(0..100) as f64).collect();
        let z: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &(y, z), |b, (y, z)| {
            b.iter(|| kendall_tau(y, z).unwrap())
        });
    }
    group.finish();
}

fn ranking(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q: Vec<f64> = (0..10_000)
        .map(|_| rng.random_range(1..=10) as f64 / 2.0)
        .collect();
    let bench = BenchmarkSet::new((0..10_000).step_by(53), q.len()).unwrap();
    c.bench_function("rank_and_auc/10000", |b| {
        b.iter(|| {
            let r = rank_objects(&q, &mut rng);
            (auc(&r, &bench).unwrap(), auc_pairwise(&r, &bench).unwrap())
        })
    });
}

criterion_group!(benches, tau, ranking);
criterion_main!(benches);
