use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use covlab_bench::{grid41, unit_square};
use covlab_core::covering::{best_covering, exact_covering_1d, fractal_covering_dp};
use covlab_core::polarization::{brute_force_polarization, maximize_on_sample, PolarStrategy};
use covlab_core::{CoveringOptions, IfsModel, Interval, NormSpec, PolarizationOptions};

fn covering(c: &mut Criterion) {
    let ivs = [Interval::new(0.0, 1.0).unwrap(), Interval::new(1.5, 4.0).unwrap(), Interval::new(6.0, 6.2).unwrap()];
    c.bench_function("exact_1d_n1000", |b| b.iter(|| exact_covering_1d(black_box(&ivs), 1000, false).unwrap()));

    let cantor = IfsModel::cantor();
    c.bench_function("fractal_dp_cantor_4096", |b| b.iter(|| fractal_covering_dp(black_box(&cantor), 4096, false).unwrap()));

    let sq = unit_square();
    let opts = CoveringOptions { restarts: 1, ..Default::default() };
    let mut g = c.benchmark_group("heuristic");
    g.sample_size(10);
    g.bench_function("square_n64", |b| b.iter(|| best_covering(black_box(&sq), 64, false, &opts).unwrap()));
    g.finish();
}

fn polarization(c: &mut Criterion) {
    let y = grid41();
    let norm = NormSpec::euclidean(1);
    c.bench_function("brute_force_grid41_n3", |b| {
        b.iter(|| brute_force_polarization(&y.points, black_box(&y), 3, 2.0, &norm).unwrap())
    });
    let opts = PolarizationOptions { strategy: PolarStrategy::LocalSearch, restarts: 2, ..Default::default() };
    c.bench_function("local_search_grid41_n4", |b| {
        b.iter(|| maximize_on_sample(&y, &y.points, 4, 3.0, &norm, &opts, &[]).unwrap())
    });
}

criterion_group!(benches, covering, polarization);
criterion_main!(benches);
