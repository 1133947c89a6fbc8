use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use smx_bench::random_matrix;
use smx_core::{mine_pairs, mine_triples, Direction, DistanceMetric, Reducer, Tiling};

fn bench_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("mine_pairs");
    for n in [500usize, 2000] {
        let e = random_matrix(n, 64, 11);
        let pairs = (n * (n - 1) / 2) as u64;
        group.throughput(Throughput::Elements(pairs));
        group.bench_with_input(BenchmarkId::new("sq_euclidean_max", n), &e, |b, e| {
            b.iter(|| {
                mine_pairs(
                    e,
                    DistanceMetric::SquaredEuclidean,
                    Direction::Max,
                    100,
                    512,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_triples(c: &mut Criterion) {
    let mut group = c.benchmark_group("mine_triples");
    group.sample_size(10);
    for n in [300usize, 600] {
        let e = random_matrix(n, 64, 13);
        let evals = (n * (n - 1) / 2) as u64 * (n as u64 - 2);
        group.throughput(Throughput::Elements(evals));
        for tile in [128usize, 512] {
            let tiling = Tiling {
                tile_i: tile,
                tile_j: tile,
                columns_per_batch: 4096,
                candidates_per_column: 1,
            };
            group.bench_with_input(
                BenchmarkId::new(format!("sum_max_tile{tile}"), n),
                &e,
                |b, e| {
                    b.iter(|| {
                        mine_triples(
                            e,
                            DistanceMetric::SquaredEuclidean,
                            Reducer::Sum,
                            Direction::Max,
                            100,
                            tiling,
                            false,
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_pairs, bench_triples);
criterion_main!(benches);
