//! The fair-center solve works on per-group cluster statistics, so its cost
//! must not grow with the number of points. This bench runs the line search on
//! stats extracted from datasets of increasing n with identical k.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairkm::clustering::{assign_points, init_random};
use fairkm::cost::compute_group_stats;
use fairkm::solver::{line_search_2groups, SolverConfig};
use fairkm_bench::two_group_blobs;

fn bench_n_independence(c: &mut Criterion) {
    let mut group = c.benchmark_group("line_search_vs_n");
    for n in [1_000usize, 10_000, 100_000] {
        let ds = two_group_blobs(n, 5, 8, 3);
        let centers = init_random(&ds, 8, 1).unwrap();
        let asg = assign_points(&ds, &centers);
        let stats = compute_group_stats(&ds, &asg).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &stats, |b, stats| {
            b.iter(|| line_search_2groups(stats, &SolverConfig::line_search()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_n_independence);
criterion_main!(benches);
