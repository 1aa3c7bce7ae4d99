//! Replication-study throughput: the rayon-parallel table runner against
//! the sequential one on an identical configuration. Built without the
//! `parallel` feature, `run_table` falls back to the sequential path and
//! the two measurements coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use fkica::simlab::{run_table, run_table_sequential, SimConfig};

fn bench_config() -> SimConfig {
    SimConfig {
        example: 1,
        n_k: 50,
        test_n_k: 500,
        replications: 32,
        seed: 42,
        ..SimConfig::default()
    }
}

fn replication_study(c: &mut Criterion) {
    let config = bench_config();
    let mut group = c.benchmark_group("replication-table");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_table_sequential(&config).unwrap())
    });
    group.bench_function("data-parallel", |b| b.iter(|| run_table(&config).unwrap()));
    group.finish();
}

criterion_group!(benches, replication_study);
criterion_main!(benches);
