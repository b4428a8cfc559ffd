//! Parallel against single-worker runs of the data-parallel kernels.
//!
//! `cargo bench` compares a one-thread pool with the full pool; build with
//! `--no-default-features` to measure the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use schroder::models::{find_countermodel_within, FingerprintTable, ModelPool, SearchLimits};
use schroder::oracle::{Oracle, OracleConfig, Query};
use schroder::par;
use schroder::terms::law;

fn widths() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn fingerprint_table(c: &mut Criterion) {
    let mut g = c.benchmark_group("fingerprint_table_order4");
    g.sample_size(10);
    for jobs in widths() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || FingerprintTable::build(ModelPool::latin(4))))
        });
    }
    g.finish();
}

fn batch_decide(c: &mut Criterion) {
    let table = FingerprintTable::build(ModelPool::latin(4));
    // single-law queries from one fingerprint group: none is settled by
    // the table, so each goes through the prover or the deep search
    let group: Vec<usize> = (1..=990).filter(|&i| table.get(i) == table.get(3)).take(6).collect();
    let queries: Vec<Query> =
        group.iter().flat_map(|&h| group.iter().filter(move |&&g| g != h).map(move |&g| Query::single(h, g))).collect();
    let cfg = OracleConfig {
        prover: schroder::prover::ProverConfig { timeout_ms: 200, ..Default::default() },
        escalated: None,
        ..Default::default()
    };
    let mut g = c.benchmark_group("decide_batch");
    g.sample_size(10);
    for jobs in widths() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| {
                par::with_jobs(jobs, || {
                    let mut oracle = Oracle::new(cfg, Some(table.clone()));
                    oracle.decide_batch(&queries)
                })
            })
        });
    }
    g.finish();
}

fn deep_search(c: &mut Criterion) {
    let hyps = [law(23).clone()];
    let mut g = c.benchmark_group("countermodel_search");
    g.sample_size(10);
    g.bench_function("order8_exhaustive", |b| {
        b.iter(|| {
            find_countermodel_within(&hyps, law(5), SearchLimits { min_order: 8, max_order: 8, node_budget: u64::MAX })
        })
    });
    g.bench_function("order9_witness", |b| {
        b.iter(|| {
            find_countermodel_within(&hyps, law(5), SearchLimits { min_order: 9, max_order: 9, node_budget: u64::MAX })
        })
    });
    g.finish();
}

criterion_group!(benches, fingerprint_table, batch_decide, deep_search);
criterion_main!(benches);
