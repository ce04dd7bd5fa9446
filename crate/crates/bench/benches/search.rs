use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quantsel_core::search::{branch_and_bound_with, exhaustive_search, RssEngine, SearchOptions};
use quantsel_core::simulation::simulate_rep;
use quantsel_core::{SimConfig, SubsetMask};

fn instance(p: usize) -> (Vec<f64>, nalgebra::DMatrix<f64>) {
    let cfg = SimConfig {
        n: 500,
        p,
        n_test: 100,
        ..SimConfig::default()
    };
    let rep = simulate_rep(&cfg, 0).expect("valid config");
    (rep.train.y, rep.train.x)
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_and_bound");
    group.sample_size(10);
    for p in [12, 20, 28] {
        let (q, x) = instance(p);
        for (label, engine, parallel) in [
            ("givens", RssEngine::Givens, false),
            ("dense", RssEngine::Dense, false),
            ("givens_parallel", RssEngine::Givens, true),
        ] {
            // Re-factoring every node is impractically slow past p = 20.
            if engine == RssEngine::Dense && p > 20 {
                continue;
            }
            let opts = SearchOptions {
                engine,
                parallel,
                ..SearchOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(label, p), &p, |b, _| {
                b.iter(|| branch_and_bound_with(&q, &x, &opts).expect("search"))
            });
        }
    }
    group.finish();

    let (q, x) = instance(12);
    c.bench_function("exhaustive/12", |b| {
        b.iter(|| exhaustive_search(&q, &x, 0.5, 50, &SubsetMask::intercept()).expect("search"))
    });
}

criterion_group!(benches, search);
criterion_main!(benches);
