use criterion::{criterion_group, criterion_main, Criterion};

use quantsel_core::acceptance::score_candidates;
use quantsel_core::simulation::simulate_rep;
use quantsel_core::{
    branch_and_bound, fitted_quantiles, quantile_draws, sample_posterior, SamplerConfig,
    SimConfig, SubsetMask,
};

fn sampler(c: &mut Criterion) {
    let rep = simulate_rep(&SimConfig::default(), 0).expect("valid config");
    let cfg = SamplerConfig {
        n_save: 250,
        n_burn: 250,
        ..SamplerConfig::default()
    };
    let mut group = c.benchmark_group("posterior");
    group.sample_size(10);
    group.bench_function("sample_500x20_500_sweeps", |b| {
        b.iter(|| sample_posterior(&rep.train, &cfg, 1).expect("sampler"))
    });

    let pd = sample_posterior(&rep.train, &SamplerConfig::default(), 1).expect("sampler");
    group.bench_function("quantile_draws_2500x500", |b| {
        b.iter(|| quantile_draws(&pd, &rep.train.x, 0.9).expect("draws"))
    });
    let qd = quantile_draws(&pd, &rep.train.x, 0.9).expect("draws");
    let cands = branch_and_bound(
        &fitted_quantiles(&qd),
        &rep.train.x,
        0.9,
        50,
        &SubsetMask::intercept(),
    )
    .expect("search");
    group.bench_function("score_candidates", |b| {
        b.iter(|| score_candidates(&cands, &qd, &rep.train.x).expect("scores"))
    });
    group.finish();
}

criterion_group!(benches, sampler);
criterion_main!(benches);
