use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use levy_passage::estimators::{passage_sweep, SweepConfig};
use levy_passage::pathsim::{first_passage, sample_path, Sided};
use levy_passage::stability::{NormingPair, NormingRule, Regime};
use levy_passage_bench::{exponential_jumps, log_squared, poisson_drift};
use std::hint::black_box;

fn functionals(c: &mut Criterion) {
    let m = log_squared();
    c.bench_function("winsorized_mean/log_squared", |b| {
        b.iter(|| m.winsorized_mean(black_box(1e-5)).unwrap())
    });
    c.bench_function("winsorized_variance/log_squared", |b| {
        b.iter(|| m.winsorized_variance(black_box(1e-5)).unwrap())
    });
}

fn norming(c: &mut Criterion) {
    let m = log_squared();
    let pair = NormingPair::new(&m, 0.5, Regime::SmallTime, NormingRule::Solver).unwrap();
    c.bench_function("norming_pair/build", |b| {
        b.iter(|| NormingPair::new(&m, black_box(0.5), Regime::SmallTime, NormingRule::Solver).unwrap())
    });
    c.bench_function("norming_pair/c_of", |b| b.iter(|| pair.c_of(black_box(3e-5)).unwrap()));
}

fn single_path(c: &mut Criterion) {
    let m = exponential_jumps();
    c.bench_function("sample_and_scan/exponential", |b| {
        let mut stream = 0u64;
        b.iter(|| {
            stream += 1;
            let path = sample_path(&m, 7, stream, 1e-2, 0.0).unwrap();
            first_passage(&path, 1e-3, 0.5, Sided::Two, Regime::SmallTime).unwrap()
        })
    });
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("passage_sweep");
    group.sample_size(10);
    let m = poisson_drift();
    for n in [10_000usize, 100_000] {
        let mut cfg = SweepConfig::new(&m, 0.5, Sided::One, Regime::SmallTime);
        cfg.n_paths = n;
        group.throughput(Throughput::Elements((n * cfg.r_grid.len()) as u64));
        for workers in [1usize, 0] {
            group.bench_with_input(BenchmarkId::new(format!("workers={workers}"), n), &cfg, |b, cfg| {
                b.iter(|| passage_sweep(&m, cfg, workers).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, functionals, norming, single_path, sweep);
criterion_main!(benches);
