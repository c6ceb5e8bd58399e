use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ssdse::analysis::{scan_function, Axis, FunctionId, ScanSpec};
use ssdse::oracle::{run_oracle, OracleConfig};
use ssdse::parallel::Execution;

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if Execution::parallel_available() {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan_s");
    group.sample_size(10);
    for points in [20usize, 50] {
        let mut spec = ScanSpec::default_for(FunctionId::S);
        spec.k = 4;
        spec.prefix = vec![0.2, 0.3];
        spec.theta = Axis::new(spec.theta.lo, spec.theta.hi, points);
        spec.lambda_prev = Axis::new(spec.lambda_prev.lo, spec.lambda_prev.hi, points);
        spec.lambda = Axis::new(spec.lambda.lo, spec.lambda.hi, points);
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, points), &spec, |b, spec| {
                b.iter(|| scan_function(black_box(spec), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let config = OracleConfig {
        samples: 64,
        ..OracleConfig::default()
    };
    for (name, exec) in modes() {
        group.bench_function(name, |b| {
            b.iter(|| run_oracle(black_box(&config), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, scans, oracle);
criterion_main!(benches);
