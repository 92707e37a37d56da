use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tailnorm::harness::{run_experiment, ExperimentConfig, KRule, RunOptions};
use tailnorm::parallel::Execution;
use tailnorm::path_gen::{simulate_product, Multiplier, ProcessSpec, ProductSpec};
use tailnorm::{RandomStream, TailModel};

fn spec() -> ProductSpec {
    ProductSpec {
        multiplier: Multiplier::Tail(TailModel::pareto(0.5).unwrap()),
        driver: ProcessSpec::fbm(0.7).unwrap(),
    }
}

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ]
}

fn paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_product");
    let stream = RandomStream::new(1);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, "500x1024"), &exec, |b, &exec| {
            b.iter(|| simulate_product(&spec(), 1024, 500, &stream, exec).unwrap())
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let mut config = ExperimentConfig::product(spec(), 500, 64, 1024, KRule::Fixed(22), 8, 1);
    config.reference_draws = 0;
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, execution) in modes() {
        let opts = RunOptions {
            workers: None,
            execution,
        };
        group.bench_with_input(
            BenchmarkId::new(name, "B8_n500_m1024"),
            &opts,
            |b, &opts| b.iter(|| run_experiment(&config, opts).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, paths, experiment);
criterion_main!(benches);
