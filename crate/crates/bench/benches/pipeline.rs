use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mcreduce_bench::load;
use mcreduce_core::{build_graph, parse_source, run, RunConfig, Stages};

const PROGRAMS: &[&str] = &["hello", "structs", "gotos"];

fn front_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for name in PROGRAMS {
        let w = load(name);
        group.bench_with_input(BenchmarkId::from_parameter(name), &w.source, |b, src| {
            b.iter(|| build_graph(&parse_source(src).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce");
    group.sample_size(20);
    for name in PROGRAMS {
        let w = load(name);
        for stages in [Stages::SemSyn, Stages::Sem, Stages::Syn] {
            let config = RunConfig { stages, ..RunConfig::default() };
            group.bench_function(BenchmarkId::new(stages.to_string(), name), |b| {
                b.iter(|| run(&w.source, w.oracle(), &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, front_end, reduction);
criterion_main!(benches);
