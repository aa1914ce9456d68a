use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use topocl::train::{compute_diagrams, diagram_map, point_sets, train};
use topocl::{RunConfig, TimeSeriesInstance};

fn one_epoch(c: &mut Criterion) {
    let mut cfg = RunConfig::default();
    cfg.dataset = "synth:n_per_class=16,len=128,seed=1".into();
    cfg.epochs = 1;
    let ds = cfg.load_dataset().unwrap();
    let all: Vec<&TimeSeriesInstance> = ds.instances().collect();
    let diagrams = diagram_map(compute_diagrams(&all, &cfg).unwrap());
    let sets = point_sets(&ds.train, &diagrams, &cfg).unwrap();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("epoch_b8_t128", |b| b.iter(|| train(black_box(&cfg), &ds.train, &sets).unwrap()));
    group.finish();
}

criterion_group!(benches, one_epoch);
criterion_main!(benches);
