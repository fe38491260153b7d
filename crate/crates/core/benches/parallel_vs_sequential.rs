use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvfusion::data::{synth_gaussian, SynthSpec};
use mvfusion::diffcore::Tensor2;
use mvfusion::eval::kmeans_with;
use mvfusion::losses::sinkhorn;
use mvfusion::model::ArchConfig;
use mvfusion::train::{multi_seed, TrainConfig};
use mvfusion::Execution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn normal(rows: usize, cols: usize, seed: u64) -> Tensor2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor2::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn seeds(c: &mut Criterion) {
    let ds = synth_gaussian(&SynthSpec {
        classes: 3,
        per_class: 100,
        view_dims: vec![16, 24],
        view_noise: vec![0.25, 0.25],
        corruption: 0.2,
        seed: 0,
    })
    .unwrap();
    let mut cfg = TrainConfig::new(ArchConfig::new(ds.view_dims(), 32, 3).with_encoder_hidden(vec![128, 128]));
    cfg.epochs = 2;
    cfg.batch_size = 100;
    let mut group = c.benchmark_group("multi_seed");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| multi_seed(&cfg, &ds, exec).unwrap())
        });
    }
    group.finish();
}

fn kmeans_restarts(c: &mut Criterion) {
    let z = normal(1200, 32, 1);
    let mut group = c.benchmark_group("kmeans_restarts");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kmeans_with(&z, 10, 0, 10, exec).unwrap())
        });
    }
    group.finish();
}

fn sinkhorn_trials(c: &mut Criterion) {
    let scores: Vec<Tensor2> = (0..64).map(|s| normal(256, 10, s)).collect();
    let mut group = c.benchmark_group("sinkhorn_trials");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(scores.iter().collect(), |s| sinkhorn(s, 0.05, 50, false).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, seeds, kmeans_restarts, sinkhorn_trials);
criterion_main!(benches);
