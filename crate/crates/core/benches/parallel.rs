//! Compares the rayon-backed worker dispatch against the sequential
//! reference path on the two hot loops: per-round local training and
//! k-means partitioning of the training set.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fedcrit_core::data::{minmax_normalize, stratified_split, synth_imbalanced, Dataset, SynthSpec};
use fedcrit_core::exec;
use fedcrit_core::loss::LossSpec;
use fedcrit_core::nn::{train_local, HiddenActivation, Initializer, Network, NetworkSpec, TrainConfig};
use fedcrit_core::partition::kmeans_partition;
use fedcrit_core::seed;

fn worker_datasets(n_workers: usize) -> Vec<Dataset> {
    let spec = SynthSpec {
        n: 4000,
        features: 8,
        clusters: 8,
        minority_fraction: 0.05,
        separation: 8.0,
    };
    let ds = minmax_normalize(&synth_imbalanced(&spec, 7).unwrap());
    let (train, _test) = stratified_split(&ds, 0.3, 7).unwrap();
    let parts = kmeans_partition(&train, n_workers, 7).unwrap();
    parts
        .partitions
        .iter()
        .map(|p| train.subset(&p.indices))
        .collect()
}

fn train_one(worker: usize, local: &Dataset, net: &Network) -> f64 {
    let cfg = TrainConfig {
        learning_rate: 0.3,
        local_epochs: 2,
        batch_size: 32,
        seed: seed::derive(11, &[worker as u64]),
    };
    let loss = LossSpec::cross_entropy().resolve(None).unwrap();
    let trained = train_local(net, local, &cfg, &loss, 1).unwrap();
    trained.params().as_slice()[0]
}

fn bench_local_round(c: &mut Criterion) {
    let mut group = c.benchmark_group("local_round");
    for &n_workers in &[4usize, 16] {
        let locals = worker_datasets(n_workers);
        let spec = NetworkSpec::classifier(
            8,
            2,
            Some(&[16, 8]),
            HiddenActivation::Sigmoid,
            Initializer::GlorotUniform,
            3,
        );
        let net = Network::new(spec).unwrap();

        group.bench_with_input(
            BenchmarkId::new("parallel", n_workers),
            &n_workers,
            |b, _| {
                b.iter(|| {
                    let out = exec::map_indexed(&locals, |i, local| train_one(i, local, &net));
                    black_box(out)
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", n_workers),
            &n_workers,
            |b, _| {
                b.iter(|| {
                    let out = exec::map_indexed_seq(&locals, |i, local| train_one(i, local, &net));
                    black_box(out)
                })
            },
        );
    }
    group.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let spec = SynthSpec {
        n: 20_000,
        features: 8,
        clusters: 8,
        minority_fraction: 0.05,
        separation: 8.0,
    };
    let ds = minmax_normalize(&synth_imbalanced(&spec, 9).unwrap());

    let mut group = c.benchmark_group("kmeans_partition");
    group.sample_size(10);
    group.bench_function("parallel_assignment", |b| {
        b.iter(|| black_box(kmeans_partition(&ds, 16, 5).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_local_round, bench_kmeans);
criterion_main!(benches);
