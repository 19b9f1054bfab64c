use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fasthash::boosting::{fit_hash_function, train_stump, BoostConfig};
use fasthash::data::{fit_quantizer, quantize, PairPolicy};
use fasthash::eval::{evaluate_codes, ClassRelevance, MetricsConfig};
use fasthash::inference::{compute_bit_coefficients, total_objective, CodeMatrix};
use fasthash::synth::{gaussian_clusters, SynthConfig};
use fasthash::trainer::{train, TrainConfig};
use fasthash::Parallelism;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn benches(c: &mut Criterion) {
    let data = gaussian_clusters(&SynthConfig::new(2000, 100, 10, 1.0, 0)).unwrap();
    let cfg = TrainConfig { bits: 16, pairs: PairPolicy::Full, ..TrainConfig::default() };
    let affinity = cfg.affinity_from_labels(&data.labels).unwrap();
    let q = fit_quantizer(&data.features, 256, Parallelism::Parallel).unwrap();
    let bins = quantize(&data.features, &q, Parallelism::Parallel).unwrap();
    let targets: Vec<i8> = data.labels.iter().map(|&l| if l < 5 { 1 } else { -1 }).collect();
    let weights = vec![1.0; bins.n()];
    let dims: Vec<usize> = (0..bins.d()).collect();
    let mut small = cfg;
    small.bits = 4;
    small.boost.rounds = 10;
    let model = train(&data.features, &affinity, &small).unwrap();
    let codes = {
        let mut big = model.codes.clone();
        for _ in 0..3 {
            let rows: Vec<Vec<i8>> = (0..big.m()).map(|k| big.row(k)).chain((0..4).map(|k| model.codes.row(k))).collect();
            big = CodeMatrix::from_rows(&rows).unwrap();
        }
        big
    };
    let truth = ClassRelevance { query: &data.labels, database: &data.labels };

    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::new("bit_coefficients", name), &mode, |b, &m| {
            b.iter(|| compute_bit_coefficients(9, &affinity, &codes, m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("total_objective", name), &mode, |b, &m| {
            b.iter(|| black_box(total_objective(&codes, &affinity, codes.m(), m).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("stump", name), &mode, |b, &m| {
            b.iter(|| black_box(train_stump(&bins, &weights, &targets, &dims, m).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("boosting_q20", name), &mode, |b, &m| {
            let boost = BoostConfig { rounds: 20, ..BoostConfig::default() };
            b.iter(|| fit_hash_function(&bins, &targets, &boost, 0, m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("encode", name), &mode, |b, &m| {
            b.iter(|| model.model.encode(&data.features, m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("metrics", name), &mode, |b, &m| {
            b.iter(|| evaluate_codes(&codes, &codes, &truth, &MetricsConfig::default(), m).unwrap())
        });
    }
    g.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
