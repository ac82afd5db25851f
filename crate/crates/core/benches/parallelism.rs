//! Parallel vs sequential throughput of the data-parallel pipeline stages.
//!
//! Run with `cargo bench -p vad-core`. The `*_seq` baselines always execute
//! on the calling thread; the default entry points fan out over rayon when
//! the `parallel` feature (default) is enabled. Outputs are bit-identical
//! across both paths, so these benches measure pure scheduling gain.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use rand::Rng;
use vad_core::dae::{encode_batch, encode_batch_seq, train, TrainConfig};
use vad_core::gmm::{e_step, e_step_seq, fit, EmConfig, Samples};
use vad_core::rankpool::{dynamic_image_batch, dynamic_image_batch_seq, RankPoolConfig};
use vad_core::rng::seeded_rng;
use vad_core::scoring::{sequence_scores, sequence_scores_seq, FusionWeights, ScoringModels};
use vad_core::synth::pattern_patches;
use vad_core::tensor::{PatchSequence, Tensor};

fn random_corpus(frames: u32, t: usize, side: usize, seed: u64) -> Vec<PatchSequence> {
    let mut rng = seeded_rng(seed);
    (0..frames)
        .map(|f| {
            let patches: Vec<Tensor> = (0..t)
                .map(|_| {
                    Tensor::new(
                        vec![side, side],
                        (0..side * side).map(|_| rng.random::<f32>()).collect(),
                    )
                    .unwrap()
                })
                .collect();
            PatchSequence::new(patches, f, format!("seq{f}")).unwrap()
        })
        .collect()
}

fn bench_rank_pooling(c: &mut Criterion) {
    let corpus = random_corpus(256, 10, 64, 1);
    let cfg = RankPoolConfig::new(10).unwrap();
    let mut group = c.benchmark_group("dynamic_image_batch");
    group.bench_with_input(BenchmarkId::new("parallel", 256), &corpus, |b, corpus| {
        b.iter(|| dynamic_image_batch(black_box(corpus), &cfg).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("sequential", 256), &corpus, |b, corpus| {
        b.iter(|| dynamic_image_batch_seq(black_box(corpus), &cfg).unwrap())
    });
    group.finish();
}

fn bench_encode(c: &mut Criterion) {
    let patches = pattern_patches(256, 32, 2);
    let cfg = TrainConfig {
        max_epochs: 1,
        batch_size: 64,
        seed: 2,
        ..TrainConfig::default()
    };
    let model = train(&patches, &cfg, &[1024, 128, 32, 128, 1024])
        .unwrap()
        .model;
    let mut group = c.benchmark_group("encode_batch");
    group.bench_function("parallel", |b| {
        b.iter(|| encode_batch(black_box(&model), black_box(&patches)).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| encode_batch_seq(black_box(&model), black_box(&patches)).unwrap())
    });
    group.finish();
}

fn bench_e_step(c: &mut Criterion) {
    let mut rng = seeded_rng(3);
    let n = 4096;
    let d = 16;
    let data: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let z = Samples::new(&data, n, d).unwrap();
    let model = fit(
        &z,
        &EmConfig {
            k: 8,
            max_iters: 2,
            seed: 3,
            ..EmConfig::default()
        },
    )
    .unwrap()
    .model;
    let mut group = c.benchmark_group("e_step");
    group.bench_function("parallel", |b| {
        b.iter(|| e_step(black_box(&model), black_box(&z)).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| e_step_seq(black_box(&model), black_box(&z)).unwrap())
    });
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let t = 5;
    let corpus = random_corpus(128, t, 32, 4);
    let patches: Vec<Tensor> = corpus.iter().map(|s| s.current_patch().clone()).collect();
    let cfg = TrainConfig {
        max_epochs: 1,
        batch_size: 64,
        seed: 5,
        ..TrainConfig::default()
    };
    let dae = train(&patches, &cfg, &[1024, 128, 32, 128, 1024])
        .unwrap()
        .model;
    let latents: Vec<f64> = patches
        .iter()
        .flat_map(|p| dae.encode(&p.to_f64()).unwrap())
        .collect();
    let gmm = fit(
        &Samples::new(&latents, patches.len(), 32).unwrap(),
        &EmConfig {
            k: 4,
            max_iters: 5,
            seed: 6,
            ..EmConfig::default()
        },
    )
    .unwrap()
    .model;
    let models = ScoringModels {
        patch_dae: &dae,
        motion_dae: &dae,
        patch_gmm: &gmm,
        motion_gmm: &gmm,
    };
    let rp = RankPoolConfig::new(t).unwrap();
    let w = FusionWeights::default();
    let mut group = c.benchmark_group("sequence_scores");
    group.bench_function("parallel", |b| {
        b.iter(|| sequence_scores(&models, black_box(&corpus), &rp, &w).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| sequence_scores_seq(&models, black_box(&corpus), &rp, &w).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_rank_pooling,
    bench_encode,
    bench_e_step,
    bench_scoring
);
criterion_main!(benches);
