//! Cross-module invariants, mostly property-based.

use proptest::prelude::*;
use tempfile::tempdir;

use vad_core::rankpool::{dynamic_image_values, RankPoolConfig};
use vad_core::rng::seeded_rng;
use vad_core::scoring::normalize_scores;
use vad_core::tensor::{read_tensor, resize_bilinear, write_tensor, PatchSequence, Tensor};

fn finite_f32() -> impl Strategy<Value = f32> {
    (-1.0e6f32..1.0e6).prop_map(|v| if v == 0.0 { 0.0 } else { v })
}

proptest! {
    /// write then read returns the identical tensor, bit for bit.
    #[test]
    fn tensor_round_trip_is_bit_exact(
        dims in proptest::collection::vec(1usize..6, 1..4),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let len: usize = dims.iter().product();
        let mut rng = seeded_rng(seed);
        let data: Vec<f32> = (0..len).map(|_| rng.random_range(-1.0e6f32..1.0e6)).collect();
        let tensor = Tensor::new(dims, data).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.gdt");
        write_tensor(&tensor, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        prop_assert_eq!(back.shape(), tensor.shape());
        for (a, b) in back.data().iter().zip(tensor.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    /// resizing never leaves the input's value range
    #[test]
    fn resize_respects_value_bounds(
        h in 1usize..8, w in 1usize..8,
        out_h in 1usize..12, out_w in 1usize..12,
        values in proptest::collection::vec(finite_f32(), 64),
    ) {
        let data: Vec<f32> = values[..h * w].to_vec();
        let img = Tensor::new(vec![h, w], data.clone()).unwrap();
        let out = resize_bilinear(&img, out_h, out_w).unwrap();
        let min = data.iter().cloned().fold(f32::INFINITY, f32::min);
        let max = data.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        // a hair of slack for interpolation roundoff
        let slack = (max - min).abs() * 1e-6 + 1e-6;
        for &v in out.data() {
            prop_assert!(v >= min - slack && v <= max + slack, "{v} outside [{min}, {max}]");
        }
    }

    /// min-max normalization lands in [0, 1] and pins the extremes
    #[test]
    fn normalization_bounds(scores in proptest::collection::vec(-1.0e9f64..1.0e9, 1..64)) {
        let out = normalize_scores(&scores).unwrap();
        for &v in &out {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            prop_assert!(out.contains(&0.0));
            prop_assert!(out.contains(&1.0));
        } else {
            prop_assert!(out.iter().all(|&v| v == 0.0));
        }
    }
}

fn random_sequence(t: usize, pixels: usize, seed: u64) -> PatchSequence {
    use rand::Rng;
    let mut rng = seeded_rng(seed);
    let patches: Vec<Tensor> = (0..t)
        .map(|_| {
            Tensor::new(
                vec![pixels],
                (0..pixels).map(|_| rng.random::<f32>()).collect(),
            )
            .unwrap()
        })
        .collect();
    PatchSequence::new(patches, 0, "p".into()).unwrap()
}

#[test]
fn rank_pooling_is_linear() {
    let t = 6;
    let cfg = RankPoolConfig::new(t).unwrap();
    let xs = random_sequence(t, 32, 1);
    let ys = random_sequence(t, 32, 2);
    let (a, b) = (0.7f64, -1.3f64);

    let combined = PatchSequence::new(
        xs.patches
            .iter()
            .zip(&ys.patches)
            .map(|(x, y)| {
                Tensor::new(
                    vec![32],
                    x.data()
                        .iter()
                        .zip(y.data())
                        .map(|(&xv, &yv)| (a * f64::from(xv) + b * f64::from(yv)) as f32)
                        .collect(),
                )
                .unwrap()
            })
            .collect(),
        0,
        "combo".into(),
    )
    .unwrap();

    let dx = dynamic_image_values(&xs, &cfg).unwrap();
    let dy = dynamic_image_values(&ys, &cfg).unwrap();
    let dc = dynamic_image_values(&combined, &cfg).unwrap();
    for i in 0..32 {
        let expected = a * dx[i] + b * dy[i];
        // the combined input is rounded to f32, so allow that quantization
        let tol = 1e-7 * expected.abs().max(1.0);
        assert!(
            (dc[i] - expected).abs() < tol,
            "pixel {i}: {} vs {expected}",
            dc[i]
        );
    }
}

#[test]
fn rank_pooling_shift_covariance() {
    use rand::Rng;
    let t = 7;
    let cfg = RankPoolConfig::new(t).unwrap();
    // multiples of 1/256 keep the +c shift exact in f32
    let mut rng = seeded_rng(3);
    let patches: Vec<Tensor> = (0..t)
        .map(|_| {
            Tensor::new(
                vec![16],
                (0..16)
                    .map(|_| rng.random_range(0u32..256) as f32 / 256.0)
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let xs = PatchSequence::new(patches, 0, "p".into()).unwrap();
    let c = 0.25f32;
    let shifted = PatchSequence::new(
        xs.patches
            .iter()
            .map(|p| {
                Tensor::new(
                    vec![16],
                    p.data().iter().map(|&v| v + c).collect(),
                )
                .unwrap()
            })
            .collect(),
        0,
        "shift".into(),
    )
    .unwrap();
    let coeff_sum: f64 = vad_core::rankpool::rank_pool_coefficients(t)
        .unwrap()
        .iter()
        .sum();
    let base = dynamic_image_values(&xs, &cfg).unwrap();
    let moved = dynamic_image_values(&shifted, &cfg).unwrap();
    for i in 0..16 {
        let expected = base[i] + f64::from(c) * coeff_sum;
        assert!((moved[i] - expected).abs() < 1e-10, "pixel {i}");
    }
}

/// 1000 seeded random tensors survive the disk round trip bit-exactly.
#[test]
fn thousand_tensor_round_trip() {
    use rand::Rng;
    let dir = tempdir().unwrap();
    let path = dir.path().join("t.gdt");
    let mut rng = seeded_rng(99);
    for _ in 0..1000 {
        let rank = rng.random_range(1..4usize);
        let dims: Vec<usize> = (0..rank).map(|_| rng.random_range(1..5usize)).collect();
        let len = dims.iter().product();
        let data: Vec<f32> = (0..len)
            .map(|_| f32::from_bits(rng.random::<u32>()))
            .map(|v| if v.is_finite() { v } else { 0.0 })
            .collect();
        let tensor = Tensor::new(dims, data).unwrap();
        write_tensor(&tensor, &path).unwrap();
        let back = read_tensor(&path).unwrap();
        assert_eq!(back.shape(), tensor.shape());
        for (a, b) in back.data().iter().zip(tensor.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

/// corpus scoring produces identical bytes under the parallel and sequential
/// paths
#[test]
fn sequence_scores_parallel_equals_sequential() {
    use vad_core::dae::{train, TrainConfig};
    use vad_core::gmm::{fit, EmConfig, Samples};
    use vad_core::scoring::{sequence_scores, sequence_scores_seq, FusionWeights, ScoringModels};

    let t = 3;
    let corpus: Vec<PatchSequence> = (0..10u32)
        .map(|f| {
            let patches = vad_core::synth::pattern_patches(t, 8, 700 + u64::from(f));
            PatchSequence::new(patches, f, format!("seq{f}")).unwrap()
        })
        .collect();
    let cfg = TrainConfig {
        sigma: 0.01,
        beta: 1e-4,
        learning_rate: 0.005,
        lr_decay: 0.98,
        batch_size: 5,
        max_epochs: 3,
        seed: 3,
    };
    let dims = [64, 16, 4, 16, 64];
    let patches: Vec<Tensor> = corpus.iter().map(|s| s.current_patch().clone()).collect();
    let dae = train(&patches, &cfg, &dims).unwrap().model;
    let latents: Vec<f64> = patches
        .iter()
        .flat_map(|p| dae.encode(&p.to_f64()).unwrap())
        .collect();
    let gmm = fit(
        &Samples::new(&latents, 10, 4).unwrap(),
        &EmConfig {
            k: 2,
            seed: 4,
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
    let par = sequence_scores(&models, &corpus, &rp, &w).unwrap();
    let seq = sequence_scores_seq(&models, &corpus, &rp, &w).unwrap();
    assert_eq!(par.len(), seq.len());
    for (a, b) in par.iter().zip(&seq) {
        assert_eq!(a.anomaly.to_bits(), b.anomaly.to_bits());
        assert_eq!(a.p_oi.to_bits(), b.p_oi.to_bits());
        assert_eq!(a.psnr_di.to_bits(), b.psnr_di.to_bits());
    }
}
