//! Dynamic images by approximate rank pooling.
//!
//! A window of `t` patches collapses into a single motion summary
//!
//! ```text
//! d = sum_{i=1..t} sum_{j=i..t} ((2j - t - 1) / j) x_i
//! ```
//!
//! i.e. the patch at position `i` carries the closed-form coefficient
//! `alpha_i = sum_{j=i..t} (2j - t - 1) / j`. The coefficients sum to zero, so
//! static content cancels and only motion survives. Accumulation runs in
//! double precision; the output is stored as `f32` like every other tensor.

use crate::error::{Error, Result};
use crate::par::{map_batch, map_batch_seq};
use crate::tensor::{PatchSequence, Tensor};

/// Window length for rank pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankPoolConfig {
    pub t: usize,
}

impl RankPoolConfig {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument {
                reason: "time stride t must be >= 1".into(),
            });
        }
        Ok(RankPoolConfig { t })
    }
}

/// Motion summary of one patch sequence.
#[derive(Debug, Clone)]
pub struct DynamicImage {
    pub image: Tensor,
    pub frame_index: u32,
}

/// The per-patch coefficients `alpha_1..alpha_t`.
pub fn rank_pool_coefficients(t: usize) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::InvalidArgument {
            reason: "time stride t must be >= 1".into(),
        });
    }
    let tf = t as f64;
    let mut coeffs = Vec::with_capacity(t);
    for i in 1..=t {
        let mut alpha = 0.0;
        for j in i..=t {
            alpha += (2.0 * j as f64 - tf - 1.0) / j as f64;
        }
        coeffs.push(alpha);
    }
    Ok(coeffs)
}

/// The weighted sum in double precision, before the `f32` downcast.
pub fn dynamic_image_values(seq: &PatchSequence, cfg: &RankPoolConfig) -> Result<Vec<f64>> {
    if seq.window_len() != cfg.t {
        return Err(Error::DimensionMismatch {
            context: format!(
                "sequence {} has {} patches, config expects t={}",
                seq.sequence_id,
                seq.window_len(),
                cfg.t
            ),
        });
    }
    let coeffs = rank_pool_coefficients(cfg.t)?;
    let len = seq.patches[0].len();
    let mut acc = vec![0.0f64; len];
    for (patch, &alpha) in seq.patches.iter().zip(&coeffs) {
        for (a, &v) in acc.iter_mut().zip(patch.data()) {
            *a += alpha * f64::from(v);
        }
    }
    Ok(acc)
}

/// Weighted sum of the window's patches with the rank-pooling coefficients.
pub fn dynamic_image(seq: &PatchSequence, cfg: &RankPoolConfig) -> Result<DynamicImage> {
    let acc = dynamic_image_values(seq, cfg)?;
    let data: Vec<f32> = acc.into_iter().map(|v| v as f32).collect();
    Ok(DynamicImage {
        image: Tensor::new(seq.patches[0].shape().to_vec(), data)?,
        frame_index: seq.frame_index,
    })
}

/// Dynamic images for a whole corpus; parallel when the `parallel` feature is
/// enabled, always in input order.
pub fn dynamic_image_batch(
    seqs: &[PatchSequence],
    cfg: &RankPoolConfig,
) -> Result<Vec<DynamicImage>> {
    map_batch(seqs, |s| dynamic_image(s, cfg))
        .into_iter()
        .collect()
}

/// Sequential baseline of [`dynamic_image_batch`].
pub fn dynamic_image_batch_seq(
    seqs: &[PatchSequence],
    cfg: &RankPoolConfig,
) -> Result<Vec<DynamicImage>> {
    map_batch_seq(seqs, |s| dynamic_image(s, cfg))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seq_from(patches: Vec<Vec<f32>>, shape: Vec<usize>) -> PatchSequence {
        let tensors = patches
            .into_iter()
            .map(|d| Tensor::new(shape.clone(), d).unwrap())
            .collect();
        PatchSequence::new(tensors, 0, "s".into()).unwrap()
    }

    /// Literal double summation, kept independent of the coefficient path.
    fn literal_double_sum(patches: &[Vec<f64>], t: usize) -> Vec<f64> {
        let mut out = vec![0.0; patches[0].len()];
        for i in 1..=t {
            for j in i..=t {
                let w = (2.0 * j as f64 - t as f64 - 1.0) / j as f64;
                for (o, &x) in out.iter_mut().zip(&patches[i - 1]) {
                    *o += w * x;
                }
            }
        }
        out
    }

    #[test]
    fn coefficients_t1_is_zero() {
        assert_eq!(rank_pool_coefficients(1).unwrap(), vec![0.0]);
    }

    #[test]
    fn coefficients_t2() {
        let c = rank_pool_coefficients(2).unwrap();
        assert_relative_eq!(c[0], -0.5, max_relative = 1e-15);
        assert_relative_eq!(c[1], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn coefficients_t10_closed_forms() {
        let c = rank_pool_coefficients(10).unwrap();
        let h10: f64 = (1..=10).map(|j| 1.0 / j as f64).sum();
        assert_relative_eq!(c[9], 0.9, max_relative = 1e-14);
        assert_relative_eq!(c[0], 20.0 - 11.0 * h10, max_relative = 1e-14);
    }

    #[test]
    fn t0_is_rejected() {
        assert!(rank_pool_coefficients(0).is_err());
        assert!(RankPoolConfig::new(0).is_err());
    }

    #[test]
    fn single_patch_window_pools_to_zero() {
        let seq = seq_from(vec![vec![0.3, 0.9, 0.1, 0.7]], vec![2, 2]);
        let d = dynamic_image(&seq, &RankPoolConfig::new(1).unwrap()).unwrap();
        assert!(d.image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_patch_window_is_half_difference() {
        let seq = seq_from(vec![vec![0.2, 0.4], vec![0.8, 0.2]], vec![2]);
        let d = dynamic_image(&seq, &RankPoolConfig::new(2).unwrap()).unwrap();
        assert_relative_eq!(d.image.data()[0], (0.8 - 0.2) / 2.0, max_relative = 1e-6);
        assert_relative_eq!(d.image.data()[1], (0.2 - 0.4) / 2.0, max_relative = 1e-6);
    }

    #[test]
    fn constant_sequence_matches_double_sum_oracle() {
        for t in [1usize, 3, 7] {
            let c = 0.6f32;
            let patches: Vec<Vec<f32>> = (0..t).map(|_| vec![c; 6]).collect();
            let seq = seq_from(patches, vec![2, 3]);
            let d = dynamic_image(&seq, &RankPoolConfig::new(t).unwrap()).unwrap();
            let oracle =
                literal_double_sum(&(0..t).map(|_| vec![f64::from(c); 6]).collect::<Vec<_>>(), t);
            for (&got, want) in d.image.data().iter().zip(oracle) {
                assert!((f64::from(got) - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn matches_literal_double_sum_on_random_windows() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_rng(11);
        for t in 1..=12 {
            let patches_f32: Vec<Vec<f32>> = (0..t)
                .map(|_| (0..16).map(|_| rng.random::<f32>()).collect())
                .collect();
            let exact: Vec<Vec<f64>> = patches_f32
                .iter()
                .map(|p| p.iter().map(|&v| f64::from(v)).collect())
                .collect();
            let seq = seq_from(patches_f32, vec![4, 4]);
            let got = dynamic_image_values(&seq, &RankPoolConfig::new(t).unwrap()).unwrap();
            let oracle = literal_double_sum(&exact, t);
            for (&g, want) in got.iter().zip(oracle) {
                let denom = want.abs().max(1.0);
                assert!((g - want).abs() / denom < 1e-12);
            }
        }
    }

    #[test]
    fn window_length_mismatch_is_rejected() {
        let seq = seq_from(vec![vec![0.0], vec![0.0]], vec![1]);
        assert!(dynamic_image(&seq, &RankPoolConfig::new(3).unwrap()).is_err());
    }

    #[test]
    fn batch_matches_sequential_bitwise() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_rng(5);
        let seqs: Vec<PatchSequence> = (0..40)
            .map(|i| {
                let patches: Vec<Vec<f32>> = (0..5)
                    .map(|_| (0..9).map(|_| rng.random::<f32>()).collect())
                    .collect();
                let mut s = seq_from(patches, vec![3, 3]);
                s.frame_index = i;
                s
            })
            .collect();
        let cfg = RankPoolConfig::new(5).unwrap();
        let par = dynamic_image_batch(&seqs, &cfg).unwrap();
        let seq = dynamic_image_batch_seq(&seqs, &cfg).unwrap();
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.image.data(), b.image.data());
            assert_eq!(a.frame_index, b.frame_index);
        }
    }
}
