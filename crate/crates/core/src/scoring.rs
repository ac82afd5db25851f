//! Anomaly scoring: PSNR, latent likelihood, late fusion, frame aggregation
//! and scene normalization.
//!
//! Per patch sequence the appearance stream runs the current patch through
//! its autoencoder and mixture, the motion stream does the same with the
//! window's dynamic image, and the four components fuse into
//!
//! ```text
//! A = -(l1 * P_oi + l2 * PSNR_oi + l3 * P_di + l4 * PSNR_di)
//! ```
//!
//! so low likelihood or poor reconstruction raises the anomaly value. A frame
//! scores the maximum over its records; scenes normalize by min-max to [0, 1].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dae::DaeModel;
use crate::error::{Error, Result};
use crate::gmm::{sample_log_likelihood, GmmModel};
use crate::par::{map_batch, map_batch_seq};
use crate::rankpool::{dynamic_image, RankPoolConfig};
use crate::tensor::PatchSequence;

/// Floor applied to the mean squared error so a perfect reconstruction still
/// yields a finite PSNR.
pub const MSE_FLOOR: f64 = 1e-12;

pub const SCORE_HEADER: &str = "frame_index,p_oi,psnr_oi,p_di,psnr_di,anomaly,normalized";

/// Late-fusion weights; non-negative, at least one strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl FusionWeights {
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, lambda4: f64) -> Result<Self> {
        let all = [lambda1, lambda2, lambda3, lambda4];
        if all.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidArgument {
                reason: format!("fusion weights must be finite and non-negative, got {all:?}"),
            });
        }
        if all.iter().all(|&l| l == 0.0) {
            return Err(Error::InvalidArgument {
                reason: "at least one fusion weight must be positive".into(),
            });
        }
        Ok(FusionWeights {
            lambda1,
            lambda2,
            lambda3,
            lambda4,
        })
    }
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            lambda4: 1.0,
        }
    }
}

/// Per-sequence score components and their fused anomaly value.
#[derive(Debug, Clone)]
pub struct ScoreRecord {
    pub frame_index: u32,
    pub sequence_id: String,
    pub p_oi: f64,
    pub psnr_oi: f64,
    pub p_di: f64,
    pub psnr_di: f64,
    pub anomaly: f64,
}

/// One frame's raw (max over records) and min-max normalized score. Frames
/// without any sequence carry no components.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScore {
    pub frame_index: u32,
    pub raw: f64,
    pub normalized: f64,
    pub components: Option<[f64; 4]>,
}

/// `10 * log10(max(x) / MSE(x, xhat))` with the MSE floored at [`MSE_FLOOR`].
pub fn psnr(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            context: format!("psnr needs equal non-empty inputs, got {} and {}", x.len(), x_hat.len()),
        });
    }
    let max = x.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !(max > 0.0) {
        return Err(Error::InvalidArgument {
            reason: format!("psnr needs max(x) > 0, got {max}"),
        });
    }
    let mse = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    Ok(10.0 * (max / mse.max(MSE_FLOOR)).log10())
}

/// Fused anomaly value of one record's four components.
pub fn fuse(p_oi: f64, psnr_oi: f64, p_di: f64, psnr_di: f64, w: &FusionWeights) -> Result<f64> {
    let comps = [p_oi, psnr_oi, p_di, psnr_di];
    if comps.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument {
            reason: format!("fusion components must be finite, got {comps:?}"),
        });
    }
    Ok(-(w.lambda1 * p_oi + w.lambda2 * psnr_oi + w.lambda3 * p_di + w.lambda4 * psnr_di))
}

/// Maximum anomaly value over one frame's records.
pub fn frame_score(records: &[ScoreRecord]) -> Result<f64> {
    let Some(first) = records.first() else {
        return Err(Error::EmptyInput {
            context: "frame_score on an empty record list".into(),
        });
    };
    if records.iter().any(|r| r.frame_index != first.frame_index) {
        return Err(Error::InvalidArgument {
            reason: "frame_score records must share one frame index".into(),
        });
    }
    Ok(records
        .iter()
        .map(|r| r.anomaly)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Min-max normalization over one scene; a constant input maps to all zeros.
pub fn normalize_scores(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyInput {
            context: "normalize_scores on an empty scene".into(),
        });
    }
    let min = raw.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let max = raw.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if max == min {
        return Ok(vec![0.0; raw.len()]);
    }
    let span = max - min;
    Ok(raw.iter().map(|&v| (v - min) / span).collect())
}

/// Two-stream models used when scoring a corpus.
pub struct ScoringModels<'a> {
    pub patch_dae: &'a DaeModel,
    pub motion_dae: &'a DaeModel,
    pub patch_gmm: &'a GmmModel,
    pub motion_gmm: &'a GmmModel,
}

impl ScoringModels<'_> {
    fn check(&self, patch_len: usize) -> Result<()> {
        if self.patch_dae.input_dim() != patch_len {
            return Err(Error::ModelMismatch {
                context: format!(
                    "patch autoencoder expects {} inputs, patches hold {patch_len}",
                    self.patch_dae.input_dim()
                ),
            });
        }
        if self.motion_dae.input_dim() != patch_len {
            return Err(Error::ModelMismatch {
                context: format!(
                    "motion autoencoder expects {} inputs, dynamic images hold {patch_len}",
                    self.motion_dae.input_dim()
                ),
            });
        }
        if self.patch_gmm.d() != self.patch_dae.bottleneck_dim() {
            return Err(Error::ModelMismatch {
                context: format!(
                    "patch mixture dimension {} vs autoencoder bottleneck {}",
                    self.patch_gmm.d(),
                    self.patch_dae.bottleneck_dim()
                ),
            });
        }
        if self.motion_gmm.d() != self.motion_dae.bottleneck_dim() {
            return Err(Error::ModelMismatch {
                context: format!(
                    "motion mixture dimension {} vs autoencoder bottleneck {}",
                    self.motion_gmm.d(),
                    self.motion_dae.bottleneck_dim()
                ),
            });
        }
        Ok(())
    }

    fn score_sequence(
        &self,
        seq: &PatchSequence,
        cfg: &RankPoolConfig,
        w: &FusionWeights,
    ) -> Result<ScoreRecord> {
        let inner = || -> Result<ScoreRecord> {
            let patch = self.patch_dae.map_input(&seq.current_patch().to_f64());
            let patch_fwd = self.patch_dae.forward(&patch)?;
            let psnr_oi = psnr(&patch, &patch_fwd.reconstruction)?;
            let p_oi = sample_log_likelihood(self.patch_gmm, &patch_fwd.latent)?;

            let motion = dynamic_image(seq, cfg)?;
            let motion_in = self.motion_dae.map_input(&motion.image.to_f64());
            let motion_fwd = self.motion_dae.forward(&motion_in)?;
            let psnr_di = psnr(&motion_in, &motion_fwd.reconstruction)?;
            let p_di = sample_log_likelihood(self.motion_gmm, &motion_fwd.latent)?;

            let anomaly = fuse(p_oi, psnr_oi, p_di, psnr_di, w)?;
            Ok(ScoreRecord {
                frame_index: seq.frame_index,
                sequence_id: seq.sequence_id.clone(),
                p_oi,
                psnr_oi,
                p_di,
                psnr_di,
                anomaly,
            })
        };
        inner().map_err(|source| Error::Scoring {
            sequence_id: seq.sequence_id.clone(),
            source: Box::new(source),
        })
    }
}

/// Per-sequence score records for a corpus, in corpus order.
pub fn sequence_scores(
    models: &ScoringModels,
    corpus: &[PatchSequence],
    cfg: &RankPoolConfig,
    w: &FusionWeights,
) -> Result<Vec<ScoreRecord>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput {
            context: "scoring corpus".into(),
        });
    }
    models.check(corpus[0].current_patch().len())?;
    map_batch(corpus, |seq| models.score_sequence(seq, cfg, w))
        .into_iter()
        .collect()
}

/// Sequential baseline of [`sequence_scores`].
pub fn sequence_scores_seq(
    models: &ScoringModels,
    corpus: &[PatchSequence],
    cfg: &RankPoolConfig,
    w: &FusionWeights,
) -> Result<Vec<ScoreRecord>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput {
            context: "scoring corpus".into(),
        });
    }
    models.check(corpus[0].current_patch().len())?;
    map_batch_seq(corpus, |seq| models.score_sequence(seq, cfg, w))
        .into_iter()
        .collect()
}

/// Score a corpus end to end: records, frame maxima, gap filling and scene
/// normalization. Frames of the covered range without any sequence receive
/// the scene minimum, which normalizes to zero.
pub fn score_corpus(
    models: &ScoringModels,
    corpus: &[PatchSequence],
    cfg: &RankPoolConfig,
    w: &FusionWeights,
) -> Result<Vec<FrameScore>> {
    let records = sequence_scores(models, corpus, cfg, w)?;

    let mut frames: BTreeMap<u32, (f64, [f64; 4])> = BTreeMap::new();
    for r in &records {
        let comps = [r.p_oi, r.psnr_oi, r.p_di, r.psnr_di];
        frames
            .entry(r.frame_index)
            .and_modify(|(raw, best)| {
                if r.anomaly > *raw {
                    *raw = r.anomaly;
                    *best = comps;
                }
            })
            .or_insert((r.anomaly, comps));
    }

    let scene_min = frames
        .values()
        .map(|(raw, _)| *raw)
        .fold(f64::INFINITY, f64::min);
    let first = *frames.keys().next().expect("non-empty corpus");
    let last = *frames.keys().next_back().expect("non-empty corpus");

    let mut ordered: Vec<(u32, f64, Option<[f64; 4]>)> = Vec::new();
    for frame in first..=last {
        match frames.get(&frame) {
            Some((raw, comps)) => ordered.push((frame, *raw, Some(*comps))),
            None => ordered.push((frame, scene_min, None)),
        }
    }

    let raws: Vec<f64> = ordered.iter().map(|(_, raw, _)| *raw).collect();
    let normalized = normalize_scores(&raws)?;
    Ok(ordered
        .into_iter()
        .zip(normalized)
        .map(|((frame_index, raw, components), normalized)| FrameScore {
            frame_index,
            raw,
            normalized,
            components,
        })
        .collect())
}

/// Write the score file: a header line, then one line per frame.
pub fn write_scores(scores: &[FrameScore], path: &Path) -> Result<()> {
    let mut out = String::from(SCORE_HEADER);
    out.push('\n');
    for s in scores {
        match s.components {
            Some([p_oi, psnr_oi, p_di, psnr_di]) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    s.frame_index, p_oi, psnr_oi, p_di, psnr_di, s.raw, s.normalized
                ));
            }
            None => {
                out.push_str(&format!(
                    "{},,,,,{},{}\n",
                    s.frame_index, s.raw, s.normalized
                ));
            }
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Read a score file written by [`write_scores`].
pub fn read_scores(path: &Path) -> Result<Vec<FrameScore>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == SCORE_HEADER => {}
        other => {
            return Err(Error::InvalidArgument {
                reason: format!("{}: bad score header {other:?}", path.display()),
            })
        }
    }
    let mut scores = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidArgument {
                reason: format!("{}:{}: expected 7 fields", path.display(), lineno + 2),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::InvalidArgument {
                reason: format!("{}:{}: bad number {s:?}", path.display(), lineno + 2),
            })
        };
        let frame_index: u32 = fields[0].parse().map_err(|_| Error::InvalidArgument {
            reason: format!("{}:{}: bad frame index", path.display(), lineno + 2),
        })?;
        let components = if fields[1].is_empty() {
            None
        } else {
            Some([
                parse(fields[1])?,
                parse(fields[2])?,
                parse(fields[3])?,
                parse(fields[4])?,
            ])
        };
        scores.push(FrameScore {
            frame_index,
            raw: parse(fields[5])?,
            normalized: parse(fields[6])?,
            components,
        });
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::{train, TrainConfig};
    use crate::gmm::{fit, EmConfig, Samples};
    use crate::rng::seeded_rng;
    use crate::tensor::Tensor;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn psnr_of_known_ratio() {
        // max 1, MSE 0.01 -> 10 * log10(100) = 20
        let x = vec![1.0, 0.0];
        let xh = vec![0.9, -0.1];
        assert_relative_eq!(psnr(&x, &xh).unwrap(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn psnr_of_perfect_reconstruction_hits_the_floor() {
        let x = vec![0.25, 0.5];
        let expected = 10.0 * (0.5 / MSE_FLOOR).log10();
        assert_relative_eq!(psnr(&x, &x).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn psnr_matches_independent_loop() {
        let mut rng = seeded_rng(1);
        let x: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
        let xh: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for i in 0..256 {
            if x[i] > max {
                max = x[i];
            }
            sum += (x[i] - xh[i]) * (x[i] - xh[i]);
        }
        let expected = 10.0 * (max / (sum / 256.0)).log10();
        assert_relative_eq!(psnr(&x, &xh).unwrap(), expected, max_relative = 1e-10);
    }

    #[test]
    fn psnr_rejects_non_positive_max_and_mismatched_shapes() {
        assert!(psnr(&[0.0, -0.5], &[0.0, 0.0]).is_err());
        assert!(psnr(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn fuse_single_term() {
        let w = FusionWeights::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(fuse(-5.0, 100.0, 100.0, 100.0, &w).unwrap(), 5.0);
    }

    #[test]
    fn fuse_direct_substitution() {
        let w = FusionWeights::default();
        assert_eq!(fuse(-2.0, 30.0, -3.0, 25.0, &w).unwrap(), -50.0);
    }

    #[test]
    fn all_zero_weights_are_rejected() {
        assert!(FusionWeights::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(FusionWeights::new(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn fuse_rejects_non_finite_components() {
        let w = FusionWeights::default();
        assert!(fuse(f64::NAN, 0.0, 0.0, 0.0, &w).is_err());
    }

    #[test]
    fn raising_a_weighted_component_lowers_the_anomaly() {
        let w = FusionWeights::default();
        let base = fuse(1.0, 20.0, 2.0, 25.0, &w).unwrap();
        assert!(fuse(2.0, 20.0, 2.0, 25.0, &w).unwrap() < base);
        assert!(fuse(1.0, 21.0, 2.0, 25.0, &w).unwrap() < base);
        assert!(fuse(1.0, 20.0, 3.0, 25.0, &w).unwrap() < base);
        assert!(fuse(1.0, 20.0, 2.0, 26.0, &w).unwrap() < base);
    }

    fn record(frame: u32, anomaly: f64) -> ScoreRecord {
        ScoreRecord {
            frame_index: frame,
            sequence_id: format!("s{frame}"),
            p_oi: 0.0,
            psnr_oi: 0.0,
            p_di: 0.0,
            psnr_di: 0.0,
            anomaly,
        }
    }

    #[test]
    fn frame_score_takes_the_maximum() {
        assert_eq!(frame_score(&[record(3, 3.2)]).unwrap(), 3.2);
        let records = vec![record(1, 1.0), record(1, 7.5), record(1, -2.0)];
        assert_eq!(frame_score(&records).unwrap(), 7.5);
        let mut reversed = records.clone();
        reversed.reverse();
        assert_eq!(frame_score(&reversed).unwrap(), 7.5);
    }

    #[test]
    fn frame_score_rejects_empty_and_mixed_frames() {
        assert!(frame_score(&[]).is_err());
        assert!(frame_score(&[record(1, 0.0), record(2, 0.0)]).is_err());
    }

    #[test]
    fn normalize_maps_min_to_zero_and_max_to_one() {
        assert_eq!(
            normalize_scores(&[2.0, 4.0, 6.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn normalize_degenerates_to_zero() {
        assert_eq!(normalize_scores(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn normalize_is_invariant_to_positive_affine_transforms() {
        let raw = [3.0, -1.0, 0.5, 7.0];
        let scaled: Vec<f64> = raw.iter().map(|v| 2.5 * v + 11.0).collect();
        let a = normalize_scores(&raw).unwrap();
        let b = normalize_scores(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-12);
        }
    }

    /// Small trained two-stream setup over 8x8 patches.
    fn tiny_models() -> (DaeModel, DaeModel, GmmModel, GmmModel, Vec<PatchSequence>) {
        let t = 3;
        let corpus: Vec<PatchSequence> = (0..12u32)
            .map(|f| {
                let patches = crate::synth::pattern_patches(t, 8, 900 + u64::from(f));
                PatchSequence::new(patches, f, format!("seq{f}")).unwrap()
            })
            .collect();
        let cfg = TrainConfig {
            sigma: 0.01,
            beta: 1e-4,
            learning_rate: 0.005,
            lr_decay: 0.98,
            batch_size: 6,
            max_epochs: 4,
            seed: 7,
        };
        let dims = [64, 16, 4, 16, 64];
        let patches: Vec<Tensor> = corpus.iter().map(|s| s.current_patch().clone()).collect();
        let patch_dae = train(&patches, &cfg, &dims).unwrap().model;

        let rp = RankPoolConfig::new(t).unwrap();
        let motions: Vec<Tensor> = corpus
            .iter()
            .map(|s| dynamic_image(s, &rp).unwrap().image)
            .collect();
        let motion_dae = train(&motions, &cfg, &dims).unwrap().model;

        let em = EmConfig {
            k: 2,
            seed: 8,
            ..EmConfig::default()
        };
        let latents: Vec<f64> = patches
            .iter()
            .flat_map(|p| patch_dae.encode(&p.to_f64()).unwrap())
            .collect();
        let patch_gmm = fit(&Samples::new(&latents, 12, 4).unwrap(), &em)
            .unwrap()
            .model;
        let mlat: Vec<f64> = motions
            .iter()
            .flat_map(|m| motion_dae.encode(&m.to_f64()).unwrap())
            .collect();
        let motion_gmm = fit(&Samples::new(&mlat, 12, 4).unwrap(), &em)
            .unwrap()
            .model;
        (patch_dae, motion_dae, patch_gmm, motion_gmm, corpus)
    }

    #[test]
    fn score_corpus_is_deterministic_and_normalized() {
        let (pd, md, pg, mg, corpus) = tiny_models();
        let models = ScoringModels {
            patch_dae: &pd,
            motion_dae: &md,
            patch_gmm: &pg,
            motion_gmm: &mg,
        };
        let cfg = RankPoolConfig::new(3).unwrap();
        let w = FusionWeights::default();
        let a = score_corpus(&models, &corpus, &cfg, &w).unwrap();
        let b = score_corpus(&models, &corpus, &cfg, &w).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert!(a
            .iter()
            .all(|s| (0.0..=1.0).contains(&s.normalized)));
        let min = a.iter().map(|s| s.normalized).fold(f64::INFINITY, f64::min);
        let max = a
            .iter()
            .map(|s| s.normalized)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn duplicating_a_sequence_leaves_its_frame_score_unchanged() {
        let (pd, md, pg, mg, mut corpus) = tiny_models();
        let models = ScoringModels {
            patch_dae: &pd,
            motion_dae: &md,
            patch_gmm: &pg,
            motion_gmm: &mg,
        };
        let cfg = RankPoolConfig::new(3).unwrap();
        let w = FusionWeights::default();
        let base = score_corpus(&models, &corpus, &cfg, &w).unwrap();
        corpus.push(corpus[4].clone());
        let doubled = score_corpus(&models, &corpus, &cfg, &w).unwrap();
        assert_eq!(base, doubled);
    }

    #[test]
    fn single_frame_corpus_normalizes_to_zero() {
        let (pd, md, pg, mg, corpus) = tiny_models();
        let models = ScoringModels {
            patch_dae: &pd,
            motion_dae: &md,
            patch_gmm: &pg,
            motion_gmm: &mg,
        };
        let cfg = RankPoolConfig::new(3).unwrap();
        let w = FusionWeights::default();
        let scores = score_corpus(&models, &corpus[..1], &cfg, &w).unwrap();
        assert_eq!(scores.len(), 1);
        assert_eq!(scores[0].normalized, 0.0);
    }

    #[test]
    fn frames_without_sequences_take_the_scene_minimum() {
        let (pd, md, pg, mg, corpus) = tiny_models();
        let models = ScoringModels {
            patch_dae: &pd,
            motion_dae: &md,
            patch_gmm: &pg,
            motion_gmm: &mg,
        };
        let cfg = RankPoolConfig::new(3).unwrap();
        let w = FusionWeights::default();
        // keep frames 0 and 2: frame 1 must be filled
        let sparse = vec![corpus[0].clone(), corpus[2].clone()];
        let scores = score_corpus(&models, &sparse, &cfg, &w).unwrap();
        assert_eq!(scores.len(), 3);
        assert!(scores[1].components.is_none());
        assert_eq!(scores[1].normalized, 0.0);
    }

    #[test]
    fn mismatched_mixture_dimension_is_a_model_error() {
        let (pd, md, _pg, mg, corpus) = tiny_models();
        let wrong = GmmModel::new(1, 3, vec![1.0], vec![0.0; 3], {
            let mut eye = vec![0.0; 9];
            for i in 0..3 {
                eye[i * 3 + i] = 1.0;
            }
            eye
        })
        .unwrap();
        let models = ScoringModels {
            patch_dae: &pd,
            motion_dae: &md,
            patch_gmm: &wrong,
            motion_gmm: &mg,
        };
        let cfg = RankPoolConfig::new(3).unwrap();
        let err = score_corpus(&models, &corpus, &cfg, &FusionWeights::default()).unwrap_err();
        assert!(matches!(err, Error::ModelMismatch { .. }));
    }

    #[test]
    fn score_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let scores = vec![
            FrameScore {
                frame_index: 0,
                raw: -51.25,
                normalized: 0.0,
                components: Some([12.5, 31.25, 8.0, -0.5]),
            },
            FrameScore {
                frame_index: 1,
                raw: -13.0,
                normalized: 1.0,
                components: None,
            },
        ];
        write_scores(&scores, &path).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(back, scores);
    }
}
