//! Deterministic synthetic corpora for desk-scale verification.
//!
//! Two generators: known-parameter Gaussian mixtures (the oracle for the EM
//! fitter) and moving-blob patch sequences with injected anomalies (the stand-
//! in for detector-cropped video). Everything derives from the spec seed, so
//! regenerating a corpus is bit-identical.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::{CorpusManifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::eval::write_labels;
use crate::linalg::cholesky_lower;
use crate::rng::tagged_rng;
use crate::tensor::{write_tensor, Tensor, PATCH_SIDE};

/// Known-parameter mixture to sample from.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub k: usize,
    pub d: usize,
    /// `k` weights summing to one.
    pub weights: Vec<f64>,
    /// `k x d` row-major means.
    pub means: Vec<f64>,
    /// `k x d x d` row-major covariances.
    pub covs: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.d == 0 {
            return Err(Error::InvalidArgument {
                reason: "mixture spec needs k >= 1 and d >= 1".into(),
            });
        }
        if self.weights.len() != self.k
            || self.means.len() != self.k * self.d
            || self.covs.len() != self.k * self.d * self.d
        {
            return Err(Error::DimensionMismatch {
                context: "mixture spec lengths do not match k and d".into(),
            });
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument {
                reason: format!("mixture weights must be non-negative and sum to 1, got {total}"),
            });
        }
        Ok(())
    }
}

/// Draw `n` samples; returns the samples (`n x d` row-major) and the
/// component index of each.
pub fn sample_mixture(spec: &MixtureSpec) -> Result<(Vec<f64>, Vec<usize>)> {
    spec.validate()?;
    let d = spec.d;
    let chols: Vec<Vec<f64>> = (0..spec.k)
        .map(|j| {
            cholesky_lower(&spec.covs[j * d * d..(j + 1) * d * d], d)
                .ok_or(Error::CovarianceNotPd { component: j })
        })
        .collect::<Result<_>>()?;
    let mut rng = tagged_rng(spec.seed, "synth.mixture");
    let mut samples = Vec::with_capacity(spec.n * d);
    let mut assignments = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u: f64 = rng.random();
        let mut component = spec.k - 1;
        let mut acc = 0.0;
        for (j, &w) in spec.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                component = j;
                break;
            }
        }
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let l = &chols[component];
        let mu = &spec.means[component * d..(component + 1) * d];
        for r in 0..d {
            let mut v = mu[r];
            for c in 0..=r {
                v += l[r * d + c] * g[c];
            }
            samples.push(v);
        }
        assignments.push(component);
    }
    Ok((samples, assignments))
}

/// Anomaly types the video generator can inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyKind {
    /// The blob translates at [`FAST_FACTOR`] times its drawn speed.
    FastMotion,
    /// The blob carries a texture absent from the training dictionary.
    NovelTexture,
}

impl AnomalyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fast_motion" => Ok(AnomalyKind::FastMotion),
            "novel_texture" => Ok(AnomalyKind::NovelTexture),
            other => Err(Error::InvalidArgument {
                reason: format!("unknown anomaly kind {other:?}"),
            }),
        }
    }
}

/// Speed multiplier of fast-motion anomalies.
pub const FAST_FACTOR: f64 = 4.0;

/// Inclusive frame range with an anomaly type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub start: u32,
    pub end: u32,
    pub kind: AnomalyKind,
}

/// Moving-blob corpus description.
#[derive(Debug, Clone)]
pub struct VideoSpec {
    pub frames: u32,
    /// Patches per sequence; the window rank pooling consumes.
    pub t: usize,
    pub injections: Vec<Injection>,
    pub speed_min: f64,
    pub speed_max: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl VideoSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 || self.t == 0 {
            return Err(Error::InvalidArgument {
                reason: "video spec needs frames >= 1 and t >= 1".into(),
            });
        }
        if !(self.speed_min > 0.0 && self.speed_max >= self.speed_min) {
            return Err(Error::InvalidArgument {
                reason: format!(
                    "speed range must satisfy 0 < min <= max, got {}..{}",
                    self.speed_min, self.speed_max
                ),
            });
        }
        if self.noise_std < 0.0 {
            return Err(Error::InvalidArgument {
                reason: "noise_std must be >= 0".into(),
            });
        }
        for inj in &self.injections {
            if inj.start > inj.end || inj.end >= self.frames {
                return Err(Error::InvalidArgument {
                    reason: format!(
                        "injection {}..{} outside 0..{}",
                        inj.start,
                        inj.end,
                        self.frames - 1
                    ),
                });
            }
        }
        Ok(())
    }

    fn anomaly_at(&self, frame: u32) -> Option<AnomalyKind> {
        self.injections
            .iter()
            .find(|i| (i.start..=i.end).contains(&frame))
            .map(|i| i.kind)
    }
}

const TEX_SIDE: usize = 24;
const TEX_LO: f32 = 0.3;
const TEX_HI: f32 = 0.95;
const BACKGROUND: f32 = 0.1;

/// Texture dictionary: the first three train the models, the last is the
/// out-of-distribution appearance used by `novel_texture`.
fn texture_tile(kind: usize, size: usize) -> Vec<f32> {
    let mut tile = vec![TEX_LO; size * size];
    match kind {
        // checker
        0 => {
            let block = (size / 6).max(1);
            for y in 0..size {
                for x in 0..size {
                    if (y / block + x / block) % 2 == 0 {
                        tile[y * size + x] = TEX_HI;
                    }
                }
            }
        }
        // horizontal gradient
        1 => {
            for y in 0..size {
                for x in 0..size {
                    let f = if size > 1 { x as f32 / (size - 1) as f32 } else { 0.0 };
                    tile[y * size + x] = TEX_LO + (TEX_HI - TEX_LO) * f;
                }
            }
        }
        // stripes
        2 => {
            let period = (size / 8).max(1);
            for y in 0..size {
                if (y / period) % 2 == 0 {
                    for x in 0..size {
                        tile[y * size + x] = TEX_HI;
                    }
                }
            }
        }
        // spots
        _ => {
            let cell = (size / 3).max(2);
            let radius = cell as f32 / 3.0;
            for y in 0..size {
                for x in 0..size {
                    let cy = (y / cell) * cell + cell / 2;
                    let cx = (x / cell) * cell + cell / 2;
                    let dy = y as f32 - cy as f32;
                    let dx = x as f32 - cx as f32;
                    if (dy * dy + dx * dx).sqrt() <= radius {
                        tile[y * size + x] = TEX_HI;
                    }
                }
            }
        }
    }
    tile
}

/// Square patches drawn from the three training textures with mild noise,
/// clamped to [0, 1]. Handy as a tiny training corpus.
pub fn pattern_patches(count: usize, size: usize, seed: u64) -> Vec<Tensor> {
    let tiles: Vec<Vec<f32>> = (0..3).map(|k| texture_tile(k, size)).collect();
    let mut rng = tagged_rng(seed, "synth.patterns");
    (0..count)
        .map(|i| {
            let data: Vec<f32> = tiles[i % 3]
                .iter()
                .map(|&v| {
                    let g: f64 = rng.sample(StandardNormal);
                    (f64::from(v) + 0.02 * g).clamp(0.0, 1.0) as f32
                })
                .collect();
            Tensor::new(vec![size, size], data).expect("clamped values are finite")
        })
        .collect()
}

/// Render one 64x64 patch: the textured tile at an integer offset from the
/// patch center over a flat background, plus clamped Gaussian pixel noise.
fn render_patch(
    tile: &[f32],
    offset_y: i64,
    offset_x: i64,
    noise_std: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<f32> {
    let side = PATCH_SIDE as i64;
    let tex = TEX_SIDE as i64;
    let top = (side - tex) / 2 + offset_y;
    let left = (side - tex) / 2 + offset_x;
    let mut patch = vec![BACKGROUND; PATCH_SIDE * PATCH_SIDE];
    for ty in 0..tex {
        let y = top + ty;
        if y < 0 || y >= side {
            continue;
        }
        for tx in 0..tex {
            let x = left + tx;
            if x < 0 || x >= side {
                continue;
            }
            patch[(y * side + x) as usize] = tile[(ty * tex + tx) as usize];
        }
    }
    if noise_std > 0.0 {
        for v in &mut patch {
            let g: f64 = rng.sample(StandardNormal);
            *v = (f64::from(*v) + noise_std * g).clamp(0.0, 1.0) as f32;
        }
    }
    patch
}

/// Paths emitted by [`make_video_corpus`].
#[derive(Debug, Clone)]
pub struct VideoCorpus {
    pub manifest_path: PathBuf,
    pub labels_path: PathBuf,
    pub labels: Vec<(u32, u8)>,
}

/// Generate one sequence per frame into `out_dir` (which must exist), plus a
/// manifest with relative paths and the ground-truth label file.
///
/// The blob sits centered in the current patch and is displaced backwards
/// through the window, so motion appears as the blob sliding into place —
/// the same geometry a fixed bounding box over previous frames produces.
pub fn make_video_corpus(spec: &VideoSpec, out_dir: &Path) -> Result<VideoCorpus> {
    spec.validate()?;
    let tiles: Vec<Vec<f32>> = (0..4).map(|k| texture_tile(k, TEX_SIDE)).collect();
    let mut draw_rng = tagged_rng(spec.seed, "synth.video.draws");
    let mut noise_rng = tagged_rng(spec.seed, "synth.video.noise");

    let mut entries = Vec::with_capacity(spec.frames as usize);
    let mut labels = Vec::with_capacity(spec.frames as usize);
    for frame in 0..spec.frames {
        let mut texture: usize = draw_rng.random_range(0..3);
        let angle: f64 = draw_rng.random_range(0.0..std::f64::consts::TAU);
        let mut speed: f64 = draw_rng.random_range(spec.speed_min..=spec.speed_max);
        let anomaly = spec.anomaly_at(frame);
        match anomaly {
            Some(AnomalyKind::FastMotion) => speed *= FAST_FACTOR,
            Some(AnomalyKind::NovelTexture) => texture = 3,
            None => {}
        }
        let (dy, dx) = (angle.sin(), angle.cos());

        let mut data = Vec::with_capacity(spec.t * PATCH_SIDE * PATCH_SIDE);
        for step in 0..spec.t {
            // displacement of this patch relative to the current frame
            let back = (spec.t - 1 - step) as f64;
            let offset_y = (-dy * speed * back).round() as i64;
            let offset_x = (-dx * speed * back).round() as i64;
            data.extend(render_patch(
                &tiles[texture],
                offset_y,
                offset_x,
                spec.noise_std,
                &mut noise_rng,
            ));
        }
        let tensor = Tensor::new(vec![spec.t, PATCH_SIDE, PATCH_SIDE], data)?;
        let file = format!("seq_{frame:05}.gdt");
        write_tensor(&tensor, &out_dir.join(&file))?;
        entries.push(ManifestEntry {
            sequence_id: format!("seq{frame:05}"),
            path: PathBuf::from(file),
            frame_index: frame,
            label: None,
        });
        labels.push((frame, u8::from(anomaly.is_some())));
    }

    let manifest = CorpusManifest::new(entries, out_dir.to_path_buf())?;
    let manifest_path = out_dir.join("manifest.txt");
    manifest.write_to(&manifest_path)?;
    let labels_path = out_dir.join("labels.csv");
    write_labels(&labels, &labels_path)?;
    Ok(VideoCorpus {
        manifest_path,
        labels_path,
        labels,
    })
}
