//! Plain-text pipeline configuration.
//!
//! One `key = value` pair per line, `#` comments, unknown keys rejected.
//! Command-line `--set key=value` overrides apply after the file. Every key
//! has a default, so all commands run without a config file.

use std::fs;
use std::path::{Path, PathBuf};

use vad_core::synth::{AnomalyKind, Injection};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct SynthSection {
    pub train_dir: PathBuf,
    pub test_dir: PathBuf,
    pub train_frames: u32,
    pub test_frames: u32,
    pub anomalies: Vec<Injection>,
    pub speed_min: f64,
    pub speed_max: f64,
    pub noise_std: f64,
}

#[derive(Debug, Clone)]
pub struct DaeSection {
    pub dims: Vec<usize>,
    pub sigma: f64,
    pub beta: f64,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct GmmSection {
    pub k: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub cov_reg: f64,
}

#[derive(Debug, Clone)]
pub struct FusionSection {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

#[derive(Debug, Clone)]
pub struct EvalSection {
    pub grid: bool,
    pub grid_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PathsSection {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub patch_dae: PathBuf,
    pub motion_dae: PathBuf,
    pub patch_gmm: PathBuf,
    pub motion_gmm: PathBuf,
    pub patch_loss_log: PathBuf,
    pub motion_loss_log: PathBuf,
    pub em_log: PathBuf,
    pub scores: PathBuf,
    pub labels: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Master seed; every consumer derives its own tagged stream.
    pub seed: u64,
    /// Rank-pooling window length.
    pub t: usize,
    pub synth: SynthSection,
    pub dae: DaeSection,
    pub gmm: GmmSection,
    pub fusion: FusionSection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            t: 10,
            synth: SynthSection {
                train_dir: "synth_train".into(),
                test_dir: "synth_test".into(),
                train_frames: 240,
                test_frames: 200,
                anomalies: vec![
                    Injection {
                        start: 60,
                        end: 79,
                        kind: AnomalyKind::FastMotion,
                    },
                    Injection {
                        start: 140,
                        end: 159,
                        kind: AnomalyKind::NovelTexture,
                    },
                ],
                speed_min: 1.0,
                speed_max: 2.0,
                noise_std: 0.02,
            },
            dae: DaeSection {
                dims: vec![4096, 1024, 256, 64, 32, 64, 256, 1024, 4096],
                sigma: 0.01,
                beta: 1e-4,
                learning_rate: 0.01,
                lr_decay: 0.95,
                batch_size: 1000,
                max_epochs: 100,
            },
            gmm: GmmSection {
                k: 15,
                epsilon: 1e-6,
                max_iters: 500,
                cov_reg: 1e-6,
            },
            fusion: FusionSection {
                lambda1: 1.0,
                lambda2: 1.0,
                lambda3: 1.0,
                lambda4: 1.0,
            },
            eval: EvalSection {
                grid: false,
                grid_values: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            },
            paths: PathsSection {
                train_manifest: "synth_train/manifest.txt".into(),
                test_manifest: "synth_test/manifest.txt".into(),
                patch_dae: "patch.dae1".into(),
                motion_dae: "motion.dae1".into(),
                patch_gmm: "patch.gmm1".into(),
                motion_gmm: "motion.gmm1".into(),
                patch_loss_log: "patch_loss.csv".into(),
                motion_loss_log: "motion_loss.csv".into(),
                em_log: "em_log.csv".into(),
                scores: "scores.csv".into(),
                labels: "synth_test/labels.csv".into(),
                report: "eval_report.csv".into(),
            },
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("key {key}: expected {what}, got {value:?}"))
}

fn parse_injections(key: &str, value: &str) -> Result<Vec<Injection>, CliError> {
    let mut out = Vec::new();
    for part in value.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (range, kind) = part
            .split_once(':')
            .ok_or_else(|| bad(key, part, "start-end:kind"))?;
        let (start, end) = range
            .split_once('-')
            .ok_or_else(|| bad(key, part, "start-end:kind"))?;
        let start: u32 = start.trim().parse().map_err(|_| bad(key, part, "a frame index"))?;
        let end: u32 = end.trim().parse().map_err(|_| bad(key, part, "a frame index"))?;
        let kind = AnomalyKind::parse(kind.trim())
            .map_err(|_| bad(key, part, "fast_motion or novel_texture"))?;
        out.push(Injection { start, end, kind });
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| bad(key, value, what)))
        .collect()
}

impl PipelineConfig {
    /// Apply one `key = value` pair; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        macro_rules! num {
            ($what:literal) => {
                value.trim().parse().map_err(|_| bad(key, value, $what))?
            };
        }
        match key {
            "seed" => self.seed = num!("an unsigned integer"),
            "t" => self.t = num!("a positive integer"),
            "synth.train_dir" => self.synth.train_dir = value.into(),
            "synth.test_dir" => self.synth.test_dir = value.into(),
            "synth.train_frames" => self.synth.train_frames = num!("a frame count"),
            "synth.test_frames" => self.synth.test_frames = num!("a frame count"),
            "synth.anomalies" => self.synth.anomalies = parse_injections(key, value)?,
            "synth.speed_min" => self.synth.speed_min = num!("a number"),
            "synth.speed_max" => self.synth.speed_max = num!("a number"),
            "synth.noise_std" => self.synth.noise_std = num!("a number"),
            "dae.dims" => self.dae.dims = parse_list(key, value, "a comma-separated dim list")?,
            "dae.sigma" => self.dae.sigma = num!("a number"),
            "dae.beta" => self.dae.beta = num!("a number"),
            "dae.learning_rate" => self.dae.learning_rate = num!("a number"),
            "dae.lr_decay" => self.dae.lr_decay = num!("a number"),
            "dae.batch_size" => self.dae.batch_size = num!("a positive integer"),
            "dae.max_epochs" => self.dae.max_epochs = num!("an integer"),
            "gmm.k" => self.gmm.k = num!("a positive integer"),
            "gmm.epsilon" => self.gmm.epsilon = num!("a number"),
            "gmm.max_iters" => self.gmm.max_iters = num!("an integer"),
            "gmm.cov_reg" => self.gmm.cov_reg = num!("a number"),
            "fusion.lambda1" => self.fusion.lambda1 = num!("a number"),
            "fusion.lambda2" => self.fusion.lambda2 = num!("a number"),
            "fusion.lambda3" => self.fusion.lambda3 = num!("a number"),
            "fusion.lambda4" => self.fusion.lambda4 = num!("a number"),
            "eval.grid" => {
                self.eval.grid = match value.trim() {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(bad(key, value, "true or false")),
                }
            }
            "eval.grid_values" => {
                self.eval.grid_values = parse_list(key, value, "a comma-separated number list")?
            }
            "paths.train_manifest" => self.paths.train_manifest = value.into(),
            "paths.test_manifest" => self.paths.test_manifest = value.into(),
            "paths.patch_dae" => self.paths.patch_dae = value.into(),
            "paths.motion_dae" => self.paths.motion_dae = value.into(),
            "paths.patch_gmm" => self.paths.patch_gmm = value.into(),
            "paths.motion_gmm" => self.paths.motion_gmm = value.into(),
            "paths.patch_loss_log" => self.paths.patch_loss_log = value.into(),
            "paths.motion_loss_log" => self.paths.motion_loss_log = value.into(),
            "paths.em_log" => self.paths.em_log = value.into(),
            "paths.scores" => self.paths.scores = value.into(),
            "paths.labels" => self.paths.labels = value.into(),
            "paths.report" => self.paths.report = value.into(),
            other => {
                return Err(CliError::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Defaults, then the optional file, then the `--set` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "{}:{}: expected key = value",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                cfg.set(key.trim(), value.trim())?;
            }
        }
        for entry in overrides {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                CliError::Config(format!("--set {entry:?}: expected key=value"))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }
}
