//! The five pipeline commands.
//!
//! Each command validates its paths up front, runs to completion, and is
//! byte-deterministic for a fixed config.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use vad_core::corpus::{load_corpus, CorpusManifest};
use vad_core::dae::{encode_batch, train, DaeModel, TrainConfig};
use vad_core::eval::{auroc, grid_search, read_labels, GridSpec, LabeledScores};
use vad_core::gmm::{fit, EmConfig, FitOutcome, GmmModel, Samples};
use vad_core::rankpool::{dynamic_image_batch, RankPoolConfig};
use vad_core::rng::derive_seed;
use vad_core::scoring::{
    read_scores, score_corpus, write_scores, FusionWeights, ScoringModels,
};
use vad_core::synth::{make_video_corpus, VideoSpec};
use vad_core::tensor::{PatchSequence, Tensor, PATCH_SIDE};

use crate::config::PipelineConfig;
use crate::CliError;

fn require_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("input {} not found", path.display())))
    }
}

/// An output file's parent directory must already exist.
fn require_out_file(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        None => Ok(()),
        Some(parent) if parent.as_os_str().is_empty() => Ok(()),
        Some(parent) if parent.is_dir() => Ok(()),
        Some(parent) => Err(CliError::Io(format!(
            "output directory {} does not exist",
            parent.display()
        ))),
    }
}

/// Create an output directory itself, but never its missing parents.
fn ensure_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        return Ok(());
    }
    fs::create_dir(path).map_err(|e| {
        CliError::Io(format!("cannot create directory {}: {e}", path.display()))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_synth(cfg: &PipelineConfig) -> Result<(), CliError> {
    ensure_dir(&cfg.synth.train_dir)?;
    ensure_dir(&cfg.synth.test_dir)?;
    let train_spec = VideoSpec {
        frames: cfg.synth.train_frames,
        t: cfg.t,
        injections: vec![],
        speed_min: cfg.synth.speed_min,
        speed_max: cfg.synth.speed_max,
        noise_std: cfg.synth.noise_std,
        seed: derive_seed(cfg.seed, "synth.train"),
    };
    let test_spec = VideoSpec {
        frames: cfg.synth.test_frames,
        t: cfg.t,
        injections: cfg.synth.anomalies.clone(),
        speed_min: cfg.synth.speed_min,
        speed_max: cfg.synth.speed_max,
        noise_std: cfg.synth.noise_std,
        seed: derive_seed(cfg.seed, "synth.test"),
    };
    make_video_corpus(&train_spec, &cfg.synth.train_dir)?;
    let out = make_video_corpus(&test_spec, &cfg.synth.test_dir)?;
    println!(
        "synth: {} training frames in {}, {} test frames in {} ({} abnormal)",
        cfg.synth.train_frames,
        cfg.synth.train_dir.display(),
        cfg.synth.test_frames,
        cfg.synth.test_dir.display(),
        out.labels.iter().filter(|&&(_, l)| l == 1).count(),
    );
    Ok(())
}

/// Current patches and affine-normalized dynamic images of a corpus. The
/// returned affine maps raw dynamic-image values onto [0, 1] of the corpus.
fn two_stream_inputs(
    corpus: &[PatchSequence],
    t: usize,
) -> Result<(Vec<Tensor>, Vec<Tensor>, (f64, f64)), CliError> {
    let rp = RankPoolConfig::new(t)?;
    let patches: Vec<Tensor> = corpus.iter().map(|s| s.current_patch().clone()).collect();
    let motions = dynamic_image_batch(corpus, &rp)?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for m in &motions {
        for &v in m.image.data() {
            min = min.min(f64::from(v));
            max = max.max(f64::from(v));
        }
    }
    let (scale, offset) = if max > min {
        (1.0 / (max - min), min)
    } else {
        (1.0, min)
    };
    let normalized: Vec<Tensor> = motions
        .iter()
        .map(|m| {
            Tensor::new(
                m.image.shape().to_vec(),
                m.image
                    .data()
                    .iter()
                    .map(|&v| ((f64::from(v) - offset) * scale) as f32)
                    .collect(),
            )
        })
        .collect::<vad_core::Result<_>>()?;
    Ok((patches, normalized, (scale, offset)))
}

fn loss_log_text(losses: &[f64]) -> String {
    let mut out = String::new();
    for (epoch, loss) in losses.iter().enumerate() {
        out.push_str(&format!("{epoch},{loss}\n"));
    }
    out
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<(), CliError> {
    require_input(&cfg.paths.train_manifest)?;
    for out in [
        &cfg.paths.patch_dae,
        &cfg.paths.motion_dae,
        &cfg.paths.patch_loss_log,
        &cfg.paths.motion_loss_log,
    ] {
        require_out_file(out)?;
    }
    let manifest = CorpusManifest::read_from(&cfg.paths.train_manifest)?;
    let corpus = load_corpus(&manifest)?;
    let (patches, motions, affine) = two_stream_inputs(&corpus, cfg.t)?;

    let train_cfg = |tag: &str| TrainConfig {
        sigma: cfg.dae.sigma,
        beta: cfg.dae.beta,
        learning_rate: cfg.dae.learning_rate,
        lr_decay: cfg.dae.lr_decay,
        batch_size: cfg.dae.batch_size,
        max_epochs: cfg.dae.max_epochs,
        seed: derive_seed(cfg.seed, tag),
    };

    let patch_outcome = train(&patches, &train_cfg("dae.patch"), &cfg.dae.dims)?;
    patch_outcome.model.save(&cfg.paths.patch_dae)?;
    write_text(&cfg.paths.patch_loss_log, &loss_log_text(&patch_outcome.epoch_losses))?;

    let mut motion_outcome = train(&motions, &train_cfg("dae.motion"), &cfg.dae.dims)?;
    motion_outcome.model.set_input_affine(affine.0, affine.1);
    motion_outcome.model.save(&cfg.paths.motion_dae)?;
    write_text(
        &cfg.paths.motion_loss_log,
        &loss_log_text(&motion_outcome.epoch_losses),
    )?;

    println!(
        "train: {} sequences, patch loss {} -> {}, motion loss {} -> {}",
        corpus.len(),
        patch_outcome.epoch_losses.first().copied().unwrap_or(f64::NAN),
        patch_outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
        motion_outcome.epoch_losses.first().copied().unwrap_or(f64::NAN),
        motion_outcome.epoch_losses.last().copied().unwrap_or(f64::NAN),
    );
    Ok(())
}

/// Latent codes of a corpus under one autoencoder, flattened row-major.
fn latent_matrix(model: &DaeModel, inputs: &[Tensor]) -> Result<Vec<f64>, CliError> {
    let mapped: Vec<Tensor> = inputs
        .iter()
        .map(|t| {
            let raw = t.to_f64();
            let mapped = model.map_input(&raw);
            Tensor::new(
                t.shape().to_vec(),
                mapped.into_iter().map(|v| v as f32).collect(),
            )
        })
        .collect::<vad_core::Result<_>>()?;
    let codes = encode_batch(model, &mapped)?;
    Ok(codes.into_iter().flatten().collect())
}

pub fn cmd_fit(cfg: &PipelineConfig) -> Result<(), CliError> {
    require_input(&cfg.paths.train_manifest)?;
    require_input(&cfg.paths.patch_dae)?;
    require_input(&cfg.paths.motion_dae)?;
    for out in [&cfg.paths.patch_gmm, &cfg.paths.motion_gmm, &cfg.paths.em_log] {
        require_out_file(out)?;
    }
    let manifest = CorpusManifest::read_from(&cfg.paths.train_manifest)?;
    let corpus = load_corpus(&manifest)?;
    let patch_dae = DaeModel::load(&cfg.paths.patch_dae)?;
    let motion_dae = DaeModel::load(&cfg.paths.motion_dae)?;

    let rp = RankPoolConfig::new(cfg.t)?;
    let patches: Vec<Tensor> = corpus.iter().map(|s| s.current_patch().clone()).collect();
    let motions: Vec<Tensor> = dynamic_image_batch(&corpus, &rp)?
        .into_iter()
        .map(|d| d.image)
        .collect();

    let em_cfg = |tag: &str| EmConfig {
        k: cfg.gmm.k,
        epsilon: cfg.gmm.epsilon,
        max_iters: cfg.gmm.max_iters,
        cov_reg: cfg.gmm.cov_reg,
        seed: derive_seed(cfg.seed, tag),
    };

    let run = |dae: &DaeModel, inputs: &[Tensor], tag: &str| -> Result<FitOutcome, CliError> {
        let latents = latent_matrix(dae, inputs)?;
        let samples = Samples::new(&latents, inputs.len(), dae.bottleneck_dim())?;
        Ok(fit(&samples, &em_cfg(tag))?)
    };
    let patch_fit = run(&patch_dae, &patches, "gmm.patch")?;
    let motion_fit = run(&motion_dae, &motions, "gmm.motion")?;
    patch_fit.model.save(&cfg.paths.patch_gmm)?;
    motion_fit.model.save(&cfg.paths.motion_gmm)?;

    let mut log = String::new();
    for (stream, outcome) in [("patch", &patch_fit), ("motion", &motion_fit)] {
        for (iteration, ll) in outcome.ll_history.iter().enumerate() {
            log.push_str(&format!("{stream},{iteration},{ll}\n"));
        }
    }
    write_text(&cfg.paths.em_log, &log)?;

    println!(
        "fit: k={} over {} latents, patch L {} -> {}, motion L {} -> {}",
        cfg.gmm.k,
        corpus.len(),
        patch_fit.ll_history.first().copied().unwrap_or(f64::NAN),
        patch_fit.ll_history.last().copied().unwrap_or(f64::NAN),
        motion_fit.ll_history.first().copied().unwrap_or(f64::NAN),
        motion_fit.ll_history.last().copied().unwrap_or(f64::NAN),
    );
    Ok(())
}

pub fn cmd_score(cfg: &PipelineConfig) -> Result<(), CliError> {
    require_input(&cfg.paths.test_manifest)?;
    for model in [
        &cfg.paths.patch_dae,
        &cfg.paths.motion_dae,
        &cfg.paths.patch_gmm,
        &cfg.paths.motion_gmm,
    ] {
        require_input(model)?;
    }
    require_out_file(&cfg.paths.scores)?;

    let manifest = CorpusManifest::read_from(&cfg.paths.test_manifest)?;
    let corpus = load_corpus(&manifest)?;
    let patch_dae = DaeModel::load(&cfg.paths.patch_dae)?;
    let motion_dae = DaeModel::load(&cfg.paths.motion_dae)?;
    let patch_gmm = GmmModel::load(&cfg.paths.patch_gmm)?;
    let motion_gmm = GmmModel::load(&cfg.paths.motion_gmm)?;
    if patch_dae.input_dim() != PATCH_SIDE * PATCH_SIDE {
        return Err(CliError::ModelMismatch(format!(
            "patch autoencoder expects {} inputs, corpus patches hold {}",
            patch_dae.input_dim(),
            PATCH_SIDE * PATCH_SIDE
        )));
    }
    let models = ScoringModels {
        patch_dae: &patch_dae,
        motion_dae: &motion_dae,
        patch_gmm: &patch_gmm,
        motion_gmm: &motion_gmm,
    };
    let weights = FusionWeights::new(
        cfg.fusion.lambda1,
        cfg.fusion.lambda2,
        cfg.fusion.lambda3,
        cfg.fusion.lambda4,
    )?;
    let rp = RankPoolConfig::new(cfg.t)?;
    let scores = score_corpus(&models, &corpus, &rp, &weights)?;
    write_scores(&scores, &cfg.paths.scores)?;
    println!(
        "score: {} frames from {} sequences -> {}",
        scores.len(),
        corpus.len(),
        cfg.paths.scores.display()
    );
    Ok(())
}

pub fn cmd_eval(cfg: &PipelineConfig) -> Result<(), CliError> {
    require_input(&cfg.paths.scores)?;
    require_input(&cfg.paths.labels)?;
    require_out_file(&cfg.paths.report)?;

    let scores = read_scores(&cfg.paths.scores)?;
    let labels: HashMap<u32, u8> = read_labels(&cfg.paths.labels)?.into_iter().collect();

    let mut values = Vec::with_capacity(scores.len());
    let mut truth = Vec::with_capacity(scores.len());
    let mut components = Vec::with_capacity(scores.len());
    for frame in &scores {
        let Some(&label) = labels.get(&frame.frame_index) else {
            return Err(CliError::Config(format!(
                "label file {} is missing scored frame {}",
                cfg.paths.labels.display(),
                frame.frame_index
            )));
        };
        values.push(frame.normalized);
        truth.push(label);
        components.push(frame.components);
    }

    let value = auroc(&LabeledScores::new(values, truth.clone())?)?;
    let mut report = format!("auroc,{:.4}\n", value * 100.0);

    if cfg.eval.grid {
        let grid = GridSpec::uniform(cfg.eval.grid_values.clone())?;
        let (best, best_auroc) = grid_search(&components, &truth, &grid)?;
        report.push_str(&format!("grid_auroc,{:.4}\n", best_auroc * 100.0));
        report.push_str(&format!("lambda1,{}\n", best.lambda1));
        report.push_str(&format!("lambda2,{}\n", best.lambda2));
        report.push_str(&format!("lambda3,{}\n", best.lambda3));
        report.push_str(&format!("lambda4,{}\n", best.lambda4));
    }

    print!("{report}");
    write_text(&cfg.paths.report, &report)?;
    Ok(())
}
