//! Denoising autoencoder: Gaussian input corruption, a fully-connected
//! mirror-symmetric encoder/decoder, the l2-regularized reconstruction loss,
//! analytic backpropagation and Adam training.
//!
//! Hidden layers use a leaky rectifier; the bottleneck and the output layer
//! use the logistic sigmoid, so latent codes and reconstructions live in
//! (0, 1). All arithmetic runs in double precision. Training is deterministic
//! for a fixed seed: initialization, shuffling and corruption each draw from
//! their own tagged stream, and batch gradients are accumulated over fixed
//! sample chunks folded with a pairwise tree, so thread count never changes
//! the result.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::adam::{AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::par::{map_batch, map_batch_seq, pairwise_sum, pairwise_sum_vecs};
use crate::rng::tagged_rng;
use crate::tensor::Tensor;

pub const DAE_MAGIC: &[u8; 4] = b"DAE1";

/// Default hidden-activation slope for negative inputs.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Corruption standard deviation.
    pub sigma: f64,
    /// l2 regularization factor on weights.
    pub beta: f64,
    pub learning_rate: f64,
    /// Multiplicative per-epoch learning-rate factor.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sigma: 0.01,
            beta: 1e-4,
            learning_rate: 0.01,
            lr_decay: 0.95,
            batch_size: 1000,
            max_epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument {
                reason: format!("sigma must be >= 0, got {}", self.sigma),
            });
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidArgument {
                reason: format!("beta must be >= 0, got {}", self.beta),
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument {
                reason: format!("learning_rate must be positive, got {}", self.learning_rate),
            });
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument {
                reason: format!("lr_decay must be in (0, 1], got {}", self.lr_decay),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument {
                reason: "batch_size must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    w_off: usize,
    b_off: usize,
    input: usize,
    output: usize,
}

fn layer_spans(dims: &[usize]) -> Vec<LayerSpan> {
    let mut spans = Vec::with_capacity(dims.len() - 1);
    let mut off = 0;
    for l in 0..dims.len() - 1 {
        let (input, output) = (dims[l], dims[l + 1]);
        spans.push(LayerSpan {
            w_off: off,
            b_off: off + input * output,
            input,
            output,
        });
        off += input * output + output;
    }
    spans
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 3 || dims.len() % 2 == 0 {
        return Err(Error::InvalidShape {
            reason: format!("layer dims must be an odd-length list of >= 3 entries, got {dims:?}"),
        });
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape {
            reason: format!("layer dims must be positive, got {dims:?}"),
        });
    }
    for i in 0..dims.len() / 2 {
        if dims[i] != dims[dims.len() - 1 - i] {
            return Err(Error::InvalidShape {
                reason: format!("encoder/decoder dims must mirror, got {dims:?}"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Act {
    Leaky,
    Sigmoid,
}

/// Dot product with four independent accumulators. The summation order is a
/// fixed function of the length, so results stay reproducible while the
/// dependency chain stays short enough to vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let n4 = a.len() / 4 * 4;
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in a[n4..].iter().zip(&b[n4..]) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Forward-pass output: the bottleneck code and the reconstruction.
#[derive(Debug, Clone)]
pub struct Forward {
    pub latent: Vec<f64>,
    pub reconstruction: Vec<f64>,
}

/// Fully-connected denoising autoencoder with mirror-symmetric layer dims.
#[derive(Debug, Clone)]
pub struct DaeModel {
    layer_dims: Vec<usize>,
    params: Vec<f64>,
    leaky_slope: f64,
    sigma: f64,
    beta: f64,
    input_scale: f64,
    input_offset: f64,
}

impl DaeModel {
    /// Seeded uniform initialization in +-sqrt(6 / (fan_in + fan_out)),
    /// biases at zero.
    pub fn init(dims: &[usize], cfg: &TrainConfig) -> Result<Self> {
        validate_dims(dims)?;
        cfg.validate()?;
        let mut rng = tagged_rng(cfg.seed, "dae.init");
        let mut params = vec![0.0f64; param_count(dims)];
        for span in layer_spans(dims) {
            let bound = (6.0 / (span.input + span.output) as f64).sqrt();
            for w in &mut params[span.w_off..span.w_off + span.input * span.output] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(DaeModel {
            layer_dims: dims.to_vec(),
            params,
            leaky_slope: LEAKY_SLOPE,
            sigma: cfg.sigma,
            beta: cfg.beta,
            input_scale: 1.0,
            input_offset: 0.0,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.layer_dims[self.layer_dims.len() / 2]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight matrix (row-major, output x input) and bias of one layer.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let span = layer_spans(&self.layer_dims)[l];
        (
            &self.params[span.w_off..span.w_off + span.input * span.output],
            &self.params[span.b_off..span.b_off + span.output],
        )
    }

    /// Per-corpus affine applied to raw inputs before the network:
    /// `mapped = (raw - offset) * scale`.
    pub fn set_input_affine(&mut self, scale: f64, offset: f64) {
        self.input_scale = scale;
        self.input_offset = offset;
    }

    pub fn input_affine(&self) -> (f64, f64) {
        (self.input_scale, self.input_offset)
    }

    pub fn map_input(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .map(|&v| (v - self.input_offset) * self.input_scale)
            .collect()
    }

    fn layer_count(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn bottleneck_layer(&self) -> usize {
        self.layer_dims.len() / 2 - 1
    }

    fn activation_of(&self, layer: usize) -> Act {
        if layer == self.bottleneck_layer() || layer == self.layer_count() - 1 {
            Act::Sigmoid
        } else {
            Act::Leaky
        }
    }

    fn apply_act(&self, act: Act, pre: &mut [f64]) {
        match act {
            Act::Sigmoid => {
                for v in pre {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            Act::Leaky => {
                for v in pre {
                    if *v < 0.0 {
                        *v *= self.leaky_slope;
                    }
                }
            }
        }
    }

    /// Derivative of the activation from its output value.
    fn act_derivative(&self, act: Act, value: f64) -> f64 {
        match act {
            Act::Sigmoid => value * (1.0 - value),
            Act::Leaky => {
                if value > 0.0 {
                    1.0
                } else {
                    self.leaky_slope
                }
            }
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "input length {} does not match model input dim {}",
                    x.len(),
                    self.input_dim()
                ),
            });
        }
        Ok(())
    }

    /// All layer activations, input included.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let spans = layer_spans(&self.layer_dims);
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layer_count() + 1);
        acts.push(x.to_vec());
        for (l, span) in spans.iter().enumerate() {
            let prev = &acts[l];
            let w = &self.params[span.w_off..span.w_off + span.input * span.output];
            let b = &self.params[span.b_off..span.b_off + span.output];
            let mut pre = Vec::with_capacity(span.output);
            for o in 0..span.output {
                let row = &w[o * span.input..(o + 1) * span.input];
                pre.push(b[o] + dot(row, prev));
            }
            self.apply_act(self.activation_of(l), &mut pre);
            acts.push(pre);
        }
        acts
    }

    /// Encode and reconstruct a (possibly corrupted) input.
    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        self.check_input(x)?;
        let mut acts = self.forward_trace(x);
        let latent = acts[self.bottleneck_layer() + 1].clone();
        let reconstruction = acts.pop().expect("trace is never empty");
        Ok(Forward {
            latent,
            reconstruction,
        })
    }

    /// Bottleneck code of an uncorrupted input; inference never corrupts.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.forward_trace(x);
        Ok(acts[self.bottleneck_layer() + 1].clone())
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        layer_spans(&self.layer_dims)
            .iter()
            .map(|span| {
                self.params[span.w_off..span.w_off + span.input * span.output]
                    .iter()
                    .map(|w| w * w)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Mean squared reconstruction norm plus the l2 penalty:
    /// `(1/n) sum ||x_i - xhat_i||^2 + beta * ||W||^2`.
    pub fn loss(&self, inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<f64> {
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "loss needs equal non-empty batches, got {} and {}",
                    inputs.len(),
                    outputs.len()
                ),
            });
        }
        let per_sample: Vec<f64> = inputs
            .iter()
            .zip(outputs)
            .map(|(x, xh)| {
                x.iter()
                    .zip(xh)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .collect();
        Ok(pairwise_sum(&per_sample) / inputs.len() as f64 + self.beta * self.weight_sq_norm())
    }

    /// Backpropagate one reconstruction into `grad`, returning the squared
    /// reconstruction error. `grad` must span all parameters; the caller
    /// applies the 1/n scale and the regularization term.
    fn accumulate_sample_grad(&self, x: &[f64], x_tilde: &[f64], grad: &mut [f64]) -> f64 {
        let spans = layer_spans(&self.layer_dims);
        let acts = self.forward_trace(x_tilde);
        let recon = acts.last().expect("trace is never empty");
        let recon_loss: f64 = x
            .iter()
            .zip(recon)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();

        // delta holds dLoss/dPre of the current layer
        let last = self.layer_count() - 1;
        let mut delta: Vec<f64> = recon
            .iter()
            .zip(x)
            .map(|(&xh, &xi)| 2.0 * (xh - xi) * self.act_derivative(self.activation_of(last), xh))
            .collect();

        for l in (0..self.layer_count()).rev() {
            let span = spans[l];
            let prev = &acts[l];
            for o in 0..span.output {
                let d = delta[o];
                let row = &mut grad[span.w_off + o * span.input..span.w_off + (o + 1) * span.input];
                for (g, &p) in row.iter_mut().zip(prev) {
                    *g += d * p;
                }
                grad[span.b_off + o] += d;
            }
            if l > 0 {
                let w = &self.params[span.w_off..span.w_off + span.input * span.output];
                let mut next_delta = vec![0.0f64; span.input];
                for o in 0..span.output {
                    let d = delta[o];
                    let row = &w[o * span.input..(o + 1) * span.input];
                    for (nd, &wi) in next_delta.iter_mut().zip(row) {
                        *nd += wi * d;
                    }
                }
                let act = self.activation_of(l - 1);
                for (nd, &a) in next_delta.iter_mut().zip(prev) {
                    *nd *= self.act_derivative(act, a);
                }
                delta = next_delta;
            }
        }
        recon_loss
    }

    /// Full gradient of the single-pair objective
    /// `||x - f(x_tilde)||^2 + beta * ||W||^2`.
    pub fn backward(&self, x: &[f64], x_tilde: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        self.check_input(x_tilde)?;
        let (_, grad) = self.batch_loss_grad(&[x.to_vec()], &[x_tilde.to_vec()]);
        Ok(grad)
    }

    /// Loss and averaged gradient over a batch, including regularization.
    ///
    /// Samples are split into fixed chunks (at most 16, at least 4 samples
    /// each); chunks are mapped in parallel and folded pairwise in index
    /// order, keeping the result independent of thread scheduling.
    pub(crate) fn batch_loss_grad(
        &self,
        xs: &[Vec<f64>],
        x_tildes: &[Vec<f64>],
    ) -> (f64, Vec<f64>) {
        let n = xs.len();
        debug_assert_eq!(n, x_tildes.len());
        let chunk = (n.div_ceil(16)).max(4).min(n.max(1));
        let ranges: Vec<(usize, usize)> = (0..n)
            .step_by(chunk)
            .map(|s| (s, (s + chunk).min(n)))
            .collect();
        let partials: Vec<(f64, Vec<f64>)> = map_batch(&ranges, |&(start, end)| {
            let mut grad = vec![0.0f64; self.params.len()];
            let mut loss_sum = 0.0;
            for i in start..end {
                loss_sum += self.accumulate_sample_grad(&xs[i], &x_tildes[i], &mut grad);
            }
            (loss_sum, grad)
        });
        let losses: Vec<f64> = partials.iter().map(|(l, _)| *l).collect();
        let mut grad = pairwise_sum_vecs(partials.into_iter().map(|(_, g)| g).collect());
        let inv_n = 1.0 / n as f64;
        for g in &mut grad {
            *g *= inv_n;
        }
        if self.beta > 0.0 {
            for span in layer_spans(&self.layer_dims) {
                for i in span.w_off..span.w_off + span.input * span.output {
                    grad[i] += 2.0 * self.beta * self.params[i];
                }
            }
        }
        let loss = pairwise_sum(&losses) * inv_n + self.beta * self.weight_sq_norm();
        (loss, grad)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(DAE_MAGIC);
        bytes.extend_from_slice(&(self.layer_count() as u32).to_le_bytes());
        for (l, span) in layer_spans(&self.layer_dims).iter().enumerate() {
            bytes.extend_from_slice(&(span.input as u32).to_le_bytes());
            bytes.extend_from_slice(&(span.output as u32).to_le_bytes());
            let (w, b) = self.layer(l);
            for &v in w {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            for &v in b {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes.extend_from_slice(&self.input_scale.to_le_bytes());
        bytes.extend_from_slice(&self.input_offset.to_le_bytes());
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut cursor = Reader::new(&bytes, path);
        let magic = cursor.take(4)?;
        if magic != DAE_MAGIC {
            return Err(Error::BadMagic {
                path: path.into(),
                expected: "DAE1",
            });
        }
        let layer_count = cursor.u32()? as usize;
        let mut dims: Vec<usize> = Vec::with_capacity(layer_count + 1);
        let mut params = Vec::new();
        for l in 0..layer_count {
            let input = cursor.u32()? as usize;
            let output = cursor.u32()? as usize;
            if l == 0 {
                dims.push(input);
            } else if *dims.last().unwrap() != input {
                return Err(Error::InvalidShape {
                    reason: format!(
                        "{}: layer {l} input dim {input} does not chain",
                        path.display()
                    ),
                });
            }
            dims.push(output);
            for _ in 0..input * output + output {
                params.push(cursor.f64()?);
            }
        }
        let input_scale = cursor.f64()?;
        let input_offset = cursor.f64()?;
        validate_dims(&dims)?;
        Ok(DaeModel {
            layer_dims: dims,
            params,
            leaky_slope: LEAKY_SLOPE,
            sigma: TrainConfig::default().sigma,
            beta: TrainConfig::default().beta,
            input_scale,
            input_offset,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Reader { bytes, pos: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                path: self.path.into(),
                detail: format!("needed {n} bytes at offset {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Add seeded isotropic Gaussian noise: `x + sigma * g`.
pub fn corrupt(x: &Tensor, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidArgument {
            reason: format!("sigma must be >= 0, got {sigma}"),
        });
    }
    let data: Vec<f32> = x
        .data()
        .iter()
        .map(|&v| {
            let g: f64 = rng.sample(StandardNormal);
            (f64::from(v) + sigma * g) as f32
        })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

fn corrupt_vec(x: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let g: f64 = rng.sample(StandardNormal);
            v + sigma * g
        })
        .collect()
}

/// Trained model plus the per-epoch loss history.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: DaeModel,
    pub epoch_losses: Vec<f64>,
}

/// Train on a corpus of equally shaped tensors. Fully deterministic for a
/// fixed `cfg.seed`.
pub fn train(corpus: &[Tensor], cfg: &TrainConfig, dims: &[usize]) -> Result<TrainOutcome> {
    cfg.validate()?;
    validate_dims(dims)?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput {
            context: "training corpus".into(),
        });
    }
    let input_dim = dims[0];
    if corpus.iter().any(|t| t.len() != input_dim) {
        return Err(Error::DimensionMismatch {
            context: format!("corpus tensors must flatten to the input dim {input_dim}"),
        });
    }
    let xs: Vec<Vec<f64>> = corpus.iter().map(Tensor::to_f64).collect();
    let mut model = DaeModel::init(dims, cfg)?;
    let mut shuffle_rng = tagged_rng(cfg.seed, "dae.shuffle");
    let mut corrupt_rng = tagged_rng(cfg.seed, "dae.corrupt");
    let mut adam = AdamState::new(model.params.len(), AdamConfig::default());
    let mut epoch_losses = Vec::with_capacity(cfg.max_epochs);

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.learning_rate * cfg.lr_decay.powi(epoch as i32);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.shuffle(&mut shuffle_rng);
        let mut batch_losses = Vec::new();
        for batch in order.chunks(cfg.batch_size) {
            let batch_x: Vec<Vec<f64>> = batch.iter().map(|&i| xs[i].clone()).collect();
            let batch_xt: Vec<Vec<f64>> = batch_x
                .iter()
                .map(|x| corrupt_vec(x, cfg.sigma, &mut corrupt_rng))
                .collect();
            let (loss, grad) = model.batch_loss_grad(&batch_x, &batch_xt);
            if !loss.is_finite() {
                return Err(Error::NanLoss { epoch });
            }
            adam.update(&mut model.params, &grad, lr);
            batch_losses.push(loss);
        }
        epoch_losses.push(pairwise_sum(&batch_losses) / batch_losses.len() as f64);
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}

/// Encode a batch of tensors; parallel under the `parallel` feature.
pub fn encode_batch(model: &DaeModel, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    map_batch(inputs, |t| model.encode(&t.to_f64()))
        .into_iter()
        .collect()
}

/// Sequential baseline of [`encode_batch`].
pub fn encode_batch_seq(model: &DaeModel, inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    map_batch_seq(inputs, |t| model.encode(&t.to_f64()))
        .into_iter()
        .collect()
}
