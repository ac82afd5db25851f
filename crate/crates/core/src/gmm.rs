//! Gaussian-mixture density estimation by expectation maximization.
//!
//! The mixture is initialized from a K-Means++ clustering (weights from
//! cluster sizes, means from cluster means, covariances from cluster scatter),
//! then refined by alternating the posterior computation (E-step) and the
//! weighted moment update (M-step) until the total log-likelihood moves by
//! less than `epsilon`.
//!
//! Every density is evaluated in log space through a Cholesky factor of the
//! covariance: the factor yields the log-determinant and the Mahalanobis
//! term with one forward solve, and per-component sums go through
//! log-sum-exp. A `cov_reg * I` ridge is added to each covariance at
//! initialization and after every M-step.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, log_det_from_cholesky, solve_lower_in_place};
use crate::par::{map_batch, map_batch_seq, pairwise_sum};
use crate::rng::tagged_rng;

pub const GMM_MAGIC: &[u8; 4] = b"GMM1";

const LN_2PI: f64 = 1.8378770664093453;
const DEGENERATE_RESPONSIBILITY: f64 = 1e-12;

/// Borrowed view of `n` samples of dimension `d`, row-major.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    data: &'a [f64],
    n: usize,
    d: usize,
}

impl<'a> Samples<'a> {
    pub fn new(data: &'a [f64], n: usize, d: usize) -> Result<Self> {
        if data.len() != n * d || d == 0 {
            return Err(Error::DimensionMismatch {
                context: format!("expected {n} x {d} values, got {}", data.len()),
            });
        }
        Ok(Samples { data, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// A `k`-component full-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    k: usize,
    d: usize,
    phi: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GmmModel {
    pub fn new(k: usize, d: usize, phi: Vec<f64>, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidArgument {
                reason: "k and d must be >= 1".into(),
            });
        }
        if phi.len() != k || mu.len() != k * d || sigma.len() != k * d * d {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "mixture with k={k}, d={d} needs {k} weights, {} means, {} covariances",
                    k * d,
                    k * d * d
                ),
            });
        }
        if phi.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument {
                reason: "mixture weights must be finite and non-negative".into(),
            });
        }
        let total: f64 = phi.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument {
                reason: format!("mixture weights must sum to 1, got {total}"),
            });
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument {
                reason: "mixture parameters must be finite".into(),
            });
        }
        Ok(GmmModel { k, d, phi, mu, sigma })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn mu(&self, j: usize) -> &[f64] {
        &self.mu[j * self.d..(j + 1) * self.d]
    }

    pub fn sigma(&self, j: usize) -> &[f64] {
        &self.sigma[j * self.d * self.d..(j + 1) * self.d * self.d]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(GMM_MAGIC);
        bytes.extend_from_slice(&(self.k as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.d as u32).to_le_bytes());
        for &v in self.phi.iter().chain(&self.mu).chain(&self.sigma) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 4 || &bytes[..4] != GMM_MAGIC {
            return Err(Error::BadMagic {
                path: path.into(),
                expected: "GMM1",
            });
        }
        let need_header = 4 + 8;
        if bytes.len() < need_header {
            return Err(Error::Truncated {
                path: path.into(),
                detail: "missing k/d header".into(),
            });
        }
        let k = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let count = k + k * d + k * d * d;
        if bytes.len() != need_header + count * 8 {
            return Err(Error::Truncated {
                path: path.into(),
                detail: format!(
                    "k={k}, d={d} needs {} payload bytes, found {}",
                    count * 8,
                    bytes.len() - need_header
                ),
            });
        }
        let mut values = Vec::with_capacity(count);
        for chunk in bytes[need_header..].chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        let sigma = values.split_off(k + k * d);
        let mu = values.split_off(k);
        GmmModel::new(k, d, values, mu, sigma)
    }
}

/// Posterior weights, one row per sample, rows summing to one.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    gamma: Vec<f64>,
}

impl Responsibilities {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.k..(i + 1) * self.k]
    }

    /// Build from raw rows; each row must sum to one.
    pub fn from_rows(n: usize, k: usize, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != n * k {
            return Err(Error::DimensionMismatch {
                context: format!("expected {n} x {k} responsibilities, got {}", gamma.len()),
            });
        }
        for i in 0..n {
            let row = &gamma[i * k..(i + 1) * k];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&g| !(0.0..=1.0 + 1e-12).contains(&g)) {
                return Err(Error::InvalidArgument {
                    reason: format!("responsibility row {i} sums to {sum}"),
                });
            }
        }
        Ok(Responsibilities { n, k, gamma })
    }
}

/// EM settings.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub k: usize,
    /// Convergence threshold on the absolute likelihood change.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Ridge added to every covariance diagonal.
    pub cov_reg: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            k: 15,
            epsilon: 1e-6,
            max_iters: 500,
            cov_reg: 1e-6,
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument {
                reason: "k must be >= 1".into(),
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument {
                reason: format!("epsilon must be > 0, got {}", self.epsilon),
            });
        }
        if self.cov_reg < 0.0 {
            return Err(Error::InvalidArgument {
                reason: format!("cov_reg must be >= 0, got {}", self.cov_reg),
            });
        }
        Ok(())
    }
}

/// Per-component state reused across all samples of one pass.
struct PreparedComponent {
    log_phi: f64,
    log_norm: f64,
    chol: Vec<f64>,
    mu: Vec<f64>,
}

fn prepare_components(m: &GmmModel) -> Result<Vec<PreparedComponent>> {
    (0..m.k)
        .map(|j| {
            let chol = cholesky_lower(m.sigma(j), m.d)
                .ok_or(Error::CovarianceNotPd { component: j })?;
            let log_det = log_det_from_cholesky(&chol, m.d);
            Ok(PreparedComponent {
                log_phi: m.phi[j].ln(),
                log_norm: -0.5 * (m.d as f64 * LN_2PI + log_det),
                chol,
                mu: m.mu(j).to_vec(),
            })
        })
        .collect()
}

/// `ln(phi_j) + ln N(z; mu_j, Sigma_j)` for every component.
fn log_joint(comps: &[PreparedComponent], z: &[f64], d: usize) -> Vec<f64> {
    comps
        .iter()
        .map(|c| {
            let mut diff: Vec<f64> = z.iter().zip(&c.mu).map(|(a, b)| a - b).collect();
            solve_lower_in_place(&c.chol, d, &mut diff);
            let maha: f64 = diff.iter().map(|v| v * v).sum();
            c.log_phi + c.log_norm - 0.5 * maha
        })
        .collect()
}

fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

fn row_ranges(n: usize) -> Vec<(usize, usize)> {
    let chunk = (n.div_ceil(64)).max(16).min(n.max(1));
    (0..n)
        .step_by(chunk)
        .map(|s| (s, (s + chunk).min(n)))
        .collect()
}

fn check_dims(m: &GmmModel, z: &Samples) -> Result<()> {
    if m.d != z.d {
        return Err(Error::DimensionMismatch {
            context: format!("model dimension {} vs sample dimension {}", m.d, z.d),
        });
    }
    Ok(())
}

/// Moment statistics of a hard partition: weights from cluster sizes, means
/// from cluster means, covariances from biased cluster scatter plus the ridge.
fn moments_from_partition(
    z: &Samples,
    assignment: &[usize],
    k: usize,
    cov_reg: f64,
) -> Result<GmmModel> {
    let (n, d) = (z.n, z.d);
    let mut counts = vec![0usize; k];
    for &a in assignment {
        counts[a] += 1;
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateComponent {
            component: j,
            threshold: 1.0,
        });
    }
    let mut phi = vec![0.0f64; k];
    let mut mu = vec![0.0f64; k * d];
    for i in 0..n {
        let j = assignment[i];
        for (m, &x) in mu[j * d..(j + 1) * d].iter_mut().zip(z.row(i)) {
            *m += x;
        }
    }
    for j in 0..k {
        phi[j] = counts[j] as f64 / n as f64;
        let inv = 1.0 / counts[j] as f64;
        for m in &mut mu[j * d..(j + 1) * d] {
            *m *= inv;
        }
    }
    let mut sigma = vec![0.0f64; k * d * d];
    let mut diff = vec![0.0f64; d];
    for i in 0..n {
        let j = assignment[i];
        for (t, (&x, &m)) in diff
            .iter_mut()
            .zip(z.row(i).iter().zip(&mu[j * d..(j + 1) * d]))
        {
            *t = x - m;
        }
        let block = &mut sigma[j * d * d..(j + 1) * d * d];
        for r in 0..d {
            for c in 0..=r {
                block[r * d + c] += diff[r] * diff[c];
            }
        }
    }
    for j in 0..k {
        let inv = 1.0 / counts[j] as f64;
        let block = &mut sigma[j * d * d..(j + 1) * d * d];
        for r in 0..d {
            for c in 0..=r {
                let v = block[r * d + c] * inv;
                block[r * d + c] = v;
                block[c * d + r] = v;
            }
            block[r * d + r] += cov_reg;
        }
    }
    GmmModel::new(k, d, phi, mu, sigma)
}

/// K-Means++ seeding, Lloyd refinement, then mixture moments from the hard
/// partition.
pub fn kmeanspp_init(z: &Samples, cfg: &EmConfig) -> Result<GmmModel> {
    cfg.validate()?;
    if z.n < cfg.k {
        return Err(Error::InvalidArgument {
            reason: format!("need at least k={} samples, got {}", cfg.k, z.n),
        });
    }
    let mut rng = tagged_rng(cfg.seed, "gmm.kmeanspp");
    let clustering = crate::kmeans::cluster(z.data, z.n, z.d, cfg.k, &mut rng)?;
    moments_from_partition(z, &clustering.assignment, cfg.k, cfg.cov_reg)
}

fn e_step_impl(m: &GmmModel, z: &Samples, parallel: bool) -> Result<Responsibilities> {
    check_dims(m, z)?;
    let comps = prepare_components(m)?;
    let worker = |&(start, end): &(usize, usize)| -> Vec<f64> {
        let mut out = Vec::with_capacity((end - start) * m.k);
        for i in start..end {
            let mut lj = log_joint(&comps, z.row(i), m.d);
            let lse = logsumexp(&lj);
            for v in &mut lj {
                *v = (*v - lse).exp();
            }
            out.extend_from_slice(&lj);
        }
        out
    };
    let ranges = row_ranges(z.n);
    let rows: Vec<Vec<f64>> = if parallel {
        map_batch(&ranges, worker)
    } else {
        map_batch_seq(&ranges, worker)
    };
    let gamma: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Responsibilities {
        n: z.n,
        k: m.k,
        gamma,
    })
}

/// Posterior responsibilities, computed in log space and row-normalized.
pub fn e_step(m: &GmmModel, z: &Samples) -> Result<Responsibilities> {
    e_step_impl(m, z, true)
}

/// Sequential baseline of [`e_step`].
pub fn e_step_seq(m: &GmmModel, z: &Samples) -> Result<Responsibilities> {
    e_step_impl(m, z, false)
}

/// Weighted moment update of all components.
pub fn m_step(z: &Samples, r: &Responsibilities, cov_reg: f64) -> Result<GmmModel> {
    if r.n != z.n {
        return Err(Error::DimensionMismatch {
            context: format!("{} responsibility rows vs {} samples", r.n, z.n),
        });
    }
    let (n, d, k) = (z.n, z.d, r.k);
    let mut totals = vec![0.0f64; k];
    for i in 0..n {
        for (t, &g) in totals.iter_mut().zip(r.row(i)) {
            *t += g;
        }
    }
    if let Some(j) = totals.iter().position(|&t| t < DEGENERATE_RESPONSIBILITY) {
        return Err(Error::DegenerateComponent {
            component: j,
            threshold: DEGENERATE_RESPONSIBILITY,
        });
    }
    let mut phi = vec![0.0f64; k];
    let mut mu = vec![0.0f64; k * d];
    for i in 0..n {
        let row = z.row(i);
        for (j, &g) in r.row(i).iter().enumerate() {
            for (m, &x) in mu[j * d..(j + 1) * d].iter_mut().zip(row) {
                *m += g * x;
            }
        }
    }
    for j in 0..k {
        phi[j] = totals[j] / n as f64;
        for m in &mut mu[j * d..(j + 1) * d] {
            *m /= totals[j];
        }
    }
    let mut sigma = vec![0.0f64; k * d * d];
    let mut diff = vec![0.0f64; d];
    for i in 0..n {
        let row = z.row(i);
        for (j, &g) in r.row(i).iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for (t, (&x, &m)) in diff
                .iter_mut()
                .zip(row.iter().zip(&mu[j * d..(j + 1) * d]))
            {
                *t = x - m;
            }
            let block = &mut sigma[j * d * d..(j + 1) * d * d];
            for a in 0..d {
                for b in 0..=a {
                    block[a * d + b] += g * diff[a] * diff[b];
                }
            }
        }
    }
    for j in 0..k {
        let inv = 1.0 / totals[j];
        let block = &mut sigma[j * d * d..(j + 1) * d * d];
        for a in 0..d {
            for b in 0..=a {
                let v = block[a * d + b] * inv;
                block[a * d + b] = v;
                block[b * d + a] = v;
            }
            block[a * d + a] += cov_reg;
        }
    }
    GmmModel::new(k, d, phi, mu, sigma)
}

/// `sum_i ln sum_j phi_j N(z_i; mu_j, Sigma_j)`, accumulated pairwise.
pub fn total_log_likelihood(m: &GmmModel, z: &Samples) -> Result<f64> {
    check_dims(m, z)?;
    let comps = prepare_components(m)?;
    let ranges = row_ranges(z.n);
    let rows: Vec<Vec<f64>> = map_batch(&ranges, |&(start, end)| {
        (start..end)
            .map(|i| logsumexp(&log_joint(&comps, z.row(i), m.d)))
            .collect()
    });
    let per_sample: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(pairwise_sum(&per_sample))
}

/// `ln sum_j phi_j N(z; mu_j, Sigma_j)` for one sample.
pub fn sample_log_likelihood(m: &GmmModel, z: &[f64]) -> Result<f64> {
    if z.len() != m.d {
        return Err(Error::DimensionMismatch {
            context: format!("sample dimension {} vs model dimension {}", z.len(), m.d),
        });
    }
    let comps = prepare_components(m)?;
    Ok(logsumexp(&log_joint(&comps, z, m.d)))
}

/// Converged model plus the likelihood after initialization and after every
/// iteration.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: GmmModel,
    pub ll_history: Vec<f64>,
}

/// Run EM from the K-Means++ initialization until the likelihood change
/// drops below `cfg.epsilon` or `cfg.max_iters` is reached.
pub fn fit(z: &Samples, cfg: &EmConfig) -> Result<FitOutcome> {
    let mut model = kmeanspp_init(z, cfg)?;
    let mut prev = total_log_likelihood(&model, z)?;
    let mut ll_history = vec![prev];
    for iteration in 0..cfg.max_iters {
        let wrap = |source: Error| Error::EmIteration {
            iteration,
            source: Box::new(source),
        };
        let gamma = e_step(&model, z).map_err(wrap)?;
        model = m_step(z, &gamma, cfg.cov_reg).map_err(wrap)?;
        let ll = total_log_likelihood(&model, z).map_err(wrap)?;
        ll_history.push(ll);
        let delta = ll - prev;
        prev = ll;
        if delta.abs() < cfg.epsilon {
            break;
        }
    }
    Ok(FitOutcome { model, ll_history })
}
