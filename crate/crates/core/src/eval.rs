//! Frame-level ROC analysis and fusion-weight grid search.
//!
//! The AUROC uses the rank-sum formulation with midrank tie handling, so it
//! equals `P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg)`
//! exactly, in O(n log n).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::par::map_batch;
use crate::scoring::{fuse, normalize_scores, FusionWeights};

/// Parallel score/label lists. Labels are 0 (normal) or 1 (abnormal).
#[derive(Debug, Clone)]
pub struct LabeledScores {
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: format!("{} scores vs {} labels", scores.len(), labels.len()),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidArgument {
                reason: "labels must be 0 or 1".into(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument {
                reason: "scores must be finite".into(),
            });
        }
        Ok(LabeledScores { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (pos, self.labels.len() - pos)
    }
}

/// Area under the ROC curve via midranks.
pub fn auroc(ls: &LabeledScores) -> Result<f64> {
    let (pos, neg) = ls.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let n = ls.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ls.scores[a].partial_cmp(&ls.scores[b]).unwrap());

    // midranks over tie groups
    let mut rank = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && ls.scores[order[j + 1]] == ls.scores[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0; // 1-based midrank
        for &idx in &order[i..=j] {
            rank[idx] = mid;
        }
        i = j + 1;
    }

    let rank_sum_pos: f64 = (0..n).filter(|&i| ls.labels[i] == 1).map(|i| rank[i]).sum();
    let pos_f = pos as f64;
    let neg_f = neg as f64;
    Ok((rank_sum_pos - pos_f * (pos_f + 1.0) / 2.0) / (pos_f * neg_f))
}

/// ROC points from the highest threshold down, starting at (0, 0) and ending
/// at (1, 1); tied scores advance as one group.
pub fn roc_curve(ls: &LabeledScores) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = ls.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let n = ls.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ls.scores[b].partial_cmp(&ls.scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < n {
        let threshold = ls.scores[order[i]];
        while i < n && ls.scores[order[i]] == threshold {
            if ls.labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Candidate values per fusion weight, swept lexicographically.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub lambda4: Vec<f64>,
}

impl GridSpec {
    /// The same candidate list for every weight.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let spec = GridSpec {
            lambda1: values.clone(),
            lambda2: values.clone(),
            lambda3: values.clone(),
            lambda4: values,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for list in [&self.lambda1, &self.lambda2, &self.lambda3, &self.lambda4] {
            if list.is_empty() {
                return Err(Error::InvalidArgument {
                    reason: "every grid axis needs at least one value".into(),
                });
            }
            if list.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidArgument {
                    reason: "grid values must be finite and non-negative".into(),
                });
            }
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::uniform(vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]).expect("default grid is valid")
    }
}

/// Per-frame score components; `None` marks a frame without detections,
/// which is pinned to the scene minimum after fusion.
pub type FrameComponents = Option<[f64; 4]>;

fn fused_frame_scores(components: &[FrameComponents], w: &FusionWeights) -> Result<Vec<f64>> {
    let fused: Vec<Option<f64>> = components
        .iter()
        .map(|c| match c {
            Some([p_oi, psnr_oi, p_di, psnr_di]) => {
                fuse(*p_oi, *psnr_oi, *p_di, *psnr_di, w).map(Some)
            }
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let scene_min = fused
        .iter()
        .flatten()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if scene_min == f64::INFINITY {
        return Err(Error::EmptyInput {
            context: "grid search needs at least one frame with components".into(),
        });
    }
    Ok(fused.into_iter().map(|f| f.unwrap_or(scene_min)).collect())
}

/// Sweep every weight combination, skipping the all-zero point, and return
/// the first maximizer in lexicographic grid order together with its AUROC.
pub fn grid_search(
    components: &[FrameComponents],
    labels: &[u8],
    grid: &GridSpec,
) -> Result<(FusionWeights, f64)> {
    grid.validate()?;
    if components.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{} component tuples vs {} labels",
                components.len(),
                labels.len()
            ),
        });
    }
    let mut candidates = Vec::new();
    for &l1 in &grid.lambda1 {
        for &l2 in &grid.lambda2 {
            for &l3 in &grid.lambda3 {
                for &l4 in &grid.lambda4 {
                    if l1 == 0.0 && l2 == 0.0 && l3 == 0.0 && l4 == 0.0 {
                        continue;
                    }
                    candidates.push(FusionWeights {
                        lambda1: l1,
                        lambda2: l2,
                        lambda3: l3,
                        lambda4: l4,
                    });
                }
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument {
            reason: "grid contains only the all-zero point".into(),
        });
    }

    let results: Vec<Result<f64>> = map_batch(&candidates, |w| {
        let raw = fused_frame_scores(components, w)?;
        let normalized = normalize_scores(&raw)?;
        auroc(&LabeledScores::new(normalized, labels.to_vec())?)
    });

    // deterministic tie-break after the full sweep: first strict maximum
    let mut best: Option<(FusionWeights, f64)> = None;
    for (w, res) in candidates.into_iter().zip(results) {
        let value = res?;
        match &best {
            Some((_, b)) if value <= *b => {}
            _ => best = Some((w, value)),
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Read a labels file: lines `frame_index,label`.
pub fn read_labels(path: &Path) -> Result<Vec<(u32, u8)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (frame, label) = line.split_once(',').ok_or_else(|| Error::InvalidArgument {
            reason: format!("{}:{}: expected frame_index,label", path.display(), lineno + 1),
        })?;
        let frame: u32 = frame.trim().parse().map_err(|_| Error::InvalidArgument {
            reason: format!("{}:{}: bad frame index", path.display(), lineno + 1),
        })?;
        let label: u8 = match label.trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::InvalidArgument {
                    reason: format!(
                        "{}:{}: label must be 0 or 1, got {other:?}",
                        path.display(),
                        lineno + 1
                    ),
                })
            }
        };
        labels.push((frame, label));
    }
    Ok(labels)
}

/// Write a labels file in the same format.
pub fn write_labels(labels: &[(u32, u8)], path: &Path) -> Result<()> {
    let mut out = String::new();
    for (frame, label) in labels {
        out.push_str(&format!("{frame},{label}\n"));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
