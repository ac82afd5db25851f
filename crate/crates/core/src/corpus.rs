//! Corpus manifests and patch-sequence ingestion.
//!
//! A manifest is a line-oriented UTF-8 file, one entry per line:
//!
//! ```text
//! sequence_id,path,frame_index[,label]
//! ```
//!
//! `#`-prefixed lines are comments. Relative paths resolve against the
//! manifest's directory. Labels are optional but must be present for all
//! entries or for none.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::tensor::{read_tensor, PatchSequence, Tensor, PATCH_SIDE};

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub sequence_id: String,
    pub path: PathBuf,
    pub frame_index: u32,
    pub label: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

impl CorpusManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: PathBuf) -> Result<Self> {
        let labeled = entries.iter().filter(|e| e.label.is_some()).count();
        if labeled != 0 && labeled != entries.len() {
            return Err(Error::InvalidArgument {
                reason: "labels must be present for all entries or for none".into(),
            });
        }
        Ok(CorpusManifest { entries, base_dir })
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 && fields.len() != 4 {
                return Err(Error::MalformedManifest {
                    path: path.into(),
                    line: lineno + 1,
                    reason: format!("expected 3 or 4 fields, got {}", fields.len()),
                });
            }
            let frame_index: u32 = fields[2].parse().map_err(|_| Error::MalformedManifest {
                path: path.into(),
                line: lineno + 1,
                reason: format!("bad frame index {:?}", fields[2]),
            })?;
            let label = match fields.get(3) {
                None => None,
                Some(&"0") => Some(0),
                Some(&"1") => Some(1),
                Some(other) => {
                    return Err(Error::MalformedManifest {
                        path: path.into(),
                        line: lineno + 1,
                        reason: format!("label must be 0 or 1, got {other:?}"),
                    })
                }
            };
            entries.push(ManifestEntry {
                sequence_id: fields[0].to_string(),
                path: PathBuf::from(fields[1]),
                frame_index,
                label,
            });
        }
        CorpusManifest::new(entries, base_dir)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.sequence_id);
            out.push(',');
            out.push_str(&e.path.to_string_lossy());
            out.push(',');
            out.push_str(&e.frame_index.to_string());
            if let Some(label) = e.label {
                out.push(',');
                out.push_str(&label.to_string());
            }
            out.push('\n');
        }
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Resolve an entry path against the manifest directory.
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }
}

/// Load every referenced sequence, preserving manifest order. Each file must
/// hold a rank-3 `t x 64 x 64` tensor with the same `t` across the corpus.
pub fn load_corpus(manifest: &CorpusManifest) -> Result<Vec<PatchSequence>> {
    let mut sequences = Vec::with_capacity(manifest.entries.len());
    let mut window: Option<usize> = None;
    for entry in &manifest.entries {
        let path = manifest.resolve(entry);
        let tensor = read_tensor(&path)?;
        let shape = tensor.shape();
        if shape.len() != 3 {
            return Err(Error::MalformedSequence {
                path,
                reason: format!("expected rank 3 (t x {PATCH_SIDE} x {PATCH_SIDE}), got {shape:?}"),
            });
        }
        if shape[1] != PATCH_SIDE || shape[2] != PATCH_SIDE {
            return Err(Error::MalformedSequence {
                path,
                reason: format!("patches must be {PATCH_SIDE}x{PATCH_SIDE}, got {shape:?}"),
            });
        }
        let t = shape[0];
        match window {
            None => window = Some(t),
            Some(expected) if expected != t => {
                return Err(Error::InconsistentWindow {
                    expected,
                    actual: t,
                    sequence_id: entry.sequence_id.clone(),
                });
            }
            _ => {}
        }
        let plane = PATCH_SIDE * PATCH_SIDE;
        let patches = (0..t)
            .map(|i| {
                Tensor::new(
                    vec![PATCH_SIDE, PATCH_SIDE],
                    tensor.data()[i * plane..(i + 1) * plane].to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        sequences.push(PatchSequence::new(
            patches,
            entry.frame_index,
            entry.sequence_id.clone(),
        )?);
    }
    Ok(sequences)
}
