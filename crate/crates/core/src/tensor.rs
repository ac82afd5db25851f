//! Dense tensors and their on-disk format.
//!
//! A [`Tensor`] is a row-major array of `f32` with an explicit shape; it is
//! the value carrier between every stage of the pipeline. Tensors persist in
//! the `GDT1` format: the magic bytes `GDT1`, one byte of rank, the dims as
//! little-endian `u32`, then the payload as little-endian `f32`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"GDT1";

/// Side length of the square patches the pipeline consumes.
pub const PATCH_SIDE: usize = 64;

/// Dense multi-dimensional array of 32-bit floats, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Build a tensor, checking that the shape is positive, consistent with
    /// the payload length, and that every value is finite.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape {
                reason: format!("dims must be positive, got {shape:?}"),
            });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidShape {
                reason: format!(
                    "shape {shape:?} implies {expected} values, got {}",
                    data.len()
                ),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Payload widened to `f64`, the precision used by all internal math.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }
}

/// Read a `GDT1` file. Bad magic, truncation, a shape/payload mismatch and a
/// non-finite payload value are reported as distinct errors.
pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 || &bytes[..4] != TENSOR_MAGIC {
        if bytes.len() < 4 {
            return Err(Error::Truncated {
                path: path.into(),
                detail: format!("file holds {} bytes, magic needs 4", bytes.len()),
            });
        }
        return Err(Error::BadMagic {
            path: path.into(),
            expected: "GDT1",
        });
    }
    let Some(&rank) = bytes.get(4) else {
        return Err(Error::Truncated {
            path: path.into(),
            detail: "missing rank byte".into(),
        });
    };
    let rank = rank as usize;
    let dims_end = 5 + rank * 4;
    if bytes.len() < dims_end {
        return Err(Error::Truncated {
            path: path.into(),
            detail: format!("rank {rank} needs {} header bytes", dims_end),
        });
    }
    let mut shape = Vec::with_capacity(rank);
    for i in 0..rank {
        let off = 5 + i * 4;
        let dim = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        shape.push(dim as usize);
    }
    if shape.is_empty() || shape.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape {
            reason: format!("{}: dims must be positive, got {shape:?}", path.display()),
        });
    }
    let declared: usize = shape.iter().product();
    let payload = &bytes[dims_end..];
    if payload.len() != declared * 4 {
        if payload.len() % 4 != 0 {
            return Err(Error::Truncated {
                path: path.into(),
                detail: format!("payload of {} bytes is not a whole number of floats", payload.len()),
            });
        }
        return Err(Error::PayloadMismatch {
            path: path.into(),
            shape,
            declared,
            actual: payload.len() / 4,
        });
    }
    let mut data = Vec::with_capacity(declared);
    for chunk in payload.chunks_exact(4) {
        data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    Tensor::new(shape, data)
}

/// Write a tensor in the `GDT1` format, byte-exactly.
pub fn write_tensor(tensor: &Tensor, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(5 + tensor.shape.len() * 4 + tensor.data.len() * 4);
    bytes.extend_from_slice(TENSOR_MAGIC);
    bytes.push(tensor.shape.len() as u8);
    for &dim in &tensor.shape {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &v in &tensor.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Bilinear resampling with corner-aligned sampling. An output axis of length
/// one samples the center of the input axis.
pub fn resize_bilinear(img: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    if img.shape().len() != 2 {
        return Err(Error::InvalidShape {
            reason: format!("resize_bilinear needs a 2-D tensor, got {:?}", img.shape()),
        });
    }
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument {
            reason: "output dims must be >= 1".into(),
        });
    }
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let src = img.data();
    let coord = |i: usize, out_n: usize, in_n: usize| -> f64 {
        if out_n == 1 {
            (in_n - 1) as f64 / 2.0
        } else {
            i as f64 * (in_n - 1) as f64 / (out_n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let y = coord(r, out_h, h);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = y - y0 as f64;
        for c in 0..out_w {
            let x = coord(c, out_w, w);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = x - x0 as f64;
            let v00 = f64::from(src[y0 * w + x0]);
            let v01 = f64::from(src[y0 * w + x1]);
            let v10 = f64::from(src[y1 * w + x0]);
            let v11 = f64::from(src[y1 * w + x1]);
            let top = v00 + (v01 - v00) * fx;
            let bot = v10 + (v11 - v10) * fx;
            out.push((top + (bot - top) * fy) as f32);
        }
    }
    Tensor::new(vec![out_h, out_w], out)
}

/// Ordered window of `t` patches for one tracked bounding box. `frame_index`
/// is the frame of the final (current) patch.
#[derive(Debug, Clone)]
pub struct PatchSequence {
    pub patches: Vec<Tensor>,
    pub frame_index: u32,
    pub sequence_id: String,
}

impl PatchSequence {
    pub fn new(patches: Vec<Tensor>, frame_index: u32, sequence_id: String) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::EmptyInput {
                context: format!("sequence {sequence_id} has no patches"),
            });
        }
        let shape = patches[0].shape().to_vec();
        if patches.iter().any(|p| p.shape() != shape) {
            return Err(Error::InvalidShape {
                reason: format!("sequence {sequence_id} mixes patch shapes"),
            });
        }
        Ok(PatchSequence {
            patches,
            frame_index,
            sequence_id,
        })
    }

    pub fn window_len(&self) -> usize {
        self.patches.len()
    }

    /// The current patch `x^t`, i.e. the last of the window.
    pub fn current_patch(&self) -> &Tensor {
        self.patches.last().expect("non-empty by construction")
    }
}
