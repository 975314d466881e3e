//! MNIST ingestion from IDX files.
//!
//! IDX layout: two zero bytes, a type byte (`0x08` = unsigned byte), a rank
//! byte, then `rank` big-endian `u32` dimensions, then the payload in C order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const PIXELS: usize = 28 * 28;
pub const TRAIN_COUNT: usize = 60_000;
pub const TEST_COUNT: usize = 10_000;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn expected_count(self) -> usize {
        match self {
            Split::Train => TRAIN_COUNT,
            Split::Test => TEST_COUNT,
        }
    }

    fn file_names(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => (TRAIN_IMAGES, TRAIN_LABELS),
            Split::Test => (TEST_IMAGES, TEST_LABELS),
        }
    }
}

/// Images flattened row-major and scaled to [0, 1], one label per image.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub split: Split,
    pub dim: usize,
    pub images: Vec<f64>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.images[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.labels.truncate(n);
            self.images.truncate(n * self.dim);
        }
    }

    pub fn mean_pixel(&self) -> f64 {
        if self.images.is_empty() {
            return 0.0;
        }
        self.images.iter().sum::<f64>() / self.images.len() as f64
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let chunk = bytes.get(offset..offset + 4).ok_or_else(|| Error::Parse {
        offset: bytes.len(),
        reason: format!("truncated header: need 4 bytes at offset {offset}"),
    })?;
    Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
}

fn read_header(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, usize)> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(Error::Parse {
            offset: 0,
            reason: format!("bad magic number {found:#010x}, expected {magic:#010x}"),
        });
    }
    let rank = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(rank);
    for k in 0..rank {
        dims.push(read_u32(bytes, 4 + 4 * k)? as usize);
    }
    Ok((dims, 4 + 4 * rank))
}

fn payload(bytes: &[u8], start: usize, expected: usize) -> Result<&[u8]> {
    let available = bytes.len() - start;
    if available < expected {
        return Err(Error::Parse {
            offset: bytes.len(),
            reason: format!("truncated payload: header declares {expected} bytes, found {available}"),
        });
    }
    if available > expected {
        return Err(Error::Parse {
            offset: start + expected,
            reason: format!("{} trailing bytes after declared payload", available - expected),
        });
    }
    Ok(&bytes[start..])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let (dims, start) = read_header(bytes, IMAGE_MAGIC)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse {
            offset: 8,
            reason: format!("degenerate image size {rows}x{cols}"),
        });
    }
    let expected = count
        .checked_mul(rows * cols)
        .ok_or_else(|| Error::Parse { offset: 4, reason: "declared size overflows".into() })?;
    let data = payload(bytes, start, expected)?;
    Ok(RawImages { count, rows, cols, pixels: data.to_vec() })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (dims, start) = read_header(bytes, LABEL_MAGIC)?;
    let data = payload(bytes, start, dims[0])?;
    if let Some(pos) = data.iter().position(|&l| l > 9) {
        return Err(Error::Parse {
            offset: start + pos,
            reason: format!("label {} out of range 0..=9", data[pos]),
        });
    }
    Ok(data.to_vec())
}

pub fn normalize(raw: &RawImages, labels: Vec<u8>, split: Split) -> Result<Dataset> {
    if raw.count != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} images but {} labels",
            raw.count,
            labels.len()
        )));
    }
    Ok(Dataset {
        split,
        dim: raw.rows * raw.cols,
        images: raw.pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
        labels,
    })
}

/// Loads one split from a directory holding the four standard files.
pub fn load_split(dir: &Path, split: Split) -> Result<Dataset> {
    let (img_name, lbl_name) = split.file_names();
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| {
            Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
        })
    };
    let raw = parse_idx_images(&read(img_name)?)?;
    let labels = parse_idx_labels(&read(lbl_name)?)?;
    if raw.rows * raw.cols != PIXELS {
        return Err(Error::DimensionMismatch { expected: PIXELS, got: raw.rows * raw.cols });
    }
    let ds = normalize(&raw, labels, split)?;
    if ds.len() != split.expected_count() {
        return Err(Error::DimensionMismatch { expected: split.expected_count(), got: ds.len() });
    }
    Ok(ds)
}
