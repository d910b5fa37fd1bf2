//! MNIST IDX container parsing: big-endian headers, byte payloads.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const N_CLASSES: usize = 10;

/// A parsed IDX image file: `count` grayscale images of `rows x cols` bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    count: usize,
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl ImageSet {
    pub fn new(count: usize, rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Idx("rows and cols must be positive".into()));
        }
        let expected = count
            .checked_mul(rows)
            .and_then(|n| n.checked_mul(cols))
            .ok_or_else(|| Error::Idx("dimension overflow".into()))?;
        if pixels.len() != expected {
            return Err(Error::Idx(format!(
                "payload is {} bytes, header declares {expected}",
                pixels.len()
            )));
        }
        Ok(ImageSet { count, rows, cols, pixels })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Pixel dimension of one image.
    pub fn image_len(&self) -> usize {
        self.rows * self.cols
    }

    /// Raw bytes of image `i`.
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.image_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// A parsed IDX label file; every label is checked to be below 10.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<u8>,
}

impl LabelSet {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= N_CLASSES) {
            return Err(Error::Idx(format!("label {bad} outside 0..{}", N_CLASSES - 1)));
        }
        Ok(LabelSet { labels })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if end > bytes.len() {
        return Err(Error::Idx(format!("truncated header at byte {offset}")));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

/// Parses an IDX image file (magic 0x00000803).
pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Idx(format!("image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}")));
    }
    let count = read_u32_be(bytes, 4)? as usize;
    let rows = read_u32_be(bytes, 8)? as usize;
    let cols = read_u32_be(bytes, 12)? as usize;
    let payload = &bytes[16..];
    let expected = count
        .checked_mul(rows)
        .and_then(|n| n.checked_mul(cols))
        .ok_or_else(|| Error::Idx("dimension overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::Idx(format!(
            "payload is {} bytes, header declares {expected}",
            payload.len()
        )));
    }
    ImageSet::new(count, rows, cols, payload.to_vec())
}

/// Parses an IDX label file (magic 0x00000801).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelSet> {
    let magic = read_u32_be(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Idx(format!("label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}")));
    }
    let count = read_u32_be(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() != count {
        return Err(Error::Idx(format!("payload is {} bytes, header declares {count}", payload.len())));
    }
    LabelSet::new(payload.to_vec())
}

/// Serializes back to IDX bytes; inverse of [`parse_idx_images`].
pub fn write_idx_images(set: &ImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.count as u32).to_be_bytes());
    out.extend_from_slice(&(set.rows as u32).to_be_bytes());
    out.extend_from_slice(&(set.cols as u32).to_be_bytes());
    out.extend_from_slice(&set.pixels);
    out
}

/// Serializes back to IDX bytes; inverse of [`parse_idx_labels`].
pub fn write_idx_labels(set: &LabelSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + set.labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.labels.len() as u32).to_be_bytes());
    out.extend_from_slice(&set.labels);
    out
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<ImageSet> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<LabelSet> {
    parse_idx_labels(&std::fs::read(path)?)
}

/// Scales raw pixels to `[0,1]` by dividing by 255.
pub fn normalize_pixels(raw: &[u8], expected_len: usize) -> Result<Vec<f64>> {
    if raw.len() != expected_len {
        return Err(Error::Shape(format!(
            "image has {} pixels, expected {expected_len}",
            raw.len()
        )));
    }
    Ok(raw.iter().map(|&b| f64::from(b) / 255.0).collect())
}
