//! MNIST IDX container reader (big-endian header, u8 payload).

use std::fs;
use std::path::Path;

use crate::error::{LabError, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// One raw image, row-major, pixels scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
    pub label: usize,
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(LabError::Truncated {
                path: self.path.to_path_buf(),
                needed: end,
                have: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let observed = self.u32()?;
        if observed != expected {
            return Err(LabError::BadMagic {
                path: self.path.to_path_buf(),
                observed,
                expected,
            });
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::io(path, e))
}

pub fn parse_images(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let mut cur = Cursor { path, bytes, pos: 0 };
    cur.magic(IMAGE_MAGIC)?;
    let count = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let payload = cur.take(count * rows * cols)?;
    let images = payload
        .chunks_exact((rows * cols).max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    Ok((rows, cols, images))
}

pub fn parse_labels(path: &Path, bytes: &[u8]) -> Result<Vec<usize>> {
    let mut cur = Cursor { path, bytes, pos: 0 };
    cur.magic(LABEL_MAGIC)?;
    let count = cur.u32()? as usize;
    Ok(cur.take(count)?.iter().map(|&l| l as usize).collect())
}

pub fn read_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Vec<RawImage>> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (rows, cols, images) = parse_images(ip, &read_file(ip)?)?;
    let labels = parse_labels(lp, &read_file(lp)?)?;
    if images.len() != labels.len() {
        return Err(LabError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(pixels, label)| RawImage {
            rows,
            cols,
            pixels,
            label,
        })
        .collect())
}

/// Serializes images and labels back into IDX byte streams.
pub fn encode_idx(images: &[RawImage]) -> (Vec<u8>, Vec<u8>) {
    let (rows, cols) = images.first().map(|i| (i.rows, i.cols)).unwrap_or((28, 28));
    let mut img = Vec::with_capacity(16 + images.len() * rows * cols);
    for word in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        img.extend_from_slice(&word.to_be_bytes());
    }
    for i in images {
        img.extend(i.pixels.iter().map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    }
    let mut lab = Vec::with_capacity(8 + images.len());
    for word in [LABEL_MAGIC, images.len() as u32] {
        lab.extend_from_slice(&word.to_be_bytes());
    }
    lab.extend(images.iter().map(|i| i.label as u8));
    (img, lab)
}
