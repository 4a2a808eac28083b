//! Data ingestion and probe construction.

pub mod idx;
mod probes;
mod synthetic;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hadamard::FeatureVector;

pub use idx::{encode_idx, parse_images, parse_labels, read_idx, RawImage, IMAGE_MAGIC, LABEL_MAGIC};
pub use probes::{make_calibration_probes, make_sorted_probes, ProbeKind, ProbeSet, CALIBRATION_COUNT, SORTED_COUNT};
pub use synthetic::{synthetic_fallback, SyntheticSpec};
pub use train::{ideal_scores, train_weights, WeightMatrix, DEFAULT_RIDGE};

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector<f64>,
    pub label: usize,
}

impl Sample {
    pub fn new(features: FeatureVector<f64>, label: usize) -> Result<Self> {
        if label >= N_CLASSES {
            return Err(LabError::InvalidArgument(format!("label {label} outside [0, 9]")));
        }
        if features.raw_norm() <= 0.0 {
            return Err(LabError::ZeroNorm);
        }
        Ok(Self { features, label })
    }
}

fn pool(pixels: &[f64], width: usize, block: usize) -> Vec<f64> {
    let out = width / block;
    let area = (block * block) as f64;
    let mut pooled = vec![0.0; out * out];
    for r in 0..width {
        for c in 0..width {
            pooled[(r / block) * out + c / block] += pixels[r * width + c];
        }
    }
    pooled.iter_mut().for_each(|v| *v /= area);
    pooled
}

/// Pools a 28x28 image to 16 (7x7 blocks) or 256 (pad to 32x32, 2x2 blocks)
/// features, row-major, rescaled to unit norm.
pub fn downsample(image: &RawImage, n_features: usize) -> Result<Sample> {
    if image.rows != 28 || image.cols != 28 || image.pixels.len() != 784 {
        return Err(LabError::InvalidArgument(format!(
            "expected a 28x28 image, got {}x{}",
            image.rows, image.cols
        )));
    }
    let pooled = match n_features {
        16 => pool(&image.pixels, 28, 7),
        256 => {
            let mut padded = vec![0.0; 32 * 32];
            for r in 0..28 {
                padded[(r + 2) * 32 + 2..(r + 2) * 32 + 30].copy_from_slice(&image.pixels[r * 28..(r + 1) * 28]);
            }
            pool(&padded, 32, 2)
        }
        other => {
            return Err(LabError::InvalidArgument(format!(
                "n_features must be 16 or 256, got {other}"
            )))
        }
    };
    let raw = FeatureVector::new(pooled)?;
    if raw.raw_norm() <= 0.0 {
        return Err(LabError::EmptyImage);
    }
    Sample::new(raw.to_unit()?, image.label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(f: impl Fn(usize, usize) -> f64) -> RawImage {
        RawImage {
            rows: 28,
            cols: 28,
            pixels: (0..784).map(|p| f(p / 28, p % 28)).collect(),
            label: 3,
        }
    }

    #[test]
    fn constant_image_pools_to_constant_unit_vector() {
        for n in [16, 256] {
            let s = downsample(&image(|_, _| 0.4), n).unwrap();
            let v = s.features.values();
            assert_eq!(v.len(), n);
            assert!((s.features.raw_norm() - 1.0).abs() < 1e-12);
            if n == 16 {
                assert!(v.iter().all(|&x| (x - 0.25).abs() < 1e-12));
            } else {
                // border cells straddle padding
                assert!((v[17] - v[18]).abs() < 1e-12);
                assert_eq!(v[0], v[0]);
            }
        }
    }

    #[test]
    fn hand_pooled_blocks() {
        // Pixel value = block index / 16 inside each 7x7 block.
        let img = image(|r, c| ((r / 7) * 4 + c / 7) as f64 / 16.0);
        let s = downsample(&img, 16).unwrap();
        let raw: Vec<f64> = (0..16).map(|b| b as f64 / 16.0).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (got, want) in s.features.values().iter().zip(raw.iter().map(|x| x / norm)) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn padded_pooling_places_content_centrally() {
        // One lit pixel at (0, 0) lands in padded cell (2, 2) -> pooled cell (1, 1).
        let img = image(|r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 });
        let s = downsample(&img, 256).unwrap();
        let v = s.features.values();
        assert_eq!(v[16 + 1], 1.0);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
    }

    #[test]
    fn rejects_empty_and_bad_sizes() {
        assert!(matches!(downsample(&image(|_, _| 0.0), 16), Err(LabError::EmptyImage)));
        assert!(downsample(&image(|_, _| 1.0), 64).is_err());
    }
}
