use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Sample, N_CLASSES};
use crate::error::{LabError, Result};
use crate::hadamard::{check_power_of_two, FeatureVector};
use crate::rng::{keyed_rng, Stage};

/// Seeded Gaussian class blobs used when no MNIST files are supplied.
///
/// Blobs live in a `latent_dim`-dimensional subspace embedded in the feature
/// space by a fixed orthonormal basis. A latent sample is
/// `background * b + separation * g_c + noise * eta` with `b` shared, `g_c` a
/// per-class unit direction and `eta` isotropic with expected norm 1. The
/// embedded vector gets `ambient_noise` of isotropic feature-space noise and is
/// unit-normalized. Keeping class overlap in a low-dimensional subspace is what
/// spreads linear one-vs-rest scores continuously, as on real digits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_features: usize,
    pub per_class: usize,
    pub latent_dim: usize,
    pub background: f64,
    pub separation: f64,
    pub noise: f64,
    pub ambient_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_features: 256,
            per_class: 120,
            latent_dim: 5,
            background: 0.3,
            separation: 1.0,
            noise: 0.6,
            ambient_noise: 0.0,
        }
    }
}

fn gaussian(n: usize, seed: u64, key: &[u64]) -> Vec<f64> {
    let mut rng = keyed_rng(seed, Stage::Data, key);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn unit_gaussian(n: usize, seed: u64, key: &[u64]) -> Vec<f64> {
    let v = gaussian(n, seed, key);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// `latent_dim` orthonormal columns in feature space (Gram-Schmidt on Gaussians).
fn embedding(spec: &SyntheticSpec, seed: u64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(spec.latent_dim);
    let mut j = 0u64;
    while basis.len() < spec.latent_dim {
        let mut v = gaussian(spec.n_features, seed, &[2 << 32, j]);
        j += 1;
        for e in &basis {
            let d: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Latent class means for `spec` under `seed` (before noise).
pub(crate) fn class_means(spec: &SyntheticSpec, seed: u64) -> Vec<Vec<f64>> {
    let d = spec.latent_dim;
    let background = unit_gaussian(d, seed, &[u64::MAX]);
    (0..N_CLASSES as u64)
        .map(|c| {
            unit_gaussian(d, seed, &[c])
                .iter()
                .zip(&background)
                .map(|(g, b)| spec.separation * g + spec.background * b)
                .collect()
        })
        .collect()
}

/// Samples are emitted class-interleaved: index `i` has label `i % 10`.
pub fn synthetic_fallback(spec: &SyntheticSpec, seed: u64) -> Result<Vec<Sample>> {
    check_power_of_two(spec.n_features)?;
    if spec.per_class == 0 {
        return Err(LabError::InvalidArgument("per_class must be >= 1".into()));
    }
    if spec.latent_dim == 0 || spec.latent_dim > spec.n_features {
        return Err(LabError::InvalidArgument(format!(
            "latent_dim {} must be in [1, {}]",
            spec.latent_dim, spec.n_features
        )));
    }
    let (n, d) = (spec.n_features, spec.latent_dim);
    let means = class_means(spec, seed);
    let basis = embedding(spec, seed);
    let latent_scale = spec.noise / (d as f64).sqrt();
    let ambient_scale = spec.ambient_noise / (n as f64).sqrt();
    (0..spec.per_class * N_CLASSES)
        .map(|i| {
            let label = i % N_CLASSES;
            let mut rng = keyed_rng(seed, Stage::Data, &[1 << 32, i as u64]);
            let mut v = vec![0.0; n];
            for (m, e) in means[label].iter().zip(&basis) {
                let eta: f64 = StandardNormal.sample(&mut rng);
                let coeff = m + latent_scale * eta;
                v.iter_mut().zip(e).for_each(|(x, b)| *x += coeff * b);
            }
            for x in v.iter_mut() {
                let eta: f64 = StandardNormal.sample(&mut rng);
                *x += ambient_scale * eta;
            }
            Sample::new(FeatureVector::nonzero(v)?.to_unit()?, label)
        })
        .collect()
}
