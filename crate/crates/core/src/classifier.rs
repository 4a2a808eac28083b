//! Noisy quantum linear layer: ten Hadamard tests per sample followed by argmax,
//! plus the shot-noise resilience predicate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ideal_scores, Sample, WeightMatrix};
use crate::error::{LabError, Result};
use crate::noise::{full_channel_keyed, NoiseConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub predicted: usize,
    pub ideal_predicted: usize,
    pub scores: Vec<f64>,
    pub ideal_scores: Vec<f64>,
    /// Gap between the top two ideal scores.
    pub margin_ideal: f64,
    pub correct: bool,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Difference between the two largest entries.
pub fn top_two_gap(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    match sorted.as_slice() {
        [a, b, ..] => a - b,
        _ => 0.0,
    }
}

/// Scores every class row through the noise channel. `sample_id` keys the
/// per-(sample, class) random streams.
pub fn classify(sample: &Sample, sample_id: u64, w: &WeightMatrix, depth: f64, cfg: &NoiseConfig) -> Result<ClassificationResult> {
    cfg.validate()?;
    if sample.features.len() != w.n_features() {
        return Err(LabError::LengthMismatch {
            left: sample.features.len(),
            right: w.n_features(),
        });
    }
    let ideal = ideal_scores(sample, w)?;
    let scores = ideal
        .iter()
        .enumerate()
        .map(|(class, &z)| Ok(full_channel_keyed(z, depth, &[sample_id, class as u64], cfg)?.z_measured))
        .collect::<Result<Vec<f64>>>()?;
    let predicted = argmax(&scores);
    Ok(ClassificationResult {
        predicted,
        ideal_predicted: argmax(&ideal),
        margin_ideal: top_two_gap(&ideal),
        correct: predicted == sample.label,
        scores,
        ideal_scores: ideal,
    })
}

pub fn classify_all(test: &[Sample], w: &WeightMatrix, depth: f64, cfg: &NoiseConfig) -> Result<Vec<ClassificationResult>> {
    test.par_iter()
        .enumerate()
        .map(|(i, s)| classify(s, i as u64, w, depth, cfg))
        .collect()
}

pub fn evaluate_accuracy(test: &[Sample], w: &WeightMatrix, depth: f64, cfg: &NoiseConfig) -> Result<f64> {
    if test.is_empty() {
        return Err(LabError::EmptyTestSet);
    }
    let results = classify_all(test, w, depth, cfg)?;
    Ok(results.iter().filter(|r| r.correct).count() as f64 / test.len() as f64)
}

/// Accuracy of the noiseless argmax.
pub fn ideal_accuracy(test: &[Sample], w: &WeightMatrix) -> Result<f64> {
    if test.is_empty() {
        return Err(LabError::EmptyTestSet);
    }
    let hits = test
        .iter()
        .map(|s| Ok(argmax(&ideal_scores(s, w)?) == s.label))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / test.len() as f64)
}

/// Shrunk margin must clear the shot-noise floor `1/sqrt(K)`.
pub fn is_resilient(margin_ideal: f64, cfg: &NoiseConfig) -> bool {
    signal_clears_floor(margin_ideal * cfg.shrink_factor(), cfg.shots)
}

fn signal_clears_floor(signal: f64, shots: u64) -> bool {
    signal > 1.0 / (shots as f64).sqrt()
}

/// Smallest `K` with `signal > 1/sqrt(K)`.
pub fn min_shots_for_signal(signal: f64) -> Result<u64> {
    if !(signal > 0.0) {
        return Err(LabError::ZeroMargin);
    }
    let mut k = ((1.0 / (signal * signal)).floor() as u64).saturating_add(1).max(1);
    // settle floating-point edge cases against the predicate itself
    while k > 1 && signal_clears_floor(signal, k - 1) {
        k -= 1;
    }
    while !signal_clears_floor(signal, k) {
        k += 1;
    }
    Ok(k)
}

pub fn min_shots(margin_ideal: f64, cfg: &NoiseConfig) -> Result<u64> {
    if !(margin_ideal > 0.0) {
        return Err(LabError::ZeroMargin);
    }
    let shrink = cfg.shrink_factor();
    if !(shrink > 0.0) {
        return Err(LabError::ZeroShrink);
    }
    min_shots_for_signal(margin_ideal * shrink)
}
