//! Rank-preservation statistics.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

fn check_lengths(x: usize, y: usize) -> Result<()> {
    if x != y {
        return Err(LabError::LengthMismatch { left: x, right: y });
    }
    if x < 2 {
        return Err(LabError::InvalidArgument(format!("need at least 2 points, got {x}")));
    }
    Ok(())
}

/// 1-based ranks; ties share the average of the positions they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN in rank input"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = T::from_usize(i + j + 2).unwrap() / T::lit(2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_lengths(x.len(), y.len())?;
    let n = T::from_usize(x.len()).unwrap();
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy = sxy + da * db;
        sxx = sxx + da * da;
        syy = syy + db * db;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return Err(LabError::Undefined("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

/// Pearson correlation of average-rank vectors.
pub fn spearman<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    check_lengths(x.len(), y.len())?;
    pearson(&average_ranks(x), &average_ranks(y)).map_err(|_| LabError::Undefined("zero rank variance"))
}

/// Fraction of nonzero-ideal entries whose measured value has the same sign.
/// A measured value of exactly zero counts as a mismatch.
pub fn sign_fidelity<T: Scalar>(ideal: &[T], measured: &[T]) -> Result<T> {
    if ideal.len() != measured.len() {
        return Err(LabError::LengthMismatch {
            left: ideal.len(),
            right: measured.len(),
        });
    }
    let (mut hits, mut total) = (0usize, 0usize);
    for (&i, &m) in ideal.iter().zip(measured) {
        if i == T::zero() {
            continue;
        }
        total += 1;
        if m != T::zero() && (i > T::zero()) == (m > T::zero()) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(LabError::Undefined("all ideal values are zero"));
    }
    Ok(T::from_usize(hits).unwrap() / T::from_usize(total).unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedTrend<T> {
    pub binned_r2: T,
    pub slope: T,
    /// `(mean ideal, mean measured)` per bin, ideal ascending.
    pub bin_means: Vec<(T, T)>,
    /// Set when the bin means have zero variance and R^2 was reported as 0.
    pub zero_variance: bool,
}

pub const MIN_BINS: usize = 3;

/// Sorts by ideal, averages consecutive groups of `bin_size` (trailing partial
/// bin dropped) and fits a line through `(bin index, mean measured)`.
pub fn binned_trend<T: Scalar>(ideal: &[T], measured: &[T], bin_size: usize) -> Result<BinnedTrend<T>> {
    if ideal.len() != measured.len() {
        return Err(LabError::LengthMismatch {
            left: ideal.len(),
            right: measured.len(),
        });
    }
    if bin_size == 0 {
        return Err(LabError::InvalidArgument("bin_size must be positive".into()));
    }
    let bins = ideal.len() / bin_size;
    if bins < MIN_BINS {
        return Err(LabError::TooFewBins {
            needed: MIN_BINS,
            have: bins,
        });
    }
    let mut order: Vec<usize> = (0..ideal.len()).collect();
    order.sort_by(|&a, &b| ideal[a].partial_cmp(&ideal[b]).expect("NaN in ideal"));
    let size = T::from_usize(bin_size).unwrap();
    let bin_means: Vec<(T, T)> = order
        .chunks_exact(bin_size)
        .map(|chunk| {
            let mi = chunk.iter().map(|&k| ideal[k]).sum::<T>() / size;
            let mm = chunk.iter().map(|&k| measured[k]).sum::<T>() / size;
            (mi, mm)
        })
        .collect();

    let xs: Vec<T> = (0..bins).map(|b| T::from_usize(b).unwrap()).collect();
    let ys: Vec<T> = bin_means.iter().map(|&(_, m)| m).collect();
    let n = T::from_usize(bins).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let tiny = T::epsilon() * (T::one() + my.abs() * my.abs()) * n;
    if syy <= tiny {
        return Ok(BinnedTrend {
            binned_r2: T::zero(),
            slope: T::zero(),
            bin_means,
            zero_variance: true,
        });
    }
    let r2 = (sxy * sxy / (sxx * syy)).min(T::one());
    Ok(BinnedTrend {
        binned_r2: r2,
        slope,
        bin_means,
        zero_variance: false,
    })
}

/// Per-run summary of how well measured expectations track the ideal ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct RankReport<T> {
    pub spearman_rho: T,
    pub pearson_r: T,
    pub sign_fidelity: T,
    pub binned_r2: T,
    pub n_probes: usize,
    /// `(ideal_z, measured_z)` in probe order.
    pub residuals: Vec<(T, T)>,
    /// Statistics that were undefined (zero variance, too few bins) and reported as 0.
    pub undefined: Vec<String>,
}

pub const DEFAULT_BIN_SIZE: usize = 10;

impl<T: Scalar> RankReport<T> {
    pub fn compute(ideal: &[T], measured: &[T]) -> Result<Self> {
        check_lengths(ideal.len(), measured.len())?;
        let mut undefined = Vec::new();
        let mut or_zero = |name: &str, r: Result<T>| -> Result<T> {
            match r {
                Ok(v) => Ok(v),
                Err(LabError::Undefined(_)) | Err(LabError::TooFewBins { .. }) => {
                    undefined.push(name.to_string());
                    Ok(T::zero())
                }
                Err(e) => Err(e),
            }
        };
        let spearman_rho = or_zero("spearman_rho", spearman(ideal, measured))?;
        let pearson_r = or_zero("pearson_r", pearson(ideal, measured))?;
        let sign_fidelity = or_zero("sign_fidelity", sign_fidelity(ideal, measured))?;
        let binned_r2 = or_zero(
            "binned_r2",
            binned_trend(ideal, measured, DEFAULT_BIN_SIZE).map(|b| b.binned_r2),
        )?;
        Ok(Self {
            spearman_rho,
            pearson_r,
            sign_fidelity,
            binned_r2,
            n_probes: ideal.len(),
            residuals: ideal.iter().copied().zip(measured.iter().copied()).collect(),
            undefined,
        })
    }
}
