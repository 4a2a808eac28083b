//! Recovering gate and readout noise from a measured probe trace.
//!
//! Both shrinkage modes collapse to a single multiplicative slope, so only the
//! product `s(lambda, eps)` is identifiable. The fitter reports that product
//! and the empirical slope as its primary outputs; `(lambda_hat, eps_hat)` is
//! the lowest-lambda decomposition found by the search, or the one with
//! epsilon pinned when a readout calibration is supplied.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::noise::{shrink_factor, ShrinkageMode, REPORTED_KAPPA};

pub const LAMBDA_GRID_STEP: f64 = 0.01;
pub const EPSILON_GRID_STEP: f64 = 0.005;
pub const PARAM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub lambda_hat: f64,
    pub epsilon_hat: f64,
    /// Identifiable shrink factor `s(lambda_hat, epsilon_hat)`.
    pub shrink_product: f64,
    pub sse: f64,
    pub mode: ShrinkageMode,
    /// Least-squares slope of measured against ideal.
    pub kappa_empirical: f64,
    /// Published slope, carried for side-by-side reporting only.
    pub kappa_reported: f64,
}

fn admissible(lambda: f64, eps: f64, mode: ShrinkageMode) -> bool {
    (0.0..=1.0).contains(&lambda)
        && (0.0..0.5).contains(&eps)
        && (mode == ShrinkageMode::Composed || lambda + 2.0 * eps <= 1.0)
}

fn sse(ideal: &[f64], trace: &[f64], s: f64) -> f64 {
    ideal.iter().zip(trace).map(|(z, m)| (s * z - m).powi(2)).sum()
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// OLS slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Grid search over `(lambda, eps)` followed by pattern-search refinement.
pub fn fit_kingston(
    ideal: &[f64],
    trace: &[f64],
    mode: ShrinkageMode,
    fixed_epsilon: Option<f64>,
) -> Result<CalibrationFit> {
    if ideal.len() != trace.len() {
        return Err(LabError::LengthMismatch {
            left: ideal.len(),
            right: trace.len(),
        });
    }
    if ideal.len() < 2 || is_constant(trace) || is_constant(ideal) {
        return Err(LabError::DegenerateTrace);
    }
    if let Some(eps) = fixed_epsilon {
        if !(0.0..0.5).contains(&eps) {
            return Err(LabError::InvalidConfig(format!("fixed epsilon {eps} outside [0, 0.5)")));
        }
    }
    let cost = |l: f64, e: f64| sse(ideal, trace, shrink_factor(l, e, mode));

    let eps_grid: Vec<f64> = match fixed_epsilon {
        Some(e) => vec![e],
        None => (0..100).map(|j| j as f64 * EPSILON_GRID_STEP).collect(),
    };
    let lambda_grid: Vec<f64> = (0..=100).map(|i| i as f64 * LAMBDA_GRID_STEP).collect();

    // Row minima in parallel; ties resolve to the lowest lambda, then lowest eps.
    let row_best: Vec<Option<(f64, usize, usize)>> = lambda_grid
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            eps_grid
                .iter()
                .enumerate()
                .filter(|&(_, &e)| admissible(l, e, mode))
                .map(|(j, &e)| (cost(l, e), i, j))
                .fold(None, |best: Option<(f64, usize, usize)>, cand| match best {
                    Some(b) if b.0 <= cand.0 => Some(b),
                    _ => Some(cand),
                })
        })
        .collect();
    let (mut best, bi, bj) = row_best
        .into_iter()
        .flatten()
        .fold(None, |best: Option<(f64, usize, usize)>, cand| match best {
            Some(b) if b.0 <= cand.0 => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| LabError::InvalidConfig("no admissible grid point".into()))?;
    let (mut lambda, mut eps) = (lambda_grid[bi], eps_grid[bj]);

    let mut step_l = LAMBDA_GRID_STEP;
    let mut step_e = if fixed_epsilon.is_some() { 0.0 } else { EPSILON_GRID_STEP };
    while step_l >= PARAM_TOLERANCE || step_e >= PARAM_TOLERANCE {
        let moves = [(-step_l, 0.0), (step_l, 0.0), (0.0, -step_e), (0.0, step_e)];
        let mut improved = false;
        for (dl, de) in moves {
            let (l, e) = (lambda + dl, eps + de);
            if (dl == 0.0 && de == 0.0) || !admissible(l, e, mode) {
                continue;
            }
            let c = cost(l, e);
            if c < best {
                best = c;
                lambda = l;
                eps = e;
                improved = true;
                break;
            }
        }
        if !improved {
            step_l /= 2.0;
            step_e /= 2.0;
        }
    }

    Ok(CalibrationFit {
        lambda_hat: lambda,
        epsilon_hat: eps,
        shrink_product: shrink_factor(lambda, eps, mode),
        sse: best,
        mode,
        kappa_empirical: ls_slope(ideal, trace),
        kappa_reported: REPORTED_KAPPA,
    })
}
