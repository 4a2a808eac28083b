use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Sample, N_CLASSES};
use crate::error::{LabError, Result};
use crate::hadamard::{ideal_inner_product, FeatureVector};

pub const DEFAULT_RIDGE: f64 = 1e-3;

/// One weight row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub rows: Vec<FeatureVector<f64>>,
    pub trained_on: String,
}

impl WeightMatrix {
    pub fn new(rows: Vec<FeatureVector<f64>>, trained_on: String) -> Result<Self> {
        if rows.len() != N_CLASSES {
            return Err(LabError::InvalidArgument(format!(
                "expected {N_CLASSES} weight rows, got {}",
                rows.len()
            )));
        }
        if rows.iter().any(|r| r.raw_norm() <= 0.0) {
            return Err(LabError::ZeroNorm);
        }
        Ok(Self { rows, trained_on })
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }
}

pub(crate) fn fingerprint(samples: &[Sample]) -> String {
    let mut h = Sha256::new();
    for s in samples {
        h.update((s.label as u64).to_le_bytes());
        for v in s.features.values() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

/// Closed-form one-vs-rest ridge regression on +/-1 targets.
pub fn train_weights(train: &[Sample], ridge: f64) -> Result<WeightMatrix> {
    let n = train
        .first()
        .ok_or(LabError::MissingClass(0))?
        .features
        .len();
    for class in 0..N_CLASSES {
        if !train.iter().any(|s| s.label == class) {
            return Err(LabError::MissingClass(class));
        }
    }
    if !(ridge >= 0.0) {
        return Err(LabError::InvalidArgument(format!("ridge {ridge} must be non-negative")));
    }

    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, N_CLASSES);
    for s in train {
        if s.features.len() != n {
            return Err(LabError::LengthMismatch {
                left: n,
                right: s.features.len(),
            });
        }
        let x = DVector::from_column_slice(s.features.values());
        gram.ger(1.0, &x, &x, 1.0);
        for c in 0..N_CLASSES {
            let target = if s.label == c { 1.0 } else { -1.0 };
            let mut col = rhs.column_mut(c);
            col.axpy(target, &x, 1.0);
        }
    }
    for i in 0..n {
        gram[(i, i)] += ridge;
    }
    let chol = gram.cholesky().ok_or(LabError::Singular(ridge))?;
    let solution = chol.solve(&rhs);
    let rows = (0..N_CLASSES)
        .map(|c| FeatureVector::new(solution.column(c).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    WeightMatrix::new(rows, fingerprint(train))
}

/// Noiseless normalized class scores for one sample.
pub fn ideal_scores(sample: &Sample, w: &WeightMatrix) -> Result<Vec<f64>> {
    w.rows
        .iter()
        .map(|row| ideal_inner_product(row, &sample.features))
        .collect()
}
