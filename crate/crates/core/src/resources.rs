//! CNOT count, transpiled depth and survival for an N-feature Hadamard test.
//!
//! The cost lines are fit in N to published transpiled anchors; anything
//! outside the anchor span is flagged as extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hadamard::check_power_of_two;
use crate::noise::{survival, DMAX_TABLE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub n_features: usize,
    pub cnot: f64,
    pub depth: f64,
}

/// Transpiled anchors for the 16- and 256-feature circuits.
pub const REFERENCE_ANCHORS: [Anchor; 2] = [
    Anchor {
        n_features: 16,
        cnot: 420.0,
        depth: 1008.0,
    },
    Anchor {
        n_features: 256,
        cnot: 3970.0,
        depth: 10392.0,
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub cnot_a: f64,
    pub cnot_b: f64,
    pub depth_a: f64,
    pub depth_b: f64,
    pub d_max: f64,
    /// Feature span covered by the anchors.
    pub fit_min_n: usize,
    pub fit_max_n: usize,
}

impl Default for CostModel {
    fn default() -> Self {
        fit_cost_model(&REFERENCE_ANCHORS, DMAX_TABLE).expect("built-in anchors are valid")
    }
}

impl CostModel {
    pub fn depth(&self, n_features: usize) -> f64 {
        self.depth_a * n_features as f64 + self.depth_b
    }

    pub fn cnot(&self, n_features: usize) -> f64 {
        self.cnot_a * n_features as f64 + self.cnot_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub n_features: usize,
    pub n_qubits: usize,
    pub cnot_count: f64,
    pub hw_depth: f64,
    pub survival: f64,
    pub extrapolated: bool,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares lines `cnot = a N + b` and `depth = a N + b`.
pub fn fit_cost_model(anchors: &[Anchor], d_max: f64) -> Result<CostModel> {
    if !(d_max > 0.0) {
        return Err(LabError::InvalidArgument(format!("d_max {d_max} must be positive")));
    }
    let mut distinct: Vec<usize> = anchors.iter().map(|a| a.n_features).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(LabError::DegenerateAnchors {
            needed: 2,
            got: distinct.len(),
        });
    }
    let xs: Vec<f64> = anchors.iter().map(|a| a.n_features as f64).collect();
    let cnots: Vec<f64> = anchors.iter().map(|a| a.cnot).collect();
    let depths: Vec<f64> = anchors.iter().map(|a| a.depth).collect();
    let (cnot_a, cnot_b) = line_fit(&xs, &cnots);
    let (depth_a, depth_b) = line_fit(&xs, &depths);
    Ok(CostModel {
        cnot_a,
        cnot_b,
        depth_a,
        depth_b,
        d_max,
        fit_min_n: distinct[0],
        fit_max_n: *distinct.last().unwrap(),
    })
}

pub fn estimate(n_features: usize, model: &CostModel) -> Result<ResourceEstimate> {
    check_power_of_two(n_features)?;
    if n_features > 65536 {
        return Err(LabError::InvalidArgument(format!(
            "n_features {n_features} above 65536"
        )));
    }
    let hw_depth = model.depth(n_features);
    Ok(ResourceEstimate {
        n_features,
        n_qubits: n_features.trailing_zeros() as usize + 1,
        cnot_count: model.cnot(n_features),
        hw_depth,
        survival: survival(hw_depth, model.d_max)?,
        extrapolated: n_features < model.fit_min_n || n_features > model.fit_max_n,
    })
}

/// `D_max = T2 / t_gate`.
pub fn dmax_from_coherence(t2_ns: f64, gate_ns: f64) -> Result<f64> {
    if !(t2_ns > 0.0 && gate_ns > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "T2 ({t2_ns}) and gate time ({gate_ns}) must be positive"
        )));
    }
    Ok(t2_ns / gate_ns)
}
