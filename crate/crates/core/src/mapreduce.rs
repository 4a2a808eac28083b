//! Partitioned inner products: k shallow Hadamard tests reduced classically.
//!
//! Slices are contiguous. Each slice runs as its own normalized Hadamard test
//! at the depth of a `N/k`-feature circuit; its measured expectation is
//! rescaled by the classically known slice norms, summed, and divided by the
//! global norm product so the result is comparable with `ideal_z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ProbeSet;
use crate::error::{LabError, Result};
use crate::hadamard::{check_power_of_two, Probe};
use crate::metrics::RankReport;
use crate::noise::{full_channel_keyed, pre_shot_keyed, NoiseConfig};
use crate::resources::{estimate, CostModel};

const SLICE_TAG: u64 = 0x5354_4c43;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub n_features: usize,
    pub k: usize,
    pub slice_width: usize,
    pub per_slice_depth: f64,
    pub monolithic_depth: f64,
    /// Shots spent on the monolithic circuit, and in total across slices when `fair_budget`.
    pub total_shots: u64,
    pub shots_per_slice: u64,
    pub fair_budget: bool,
}

pub fn plan_partition(n_features: usize, k: usize, model: &CostModel) -> Result<PartitionPlan> {
    check_power_of_two(n_features)?;
    if k == 0 || !n_features.is_multiple_of(k) {
        return Err(LabError::Indivisible { n: n_features, k });
    }
    let slice_width = n_features / k;
    if slice_width < 2 {
        return Err(LabError::SliceTooNarrow(slice_width));
    }
    check_power_of_two(slice_width)?;
    Ok(PartitionPlan {
        n_features,
        k,
        slice_width,
        per_slice_depth: estimate(slice_width, model)?.hw_depth,
        monolithic_depth: estimate(n_features, model)?.hw_depth,
        total_shots: crate::noise::DEFAULT_SHOTS,
        shots_per_slice: crate::noise::DEFAULT_SHOTS,
        fair_budget: false,
    })
}

impl PartitionPlan {
    /// Sets the shot budget. In fair mode the budget is split evenly across
    /// slices and must divide exactly.
    pub fn with_shot_budget(mut self, total_shots: u64, fair_budget: bool) -> Result<Self> {
        if total_shots == 0 {
            return Err(LabError::InvalidConfig("shot budget must be >= 1".into()));
        }
        let k = self.k as u64;
        if fair_budget && !total_shots.is_multiple_of(k) {
            return Err(LabError::InvalidConfig(format!(
                "fair budget {total_shots} not divisible by k = {k}"
            )));
        }
        self.total_shots = total_shots;
        self.fair_budget = fair_budget;
        self.shots_per_slice = if fair_budget { total_shots / k } else { total_shots };
        Ok(self)
    }

    /// Shots consumed by one distributed evaluation.
    pub fn distributed_shots(&self) -> u64 {
        self.shots_per_slice * self.k as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceContribution {
    pub slice: usize,
    pub w_norm: f64,
    pub x_norm: f64,
    pub ideal_partial_z: f64,
    pub pre_shot_partial_z: f64,
    pub measured_partial_z: f64,
    /// Measured partial value rescaled by the slice norms (unscaled units).
    pub contribution: f64,
    pub shots: u64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedOutcome {
    pub probe_id: u64,
    pub ideal_z: f64,
    /// Reduced estimate from the deterministic channel only.
    pub value_pre_shot: f64,
    pub value_measured: f64,
    pub slices: Vec<SliceContribution>,
}

pub fn run_distributed(probe: &Probe<f64>, plan: &PartitionPlan, cfg: &NoiseConfig) -> Result<DistributedOutcome> {
    cfg.validate()?;
    if probe.n_features() != plan.n_features {
        return Err(LabError::LengthMismatch {
            left: probe.n_features(),
            right: plan.n_features,
        });
    }
    let slice_cfg = cfg.with_shots(plan.shots_per_slice);
    let w = probe.weights.values();
    let x = probe.features.values();
    let width = plan.slice_width;

    let mut slices = Vec::with_capacity(plan.k);
    for i in 0..plan.k {
        let (ws, xs) = (&w[i * width..(i + 1) * width], &x[i * width..(i + 1) * width]);
        let w_norm = ws.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x_norm = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if w_norm == 0.0 || x_norm == 0.0 {
            slices.push(SliceContribution {
                slice: i,
                w_norm,
                x_norm,
                ideal_partial_z: 0.0,
                pre_shot_partial_z: 0.0,
                measured_partial_z: 0.0,
                contribution: 0.0,
                shots: 0,
                skipped: true,
            });
            continue;
        }
        let dot: f64 = ws.iter().zip(xs).map(|(a, b)| a * b).sum();
        let z = (dot / (w_norm * x_norm)).clamp(-1.0, 1.0);
        let key = [probe.id, SLICE_TAG, i as u64];
        let pre = pre_shot_keyed(z, plan.per_slice_depth, &key, &slice_cfg)?;
        let measured = full_channel_keyed(z, plan.per_slice_depth, &key, &slice_cfg)?.z_measured;
        slices.push(SliceContribution {
            slice: i,
            w_norm,
            x_norm,
            ideal_partial_z: z,
            pre_shot_partial_z: pre,
            measured_partial_z: measured,
            contribution: measured * w_norm * x_norm,
            shots: plan.shots_per_slice,
            skipped: false,
        });
    }
    // fixed summation order over slice index
    let (mut pre_sum, mut measured_sum) = (0.0, 0.0);
    for s in &slices {
        pre_sum += s.pre_shot_partial_z * s.w_norm * s.x_norm;
        measured_sum += s.contribution;
    }
    Ok(DistributedOutcome {
        probe_id: probe.id,
        ideal_z: probe.ideal_z,
        value_pre_shot: pre_sum / probe.scale,
        value_measured: measured_sum / probe.scale,
        slices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub monolithic: RankReport<f64>,
    pub distributed: RankReport<f64>,
    pub plan: PartitionPlan,
    pub outcomes: Vec<DistributedOutcome>,
}

/// Runs the same probes monolithically (one deep circuit, `total_shots`) and
/// partitioned (k shallow circuits, `shots_per_slice` each).
pub fn compare_regimes(probes: &ProbeSet<f64>, plan: &PartitionPlan, cfg: &NoiseConfig) -> Result<RegimeComparison> {
    let mono_cfg = cfg.with_shots(plan.total_shots);
    let ideal = probes.ideal_z();
    let mono: Vec<f64> = probes
        .probes
        .par_iter()
        .map(|p| Ok(full_channel_keyed(p.ideal_z, plan.monolithic_depth, &[p.id], &mono_cfg)?.z_measured))
        .collect::<Result<_>>()?;
    let outcomes: Vec<DistributedOutcome> = probes
        .probes
        .par_iter()
        .map(|p| run_distributed(p, plan, cfg))
        .collect::<Result<_>>()?;
    let dist: Vec<f64> = outcomes.iter().map(|o| o.value_measured).collect();
    Ok(RegimeComparison {
        monolithic: RankReport::compute(&ideal, &mono)?,
        distributed: RankReport::compute(&ideal, &dist)?,
        plan: *plan,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::FeatureVector;
    use crate::rng::{keyed_rng, Stage};
    use rand::Rng;

    fn random_probe(id: u64, n: usize) -> Probe<f64> {
        let mut rng = keyed_rng(3, Stage::Data, &[id]);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Probe::new(id, FeatureVector::new(w).unwrap(), FeatureVector::new(x).unwrap()).unwrap()
    }

    #[test]
    fn plan_examples() {
        let m = CostModel::default();
        let p = plan_partition(256, 16, &m).unwrap();
        assert_eq!(p.slice_width, 16);
        assert!((p.per_slice_depth - 1008.0).abs() < 1e-6);
        assert!((p.monolithic_depth - 10392.0).abs() < 1e-6);
        let mono = plan_partition(16, 1, &m).unwrap();
        assert_eq!(mono.slice_width, 16);
        assert_eq!(mono.per_slice_depth, mono.monolithic_depth);
        assert!(matches!(plan_partition(256, 3, &m), Err(LabError::Indivisible { .. })));
        assert!(matches!(plan_partition(256, 256, &m), Err(LabError::SliceTooNarrow(1))));
        assert!(p.with_shot_budget(16384, true).unwrap().shots_per_slice == 1024);
        assert!(p.with_shot_budget(1000, true).is_err());
        let fair = p.with_shot_budget(16384, true).unwrap();
        assert_eq!(fair.distributed_shots(), fair.total_shots);
    }

    #[test]
    fn zero_noise_reduce_is_exact_for_every_k() {
        let cfg = NoiseConfig::noiseless();
        let m = CostModel::default();
        for k in [1, 2, 4, 8, 16, 32, 64, 128] {
            let plan = plan_partition(256, k, &m).unwrap();
            for id in 0..10 {
                let p = random_probe(id, 256);
                let out = run_distributed(&p, &plan, &cfg).unwrap();
                assert!((out.value_pre_shot - p.ideal_z).abs() < 1e-10, "k={k}");
                let partial: f64 = out.slices.iter().map(|s| s.ideal_partial_z * s.w_norm * s.x_norm).sum();
                assert!((partial - p.ideal_unscaled).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mass_in_one_slice() {
        let mut w = vec![0.0; 64];
        let mut x = vec![0.0; 64];
        for i in 16..32 {
            w[i] = (i as f64).sin();
            x[i] = (i as f64).cos() + 0.3;
        }
        let probe = Probe::new(
            5,
            FeatureVector::new(w).unwrap(),
            FeatureVector::new(x).unwrap(),
        )
        .unwrap();
        let plan = plan_partition(64, 4, &CostModel::default()).unwrap();
        let cfg = NoiseConfig::kingston().with_drift(1e-4).with_seed(2);
        let out = run_distributed(&probe, &plan, &cfg).unwrap();
        let live: Vec<_> = out.slices.iter().filter(|s| !s.skipped).collect();
        assert_eq!(live.len(), 1);
        assert_eq!(live[0].slice, 1);
        // whole vector lives in slice 1, so its norms equal the global ones
        assert!((out.value_measured - live[0].measured_partial_z).abs() < 1e-12);
        assert!(out.slices.iter().filter(|s| s.skipped).all(|s| s.contribution == 0.0 && s.shots == 0));
    }

    #[test]
    fn dimension_mismatch() {
        let plan = plan_partition(64, 4, &CostModel::default()).unwrap();
        assert!(run_distributed(&random_probe(0, 16), &plan, &NoiseConfig::kingston()).is_err());
    }
}
