use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::rank::sorted_probes;
use super::{IdxPaths, ReportSummary, RunOutput, Table};
use crate::error::Result;
use crate::manifest::{Experiment, Manifest};
use crate::mapreduce::{compare_regimes, plan_partition, run_distributed};
use crate::noise::{survival, NoiseConfig};
use crate::row;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Resilient,
    Transitional,
    CoherenceLimited,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Resilient => "Resilient",
            Regime::Transitional => "Transitional",
            Regime::CoherenceLimited => "Coherence-Limited",
        })
    }
}

/// Resilient while half the coherence survives (`D <= D_max ln 2`),
/// coherence-limited past `D_max`.
pub fn regime_label(depth: f64, d_max: f64) -> Result<Regime> {
    let gamma = survival(depth, d_max)?;
    Ok(if depth > d_max {
        Regime::CoherenceLimited
    } else if gamma >= 0.5 {
        Regime::Resilient
    } else {
        Regime::Transitional
    })
}

pub fn coherence_wall(m: &Manifest) -> Result<RunOutput> {
    let cfg = &m.config;
    cfg.validate()?;
    let mut depths = m.params.depth_grid.clone();
    depths.sort_by(f64::total_cmp);
    depths.dedup();
    let floor = 1.0 / (cfg.shots as f64).sqrt();
    let mut table = Table::new(
        "coherence_wall",
        &["depth", "survival", "regime_label", "signal", "signal_over_floor"],
    );
    for d in depths {
        let gamma = survival(d, cfg.d_max)?;
        let signal = cfg.shrink_factor() * gamma;
        table.push(row![d, gamma, regime_label(d, cfg.d_max)?, signal, signal / floor]);
    }
    Ok(RunOutput {
        experiment: Experiment::CoherenceWall,
        tables: vec![table],
        summary: json!({
            "d_max": cfg.d_max,
            "resilient_boundary_depth": cfg.d_max * std::f64::consts::LN_2,
            "shots": cfg.shots,
        }),
    })
}

/// Monolithic deep circuit against k shallow slices under the same shot budget.
pub fn distrib_compare(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let n = m.params.n_features;
    let probes = sorted_probes(m, n, idx)?;
    let plan = plan_partition(n, m.params.partitions, &m.cost_model)?
        .with_shot_budget(m.config.shots, m.params.fair_budget)?;
    let cmp = compare_regimes(&probes, &plan, &m.config)?;

    let exact = NoiseConfig::noiseless().with_seed(m.config.seed);
    let linearity_error = probes
        .probes
        .iter()
        .map(|p| Ok((run_distributed(p, &plan, &exact)?.value_pre_shot - p.ideal_z).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut per_probe = Table::new(
        "probes",
        &["probe_id", "ideal_z", "monolithic_z", "distributed_pre_shot", "distributed_z"],
    );
    let mut slices = Table::new(
        "slices",
        &["probe_id", "slice", "w_norm", "x_norm", "ideal_partial_z", "measured_partial_z", "contribution", "shots", "skipped"],
    );
    for (o, &(_, mono)) in cmp.outcomes.iter().zip(&cmp.monolithic.residuals) {
        per_probe.push(row![o.probe_id, o.ideal_z, mono, o.value_pre_shot, o.value_measured]);
        for s in &o.slices {
            slices.push(row![
                o.probe_id,
                s.slice,
                s.w_norm,
                s.x_norm,
                s.ideal_partial_z,
                s.measured_partial_z,
                s.contribution,
                s.shots,
                s.skipped,
            ]);
        }
    }
    Ok(RunOutput {
        experiment: Experiment::DistribCompare,
        tables: vec![per_probe, slices],
        summary: json!({
            "plan": plan,
            "monolithic": ReportSummary::from(&cmp.monolithic),
            "distributed": ReportSummary::from(&cmp.distributed),
            "zero_noise_max_error": linearity_error,
        }),
    })
}
