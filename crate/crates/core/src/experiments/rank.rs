//! Rank-fidelity runs on the sorted 512-probe set.

use rayon::prelude::*;
use serde_json::json;

use super::{load_data, IdxPaths, ReportSummary, RunOutput, Table};
use crate::classifier::evaluate_accuracy;
use crate::dataset::{make_sorted_probes, ProbeSet};
use crate::error::Result;
use crate::manifest::{Experiment, Manifest};
use crate::metrics::RankReport;
use crate::noise::{full_channel, pre_shot, NoiseConfig};
use crate::resources::estimate;
use crate::row;

/// `(pre_shot, measured)` for every probe at `depth`.
pub(crate) fn measure(probes: &ProbeSet<f64>, depth: f64, cfg: &NoiseConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = probes
        .probes
        .par_iter()
        .map(|p| Ok((pre_shot(p, depth, cfg)?, full_channel(p, depth, cfg)?.z_measured)))
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

pub(crate) fn sorted_probes(m: &Manifest, n_features: usize, idx: Option<&IdxPaths>) -> Result<ProbeSet<f64>> {
    let data = load_data(m, n_features, idx)?;
    make_sorted_probes(&data.weights, &data.test, m.params.pool_size, m.config.seed)
}

fn subset(values: &[f64], positions: &[usize]) -> Vec<f64> {
    positions.iter().map(|&i| values[i]).collect()
}

/// Digital twin (drift off, depth 0) against drift-emulated hardware at the
/// estimated transpiled depth.
pub fn sorted512(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let n = m.params.n_features;
    let probes = sorted_probes(m, n, idx)?;
    let ideal = probes.ideal_z();
    let twin_cfg = m.config.with_drift(0.0);
    let est = estimate(n, &m.cost_model)?;

    let (twin_pre, twin) = measure(&probes, 0.0, &twin_cfg)?;
    let (hw_pre, hw) = measure(&probes, est.hw_depth, &m.config)?;
    let twin_report = RankReport::compute(&ideal, &twin)?;
    let hw_report = RankReport::compute(&ideal, &hw)?;
    let hw_pre_report = RankReport::compute(&ideal, &hw_pre)?;

    let (easy, hard) = probes.easy_hard_split.clone().unwrap_or_default();
    let split = |values: &[f64]| -> Result<serde_json::Value> {
        let e = RankReport::compute(&subset(&ideal, &easy), &subset(values, &easy))?;
        let h = RankReport::compute(&subset(&ideal, &hard), &subset(values, &hard))?;
        Ok(json!({ "easy": ReportSummary::from(&e), "hard": ReportSummary::from(&h) }))
    };

    let mut table = Table::new(
        "probes",
        &["probe_id", "class_row", "kind_flag", "ideal_z", "twin_pre_shot", "twin_z", "hw_pre_shot", "hw_z"],
    );
    for (i, p) in probes.probes.iter().enumerate() {
        let flag = if easy.binary_search(&i).is_ok() { "easy" } else { "hard" };
        table.push(row![
            p.id,
            p.class_row.map(|r| r.to_string()).unwrap_or_default(),
            flag,
            p.ideal_z,
            twin_pre[i],
            twin[i],
            hw_pre[i],
            hw[i],
        ]);
    }

    let summary = json!({
        "n_features": n,
        "twin": ReportSummary::from(&twin_report),
        "hardware": ReportSummary::from(&hw_report),
        "hardware_pre_shot": ReportSummary::from(&hw_pre_report),
        "coherence_gap": twin_report.spearman_rho - hw_report.spearman_rho,
        "twin_split": split(&twin)?,
        "hardware_split": split(&hw)?,
        "hw_depth": est.hw_depth,
        "hw_survival": crate::noise::survival(est.hw_depth, m.config.d_max)?,
        "drift_theta": m.config.drift_alpha * est.hw_depth,
        "undefined": { "twin": twin_report.undefined, "hardware": hw_report.undefined },
    });
    Ok(RunOutput {
        experiment: Experiment::Sorted512,
        tables: vec![table],
        summary,
    })
}

/// Gate-noise sweep at fixed readout error, depth 0.
pub fn noise_sweep(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let n = m.params.n_features;
    let data = load_data(m, n, idx)?;
    let probes = make_sorted_probes(&data.weights, &data.test, m.params.pool_size, m.config.seed)?;
    let ideal = probes.ideal_z();

    let mut table = Table::new(
        "noise_sweep",
        &["lambda", "shrink", "spearman_rho", "sign_fidelity", "accuracy", "mean_abs_signal"],
    );
    let mut skipped = Vec::new();
    for &lambda in &m.params.lambda_grid {
        let cfg = m.config.with_lambda(lambda);
        if cfg.validate().is_err() {
            skipped.push(lambda);
            continue;
        }
        let (pre, measured) = measure(&probes, 0.0, &cfg)?;
        let report = RankReport::compute(&ideal, &measured)?;
        let accuracy = evaluate_accuracy(&data.test, &data.weights, 0.0, &cfg)?;
        let mean_abs = pre.iter().map(|z| z.abs()).sum::<f64>() / pre.len() as f64;
        table.push(row![
            lambda,
            cfg.shrink_factor(),
            report.spearman_rho,
            report.sign_fidelity,
            accuracy,
            mean_abs,
        ]);
    }
    Ok(RunOutput {
        experiment: Experiment::NoiseSweep,
        tables: vec![table],
        summary: json!({
            "n_features": n,
            "epsilon_readout": m.config.epsilon_readout,
            "shots": m.config.shots,
            "skipped_lambdas": skipped,
        }),
    })
}

/// Twin rank fidelity as a function of the shot budget.
pub fn shot_sweep(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let probes = sorted_probes(m, m.params.n_features, idx)?;
    let ideal = probes.ideal_z();
    let mut table = Table::new(
        "shot_sweep",
        &["shots", "spearman_rho", "sign_fidelity", "binned_r2", "noise_floor"],
    );
    for &k in &m.params.shots_grid {
        let cfg = m.config.with_drift(0.0).with_shots(k);
        let (_, measured) = measure(&probes, 0.0, &cfg)?;
        let r = RankReport::compute(&ideal, &measured)?;
        table.push(row![k, r.spearman_rho, r.sign_fidelity, r.binned_r2, 1.0 / (k as f64).sqrt()]);
    }
    Ok(RunOutput {
        experiment: Experiment::ShotSweep,
        tables: vec![table],
        summary: json!({
            "n_features": m.params.n_features,
            "lambda_gate": m.config.lambda_gate,
            "epsilon_readout": m.config.epsilon_readout,
            "shrink": m.config.shrink_factor(),
        }),
    })
}

/// Twin versus emulated hardware across feature counts.
pub fn depth_ablation(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let mut table = Table::new(
        "depth_ablation",
        &["n_features", "depth", "survival", "rho_twin", "rho_hw", "sign_twin", "sign_hw", "extrapolated"],
    );
    for &n in &m.params.n_grid {
        let probes = sorted_probes(m, n, idx)?;
        let ideal = probes.ideal_z();
        let est = estimate(n, &m.cost_model)?;
        let (_, twin) = measure(&probes, 0.0, &m.config.with_drift(0.0))?;
        let (_, hw) = measure(&probes, est.hw_depth, &m.config)?;
        let t = RankReport::compute(&ideal, &twin)?;
        let h = RankReport::compute(&ideal, &hw)?;
        table.push(row![
            n,
            est.hw_depth,
            crate::noise::survival(est.hw_depth, m.config.d_max)?,
            t.spearman_rho,
            h.spearman_rho,
            t.sign_fidelity,
            h.sign_fidelity,
            est.extrapolated,
        ]);
    }
    Ok(RunOutput {
        experiment: Experiment::DepthAblation,
        tables: vec![table],
        summary: json!({ "drift_alpha": m.config.drift_alpha, "d_max": m.config.d_max }),
    })
}
