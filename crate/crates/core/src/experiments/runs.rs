//! Calibration and classification runs.

use serde_json::json;

use super::rank::measure;
use super::{load_data, IdxPaths, ReportSummary, RunOutput, Table};
use crate::calibration::fit_kingston;
use crate::classifier::{classify_all, ideal_accuracy, is_resilient};
use crate::dataset::make_calibration_probes;
use crate::error::Result;
use crate::manifest::{Experiment, Manifest};
use crate::metrics::{binned_trend, RankReport, DEFAULT_BIN_SIZE};
use crate::noise::survival;
use crate::row;

/// Fits the shrink product on a 100-probe trace and emits the S-curve.
pub fn calibrate100(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let data = load_data(m, m.params.n_features, idx)?;
    let probes = make_calibration_probes(&data.weights, &data.test, m.config.seed)?;
    let depth = m.params.circuit_depth;
    let (_, trace) = measure(&probes, depth, &m.config)?;
    let ideal = probes.ideal_z();
    // decay is known from the depth; the fit sees only the stochastic shrinkage
    let gamma = survival(depth, m.config.d_max)?;
    let decayed: Vec<f64> = ideal.iter().map(|z| z * gamma).collect();
    let fit = fit_kingston(&decayed, &trace, m.config.shrinkage_mode, None)?;
    let report = RankReport::compute(&ideal, &trace)?;
    let binned = binned_trend(&ideal, &trace, DEFAULT_BIN_SIZE)?;

    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| {
        probes.probes[a]
            .ideal_unscaled
            .total_cmp(&probes.probes[b].ideal_unscaled)
            .then(a.cmp(&b))
    });
    let mut scurve = Table::new(
        "scurve",
        &["rank", "probe_id", "class_row", "ideal_unscaled", "ideal_z", "fitted_z", "measured_z"],
    );
    for (rank, &i) in order.iter().enumerate() {
        let p = &probes.probes[i];
        scurve.push(row![
            rank,
            p.id,
            p.class_row.unwrap_or_default(),
            p.ideal_unscaled,
            p.ideal_z,
            fit.shrink_product * decayed[i],
            trace[i],
        ]);
    }
    let mut bins = Table::new("binned", &["bin", "mean_ideal_z", "mean_measured_z"]);
    for (b, (mi, mm)) in binned.bin_means.iter().enumerate() {
        bins.push(row![b, mi, mm]);
    }
    Ok(RunOutput {
        experiment: Experiment::Calibrate100,
        tables: vec![scurve, bins],
        summary: json!({
            "fit": fit,
            "report": ReportSummary::from(&report),
            "binned_slope": binned.slope,
            "survival": gamma,
            "planted_shrink": m.config.shrink_factor(),
        }),
    })
}

/// Noisy argmax over ten Hadamard tests per test sample.
pub fn classify_mnist(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let data = load_data(m, m.params.n_features, idx)?;
    let results = classify_all(&data.test, &data.weights, m.params.circuit_depth, &m.config)?;
    let mut table = Table::new(
        "classify",
        &["sample_id", "label", "predicted", "ideal_predicted", "margin_ideal", "top1_score", "top2_score"],
    );
    for (i, (r, s)) in results.iter().zip(&data.test).enumerate() {
        let mut sorted = r.scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        table.push(row![i, s.label, r.predicted, r.ideal_predicted, r.margin_ideal, sorted[0], sorted[1]]);
    }
    let n = results.len() as f64;
    let noisy = results.iter().filter(|r| r.correct).count() as f64 / n;
    let ideal = ideal_accuracy(&data.test, &data.weights)?;
    let resilient = results.iter().filter(|r| is_resilient(r.margin_ideal, &m.config)).count() as f64 / n;
    Ok(RunOutput {
        experiment: Experiment::ClassifyMnist,
        tables: vec![table],
        summary: json!({
            "n_samples": results.len(),
            "ideal_accuracy": ideal,
            "noisy_accuracy": noisy,
            "accuracy_delta": ideal - noisy,
            "resilient_fraction": resilient,
            "weights_trained_on": data.weights.trained_on,
        }),
    })
}

/// Grid over gate noise and shot budget: fraction of test samples whose
/// shrunk ideal margin clears `1/sqrt(K)`, next to the realized accuracy.
pub fn resilience_region(m: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    let data = load_data(m, m.params.n_features, idx)?;
    let mut table = Table::new(
        "resilience_region",
        &["lambda", "shots", "shrink", "resilient_fraction", "accuracy", "ideal_agreement"],
    );
    for &lambda in &m.params.lambda_grid {
        for &k in &m.params.shots_grid {
            let cfg = m.config.with_lambda(lambda).with_shots(k);
            if cfg.validate().is_err() {
                continue;
            }
            let results = classify_all(&data.test, &data.weights, m.params.circuit_depth, &cfg)?;
            let n = results.len() as f64;
            let frac = |pred: &dyn Fn(&crate::classifier::ClassificationResult) -> bool| {
                results.iter().filter(|r| pred(r)).count() as f64 / n
            };
            table.push(row![
                lambda,
                k,
                cfg.shrink_factor(),
                frac(&|r| is_resilient(r.margin_ideal, &cfg)),
                frac(&|r| r.correct),
                frac(&|r| r.predicted == r.ideal_predicted),
            ]);
        }
    }
    Ok(RunOutput {
        experiment: Experiment::ResilienceRegion,
        tables: vec![table],
        summary: json!({
            "n_samples": data.test.len(),
            "ideal_accuracy": ideal_accuracy(&data.test, &data.weights)?,
            "epsilon_readout": m.config.epsilon_readout,
        }),
    })
}
