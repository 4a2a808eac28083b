use proptest::prelude::*;
use rand::Rng;
use resilience_core::dataset::{
    downsample, encode_idx, make_calibration_probes, parse_images, parse_labels, train_weights, RawImage, DEFAULT_RIDGE,
};
use resilience_core::experiments::{self, IdxPaths};
use resilience_core::hadamard::{ideal_inner_product, FeatureVector, Probe};
use resilience_core::manifest::{DatasetSource, Experiment, Manifest};
use resilience_core::metrics::RankReport;
use resilience_core::noise::{full_channel, pre_shot, NoiseConfig, ShrinkageMode};
use resilience_core::rng::{keyed_rng, Stage};
use resilience_core::{FeatureVector32, Probe32};

/// Label-specific bright band over a full-rank pseudo-random background.
fn textured_images(count: usize) -> Vec<RawImage> {
    let mut rng = keyed_rng(8, Stage::Data, &[]);
    (0..count)
        .map(|i| {
            let label = i % 10;
            let mut pixels: Vec<f64> = (0..784).map(|_| rng.random_range(0.0..0.6)).collect();
            for r in 0..28 {
                for c in 0..28 {
                    if (r + c) / 6 == label {
                        pixels[r * 28 + c] = (pixels[r * 28 + c] + 0.6).min(1.0);
                    }
                }
            }
            RawImage {
                rows: 28,
                cols: 28,
                pixels,
                label,
            }
        })
        .collect()
}

#[test]
fn idx_bytes_to_calibration_trace() {
    let images = textured_images(200);
    let (img_bytes, lab_bytes) = encode_idx(&images);
    let path = std::path::Path::new("<memory>");
    let (rows, cols, pixels) = parse_images(path, &img_bytes).unwrap();
    let labels = parse_labels(path, &lab_bytes).unwrap();
    assert_eq!((rows, cols, pixels.len(), labels.len()), (28, 28, 200, 200));

    let samples: Vec<_> = images.iter().map(|im| downsample(im, 256).unwrap()).collect();
    let w = train_weights(&samples, DEFAULT_RIDGE).unwrap();
    let probes = make_calibration_probes(&w, &samples, 4).unwrap();
    let cfg = NoiseConfig::kingston().with_shots(1 << 20);
    let measured: Vec<f64> = probes.probes.iter().map(|p| full_channel(p, 0.0, &cfg).unwrap().z_measured).collect();
    let report = RankReport::compute(&probes.ideal_z(), &measured).unwrap();
    // 200 samples in 256 dims interpolate the targets, so ideal values are near-bimodal
    assert!(report.pearson_r > 0.99 && report.sign_fidelity == 1.0, "{report:?}");
}

#[test]
fn idx_experiment_matches_manual_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = encode_idx(&textured_images(300));
    let paths = IdxPaths {
        images: dir.path().join("i"),
        labels: dir.path().join("l"),
    };
    std::fs::write(&paths.images, img).unwrap();
    std::fs::write(&paths.labels, lab).unwrap();
    let mut m = Manifest::default_for(Experiment::Calibrate100);
    m.dataset_source = DatasetSource::IdxFiles;
    m.params.train_per_class = 15;
    m.params.test_per_class = 15;
    let a = experiments::run(&m, Some(&paths)).unwrap();
    let b = experiments::run(&m, Some(&paths)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.table("scurve").unwrap().rows.len(), 100);
    let fitted = a.summary["fit"]["shrink_product"].as_f64().unwrap();
    assert!((fitted - m.config.shrink_factor()).abs() < 0.05, "{fitted}");
}

#[test]
fn f32_and_f64_channels_agree() {
    let w: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.11).cos()).collect();
    let p64 = Probe::new(3, FeatureVector::new(w.clone()).unwrap(), FeatureVector::new(x.clone()).unwrap()).unwrap();
    let p32: Probe32 = Probe::new(
        3,
        FeatureVector32::new(w.iter().map(|&v| v as f32).collect()).unwrap(),
        FeatureVector32::new(x.iter().map(|&v| v as f32).collect()).unwrap(),
    )
    .unwrap();
    let cfg = NoiseConfig::kingston().with_drift(1e-4);
    let a = pre_shot(&p64, 1008.0, &cfg).unwrap();
    let b = pre_shot(&p32, 1008.0f32, &cfg).unwrap();
    assert!((a - b as f64).abs() < 1e-5);
    assert_eq!(
        full_channel(&p64, 1008.0, &cfg).unwrap().counts_plus,
        full_channel(&p32, 1008.0f32, &cfg).unwrap().counts_plus
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Without drift, the deterministic channel is a positive rescaling, so
    /// rank order and signs survive any admissible noise level.
    #[test]
    fn drift_free_channel_preserves_order(
        lambda in 0.0f64..0.99,
        eps in 0.0f64..0.49,
        depth in 0.0f64..20000.0,
        zs in prop::collection::vec(-1.0f64..1.0, 2..40),
    ) {
        let cfg = NoiseConfig::kingston().with_lambda(lambda).with_epsilon(eps).with_mode(ShrinkageMode::Composed);
        let pre: Vec<f64> = zs
            .iter()
            .map(|&z| resilience_core::noise::pre_shot_keyed(z, depth, &[0], &cfg).unwrap())
            .collect();
        for i in 0..zs.len() {
            prop_assert_eq!(pre[i] > 0.0, zs[i] > 0.0);
            for j in 0..zs.len() {
                if zs[i] < zs[j] {
                    prop_assert!(pre[i] <= pre[j]);
                }
            }
        }
    }

    #[test]
    fn ideal_inner_product_is_bounded(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
    ) {
        let (w, x): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let (Ok(w), Ok(x)) = (FeatureVector::nonzero(w), FeatureVector::nonzero(x)) {
            let z = ideal_inner_product(&w, &x).unwrap();
            prop_assert!(z.abs() <= 1.0 + 1e-12);
        }
    }
}
