//! Experiment harness. Each run turns a [`Manifest`] into CSV tables plus a
//! JSON summary; [`write_run`] persists them next to a manifest sidecar.
//!
//! CSV and summary bodies depend only on the manifest (never on wall-clock
//! time or thread scheduling), so reruns are byte-identical.

mod hardware;
mod rank;
mod runs;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dataset::{downsample, read_idx, synthetic_fallback, train_weights, Sample, SyntheticSpec, WeightMatrix, N_CLASSES};
use crate::error::{LabError, Result};
use crate::manifest::{DatasetSource, Experiment, Manifest};
use crate::metrics::RankReport;

pub use hardware::{coherence_wall, distrib_compare, regime_label, Regime};
pub use rank::{depth_ablation, noise_sweep, shot_sweep, sorted512};
pub use runs::{calibrate100, classify_mnist, resilience_region};

/// One CSV file: header plus stringified rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| LabError::io("<csv>", e.into_error()))
    }
}

/// Stringifies heterogeneous cells for [`Table::push`].
#[macro_export]
macro_rules! row {
    ($($cell:expr),* $(,)?) => { vec![$($cell.to_string()),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub experiment: Experiment,
    pub tables: Vec<Table>,
    pub summary: Value,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Rank statistics without the per-probe residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportSummary {
    pub spearman_rho: f64,
    pub pearson_r: f64,
    pub sign_fidelity: f64,
    pub binned_r2: f64,
    pub n_probes: usize,
}

impl From<&RankReport<f64>> for ReportSummary {
    fn from(r: &RankReport<f64>) -> Self {
        Self {
            spearman_rho: r.spearman_rho,
            pearson_r: r.pearson_r,
            sign_fidelity: r.sign_fidelity,
            binned_r2: r.binned_r2,
            n_probes: r.n_probes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxPaths {
    pub images: PathBuf,
    pub labels: PathBuf,
}

/// Train/test split plus the ridge weights trained on it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabData {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub weights: WeightMatrix,
}

/// Builds the dataset for `n_features`. Synthetic data is split class-balanced;
/// IDX data takes the first `10 * train_per_class` images for training and the
/// next `10 * test_per_class` (or whatever remains) for testing.
pub fn load_data(manifest: &Manifest, n_features: usize, idx: Option<&IdxPaths>) -> Result<LabData> {
    let p = &manifest.params;
    let n_train = p.train_per_class * N_CLASSES;
    let (train, test) = match manifest.dataset_source {
        DatasetSource::Synthetic => {
            let spec = SyntheticSpec {
                n_features,
                per_class: p.train_per_class + p.test_per_class,
                ..p.synthetic
            };
            let mut all = synthetic_fallback(&spec, manifest.config.seed)?;
            let test = all.split_off(n_train);
            (all, test)
        }
        DatasetSource::IdxFiles => {
            let paths = idx.ok_or_else(|| {
                LabError::InvalidArgument("dataset_source is idx_files but no IDX paths were given".into())
            })?;
            let images = read_idx(&paths.images, &paths.labels)?;
            if images.len() <= n_train {
                return Err(LabError::InsufficientSamples {
                    needed: n_train + 1,
                    have: images.len(),
                });
            }
            let n_test = (p.test_per_class * N_CLASSES).min(images.len() - n_train);
            let samples = images[..n_train + n_test]
                .iter()
                .map(|im| downsample(im, n_features))
                .collect::<Result<Vec<_>>>()?;
            let (train, test) = samples.split_at(n_train);
            (train.to_vec(), test.to_vec())
        }
    };
    let weights = train_weights(&train, p.ridge)?;
    Ok(LabData { train, test, weights })
}

/// Dispatches to the run for `manifest.experiment`.
pub fn run(manifest: &Manifest, idx: Option<&IdxPaths>) -> Result<RunOutput> {
    manifest.validate()?;
    match manifest.experiment {
        Experiment::Calibrate100 => calibrate100(manifest, idx),
        Experiment::Sorted512 => sorted512(manifest, idx),
        Experiment::NoiseSweep => noise_sweep(manifest, idx),
        Experiment::ShotSweep => shot_sweep(manifest, idx),
        Experiment::DepthAblation => depth_ablation(manifest, idx),
        Experiment::ResilienceRegion => resilience_region(manifest, idx),
        Experiment::CoherenceWall => coherence_wall(manifest),
        Experiment::DistribCompare => distrib_compare(manifest, idx),
        Experiment::ClassifyMnist => classify_mnist(manifest, idx),
    }
}

/// Writes `<table>.csv`, `summary.json` and the `manifest.json` sidecar into
/// `dir`; returns the written paths.
pub fn write_run(dir: &Path, manifest: &Manifest, output: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    let mut digests = serde_json::Map::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(&name);
        fs::write(&path, &bytes).map_err(|e| LabError::io(&path, e))?;
        digests.insert(name, Value::String(hex::encode(Sha256::digest(&bytes))));
        written.push(path);
        Ok(())
    };
    for t in &output.tables {
        emit(format!("{}.csv", t.name), t.to_csv()?)?;
    }
    let mut summary = serde_json::to_vec_pretty(&output.summary)?;
    summary.push(b'\n');
    emit("summary.json".into(), summary)?;

    let sidecar = json!({
        "manifest": manifest,
        "manifest_sha256": manifest.hash(),
        "outputs": digests,
    });
    let path = dir.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&sidecar)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment) -> Manifest {
        let mut m = Manifest::default_for(experiment);
        m.params.train_per_class = 40;
        m.params.test_per_class = 60;
        m.params.pool_size = 600;
        m
    }

    #[test]
    fn synthetic_split_is_balanced() {
        let m = small(Experiment::Sorted512);
        let data = load_data(&m, 16, None).unwrap();
        assert_eq!((data.train.len(), data.test.len()), (400, 600));
        for c in 0..N_CLASSES {
            assert_eq!(data.train.iter().filter(|s| s.label == c).count(), 40);
        }
    }

    #[test]
    fn idx_source_requires_paths() {
        let mut m = small(Experiment::ClassifyMnist);
        m.dataset_source = DatasetSource::IdxFiles;
        assert!(matches!(load_data(&m, 16, None), Err(LabError::InvalidArgument(_))));
    }

    #[test]
    fn table_csv_layout() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(row![1, 0.5]);
        t.push(row!["x,y", true]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1,0.5\n\"x,y\",true\n");
        assert_eq!(t.column("b").unwrap(), vec!["0.5", "true"]);
    }

    #[test]
    fn write_run_emits_sidecar_with_digests() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::default_for(Experiment::CoherenceWall);
        let out = run(&m, None).unwrap();
        let paths = write_run(dir.path(), &m, &out).unwrap();
        assert!(paths.iter().any(|p| p.ends_with("coherence_wall.csv")));
        let sidecar: Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(sidecar["manifest_sha256"], Value::String(m.hash()));
        let csv = fs::read(dir.path().join("coherence_wall.csv")).unwrap();
        assert_eq!(sidecar["outputs"]["coherence_wall.csv"], Value::String(hex::encode(Sha256::digest(&csv))));
    }
}
