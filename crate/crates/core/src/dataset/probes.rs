use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Sample, WeightMatrix, N_CLASSES};
use crate::error::{LabError, Result};
use crate::hadamard::Probe;
use crate::rng::{keyed_rng, Stage};
use crate::scalar::Scalar;

pub const CALIBRATION_COUNT: usize = 100;
pub const SORTED_COUNT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Calibration100,
    Sorted512,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct ProbeSet<T> {
    pub kind: ProbeKind,
    pub probes: Vec<Probe<T>>,
    /// `(easy, hard)` positions into `probes`, both ascending.
    pub easy_hard_split: Option<(Vec<usize>, Vec<usize>)>,
}

impl<T: Scalar> ProbeSet<T> {
    pub fn custom(probes: Vec<Probe<T>>) -> Self {
        Self {
            kind: ProbeKind::Custom,
            probes,
            easy_hard_split: None,
        }
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn ideal_z(&self) -> Vec<T> {
        self.probes.iter().map(|p| p.ideal_z).collect()
    }

    fn flag(&self, position: usize) -> &'static str {
        match (&self.easy_hard_split, self.kind) {
            (Some((easy, _)), _) if easy.binary_search(&position).is_ok() => "easy",
            (Some((_, hard)), _) if hard.binary_search(&position).is_ok() => "hard",
            (_, ProbeKind::Calibration100) => "calibration",
            (_, ProbeKind::Sorted512) => "sorted",
            (_, ProbeKind::Custom) => "custom",
        }
    }

    /// CSV with columns `probe_id,class_row,ideal_unscaled,scale,ideal_z,kind_flag`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["probe_id", "class_row", "ideal_unscaled", "scale", "ideal_z", "kind_flag"])?;
        for (pos, p) in self.probes.iter().enumerate() {
            w.write_record([
                p.id.to_string(),
                p.class_row.map(|r| r.to_string()).unwrap_or_default(),
                p.ideal_unscaled.to_string(),
                p.scale.to_string(),
                p.ideal_z.to_string(),
                self.flag(pos).to_string(),
            ])?;
        }
        w.flush().map_err(|e| LabError::io("<csv>", e))?;
        Ok(())
    }
}

fn indices_by_label(samples: &[Sample]) -> Vec<Vec<usize>> {
    let mut by_label = vec![Vec::new(); N_CLASSES];
    for (i, s) in samples.iter().enumerate() {
        by_label[s.label].push(i);
    }
    by_label
}

/// 100 probes: every class row paired with one sample of every label.
pub fn make_calibration_probes(w: &WeightMatrix, samples: &[Sample], seed: u64) -> Result<ProbeSet<f64>> {
    let per_row = CALIBRATION_COUNT / N_CLASSES;
    let mut by_label = indices_by_label(samples);
    for (label, idx) in by_label.iter_mut().enumerate() {
        if idx.len() < per_row {
            return Err(LabError::InsufficientSamples {
                needed: per_row,
                have: idx.len(),
            });
        }
        idx.shuffle(&mut keyed_rng(seed, Stage::Selection, &[label as u64]));
    }
    let mut probes = Vec::with_capacity(CALIBRATION_COUNT);
    for (row, weights) in w.rows.iter().enumerate() {
        for (label, idx) in by_label.iter().enumerate() {
            let sample = &samples[idx[row]];
            let id = (row * N_CLASSES + label) as u64;
            probes.push(Probe::new(id, weights.clone(), sample.features.clone())?.with_class_row(row));
        }
    }
    Ok(ProbeSet {
        kind: ProbeKind::Calibration100,
        probes,
        easy_hard_split: None,
    })
}

/// 512 probes: the 256 largest-|z| and 256 smallest-|z| candidates drawn from a
/// seeded pool of `pool_size` (sample, class row) pairs, sorted ascending by z.
pub fn make_sorted_probes(w: &WeightMatrix, samples: &[Sample], pool_size: usize, seed: u64) -> Result<ProbeSet<f64>> {
    let total = samples.len() * w.rows.len();
    if pool_size < SORTED_COUNT || total < pool_size {
        return Err(LabError::InsufficientSamples {
            needed: pool_size.max(SORTED_COUNT),
            have: total.min(pool_size),
        });
    }
    let mut pairs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|s| (0..w.rows.len()).map(move |r| (s, r)))
        .collect();
    pairs.shuffle(&mut keyed_rng(seed, Stage::Selection, &[u64::MAX]));
    pairs.truncate(pool_size);

    let pool: Vec<Probe<f64>> = pairs
        .iter()
        .map(|&(s, r)| Ok(Probe::new(0, w.rows[r].clone(), samples[s].features.clone())?.with_class_row(r)))
        .collect::<Result<_>>()?;

    let mut by_mag: Vec<usize> = (0..pool.len()).collect();
    by_mag.sort_by(|&a, &b| {
        pool[b].ideal_z.abs().total_cmp(&pool[a].ideal_z.abs()).then(a.cmp(&b))
    });
    let half = SORTED_COUNT / 2;
    let mut chosen: Vec<(usize, bool)> = by_mag[..half]
        .iter()
        .map(|&i| (i, true))
        .chain(by_mag[by_mag.len() - half..].iter().map(|&i| (i, false)))
        .collect();
    chosen.sort_by(|a, b| pool[a.0].ideal_z.total_cmp(&pool[b.0].ideal_z).then(a.0.cmp(&b.0)));

    let (mut easy, mut hard) = (Vec::with_capacity(half), Vec::with_capacity(half));
    let mut probes = Vec::with_capacity(SORTED_COUNT);
    for (pos, &(i, is_easy)) in chosen.iter().enumerate() {
        let mut p = pool[i].clone();
        p.id = pos as u64;
        probes.push(p);
        if is_easy {
            easy.push(pos);
        } else {
            hard.push(pos);
        }
    }
    Ok(ProbeSet {
        kind: ProbeKind::Sorted512,
        probes,
        easy_hard_split: Some((easy, hard)),
    })
}
