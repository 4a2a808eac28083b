//! Digital-twin laboratory for the noisy Hadamard-test inner product.
//!
//! The numeric layers ([`hadamard`], [`noise`], [`metrics`]) are generic over
//! [`Scalar`] (`f32` or `f64`); experiment plumbing runs in `f64`. The `*64`
//! aliases below fix the scalar for the common case.

// `!(x > 0)` guards are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod hadamard;
pub mod manifest;
pub mod mapreduce;
pub mod metrics;
pub mod noise;
pub mod resources;
pub mod rng;
pub mod scalar;

pub use error::{LabError, Result};
pub use scalar::Scalar;

pub type FeatureVector64 = hadamard::FeatureVector<f64>;
pub type FeatureVector32 = hadamard::FeatureVector<f32>;
pub type Probe64 = hadamard::Probe<f64>;
pub type Probe32 = hadamard::Probe<f32>;
pub type ProbeSet64 = dataset::ProbeSet<f64>;
pub type NoisyOutcome64 = noise::NoisyOutcome<f64>;
pub type RankReport64 = metrics::RankReport<f64>;
pub type BinnedTrend64 = metrics::BinnedTrend<f64>;
