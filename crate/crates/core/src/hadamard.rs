//! Ideal Hadamard-test mathematics.
//!
//! The Hadamard test on an ancilla plus an `n`-qubit register prepares
//! `(|0>|x> + |1>|w>)/sqrt(2)`, applies H to the ancilla and reads `<Z>`,
//! which equals `Re<w|x>` for the amplitude-encoded (unit-norm) vectors.
//! [`ideal_inner_product`] is the analytic shortcut; [`statevector_hadamard_test`]
//! runs the circuit on a dense state and is kept as a validation oracle.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Largest register dimension accepted by the statevector oracle.
pub const ORACLE_MAX_DIM: usize = 256;

pub(crate) fn check_power_of_two(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(LabError::NotPowerOfTwo(n))
    }
}

/// Feature amplitudes before amplitude encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct FeatureVector<T> {
    values: Vec<T>,
    raw_norm: T,
}

impl<T: Scalar> FeatureVector<T> {
    /// Wraps raw amplitudes. The length must be a power of two; a zero norm is
    /// representable but rejected by every operation that needs to normalize.
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_power_of_two(values.len())?;
        let raw_norm = values.iter().map(|&v| v * v).sum::<T>().sqrt();
        Ok(Self { values, raw_norm })
    }

    /// Like [`FeatureVector::new`] but also rejects zero-norm input.
    pub fn nonzero(values: Vec<T>) -> Result<Self> {
        let v = Self::new(values)?;
        if v.raw_norm > T::zero() {
            Ok(v)
        } else {
            Err(LabError::ZeroNorm)
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn raw_norm(&self) -> T {
        self.raw_norm
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    /// Unit-norm amplitudes.
    pub fn normalized(&self) -> Result<Vec<T>> {
        if self.raw_norm <= T::zero() {
            return Err(LabError::ZeroNorm);
        }
        Ok(self.values.iter().map(|&v| v / self.raw_norm).collect())
    }

    /// Copy rescaled to unit norm.
    pub fn to_unit(&self) -> Result<Self> {
        Ok(Self {
            values: self.normalized()?,
            raw_norm: T::one(),
        })
    }
}

fn check_pair<T: Scalar>(w: &FeatureVector<T>, x: &FeatureVector<T>) -> Result<()> {
    if w.len() != x.len() {
        return Err(LabError::LengthMismatch {
            left: w.len(),
            right: x.len(),
        });
    }
    check_power_of_two(w.len())?;
    if w.raw_norm <= T::zero() || x.raw_norm <= T::zero() {
        return Err(LabError::ZeroNorm);
    }
    Ok(())
}

/// Raw (unnormalized) inner product `w . x`.
pub fn unscaled_inner_product<T: Scalar>(w: &FeatureVector<T>, x: &FeatureVector<T>) -> Result<T> {
    if w.len() != x.len() {
        return Err(LabError::LengthMismatch {
            left: w.len(),
            right: x.len(),
        });
    }
    Ok(w.values.iter().zip(&x.values).map(|(&a, &b)| a * b).sum())
}

/// `Re<w|x>` of the normalized vectors, the noiseless Hadamard-test expectation.
pub fn ideal_inner_product<T: Scalar>(w: &FeatureVector<T>, x: &FeatureVector<T>) -> Result<T> {
    check_pair(w, x)?;
    let dot = unscaled_inner_product(w, x)?;
    let z = dot / (w.raw_norm * x.raw_norm);
    Ok(z.max(-T::one()).min(T::one()))
}

/// One Hadamard-test evaluation: a weight slice paired with a feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Probe<T> {
    pub id: u64,
    pub class_row: Option<usize>,
    pub weights: FeatureVector<T>,
    pub features: FeatureVector<T>,
    pub ideal_unscaled: T,
    pub ideal_z: T,
    pub scale: T,
}

impl<T: Scalar> Probe<T> {
    pub fn new(id: u64, weights: FeatureVector<T>, features: FeatureVector<T>) -> Result<Self> {
        check_pair(&weights, &features)?;
        let ideal_unscaled = unscaled_inner_product(&weights, &features)?;
        let scale = weights.raw_norm * features.raw_norm;
        let ideal_z = (ideal_unscaled / scale).max(-T::one()).min(T::one());
        Ok(Self {
            id,
            class_row: None,
            weights,
            features,
            ideal_unscaled,
            ideal_z,
            scale,
        })
    }

    pub fn with_class_row(mut self, row: usize) -> Self {
        self.class_row = Some(row);
        self
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

/// Householder reflection sending `|0>` to the real unit vector `target`.
/// Returns `None` when `target` already equals `|0>`.
fn householder_axis<T: Scalar>(target: &[T]) -> Option<Vec<T>> {
    let mut u: Vec<T> = target.iter().map(|&t| -t).collect();
    u[0] = u[0] + T::one();
    let norm = u.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm <= T::epsilon() {
        return None;
    }
    u.iter_mut().for_each(|v| *v = *v / norm);
    Some(u)
}

fn reflect<T: Scalar>(half: &mut [Complex<T>], axis: &[T]) {
    let proj: Complex<T> = half
        .iter()
        .zip(axis)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, &u)| acc + a * u);
    let two = T::lit(2.0);
    for (a, &u) in half.iter_mut().zip(axis) {
        *a = *a - proj * (two * u);
    }
}

fn hadamard_on_ancilla<T: Scalar>(state: &mut [Complex<T>], dim: usize) {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let (lo, hi) = state.split_at_mut(dim);
    for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
        let (p, q) = (*a0, *a1);
        *a0 = (p + q) * s;
        *a1 = (p - q) * s;
    }
}

/// Dense statevector simulation of the Hadamard test; returns the exact ancilla `<Z>`.
///
/// Layout: the ancilla is the most significant qubit. State preparation of
/// each register branch is a controlled Householder reflection `|0> -> |v>`.
pub fn statevector_hadamard_test<T: Scalar>(w: &FeatureVector<T>, x: &FeatureVector<T>) -> Result<T> {
    check_pair(w, x)?;
    let dim = w.len();
    if dim > ORACLE_MAX_DIM {
        return Err(LabError::OracleTooLarge {
            dim,
            limit: ORACLE_MAX_DIM,
        });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut state = vec![zero; 2 * dim];
    state[0] = Complex::new(T::one(), T::zero());

    hadamard_on_ancilla(&mut state, dim);
    let (branch0, branch1) = state.split_at_mut(dim);
    if let Some(axis) = householder_axis(&x.normalized()?) {
        reflect(branch0, &axis);
    }
    if let Some(axis) = householder_axis(&w.normalized()?) {
        reflect(branch1, &axis);
    }
    hadamard_on_ancilla(&mut state, dim);

    let p0: T = state[..dim].iter().map(|a| a.norm_sqr()).sum();
    let p1: T = state[dim..].iter().map(|a| a.norm_sqr()).sum();
    Ok(p0 - p1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{keyed_rng, Stage};
    use proptest::prelude::*;
    use rand::Rng;

    fn fv(v: &[f64]) -> FeatureVector<f64> {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn random_vec(seed: u64, id: u64, n: usize) -> Vec<f64> {
        let mut rng = keyed_rng(seed, Stage::Data, &[id]);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    // Oracle: plain dot product of independently normalized vectors.
    fn brute_force(w: &[f64], x: &[f64]) -> f64 {
        let nw = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter().zip(x).map(|(a, b)| (a / nw) * (b / nx)).sum()
    }

    #[test]
    fn identical_vectors_give_one() {
        let v = fv(&[0.3, -1.2, 2.0, 0.5]);
        assert!((ideal_inner_product(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!((statevector_hadamard_test(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_basis_vectors_give_zero() {
        let e0 = fv(&[1.0, 0.0, 0.0, 0.0]);
        let e1 = fv(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(ideal_inner_product(&e0, &e1).unwrap(), 0.0);
        assert!(statevector_hadamard_test(&e0, &e1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn random_pair_matches_brute_force() {
        let w = random_vec(11, 0, 16);
        let x = random_vec(11, 1, 16);
        let got = ideal_inner_product(&fv(&w), &fv(&x)).unwrap();
        assert!((got - brute_force(&w, &x)).abs() < 1e-12);
    }

    #[test]
    fn statevector_agrees_on_fifty_pairs() {
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let w = fv(&random_vec(5, 2 * i, 16));
            let x = fv(&random_vec(5, 2 * i + 1, 16));
            let a = ideal_inner_product(&w, &x).unwrap();
            let b = statevector_hadamard_test(&w, &x).unwrap();
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-10, "max deviation {worst}");
    }

    #[test]
    fn statevector_runs_in_single_precision() {
        let w = FeatureVector::<f32>::new(vec![1.0, 2.0, 0.0, -1.0]).unwrap();
        let x = FeatureVector::<f32>::new(vec![0.5, 0.5, 1.0, 1.0]).unwrap();
        let a = ideal_inner_product(&w, &x).unwrap();
        let b = statevector_hadamard_test(&w, &x).unwrap();
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn distinct_errors() {
        let a = fv(&[1.0, 0.0]);
        let b = fv(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(ideal_inner_product(&a, &b), Err(LabError::LengthMismatch { .. })));
        assert!(matches!(FeatureVector::<f64>::new(vec![1.0, 2.0, 3.0]), Err(LabError::NotPowerOfTwo(3))));
        let z = fv(&[0.0, 0.0]);
        assert!(matches!(ideal_inner_product(&a, &z), Err(LabError::ZeroNorm)));
        assert!(matches!(FeatureVector::nonzero(vec![0.0f64, 0.0]), Err(LabError::ZeroNorm)));
        let big = fv(&vec![1.0; 512]);
        assert!(matches!(
            statevector_hadamard_test(&big, &big),
            Err(LabError::OracleTooLarge { dim: 512, .. })
        ));
    }

    #[test]
    fn probe_invariants() {
        let p = Probe::new(0, fv(&[3.0, 4.0]), fv(&[1.0, 1.0])).unwrap();
        assert!((p.ideal_unscaled - 7.0).abs() < 1e-12);
        assert!((p.scale - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((p.ideal_z - p.ideal_unscaled / p.scale).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bilinear_and_symmetric(
            w in prop::collection::vec(-5.0f64..5.0, 8),
            x1 in prop::collection::vec(-5.0f64..5.0, 8),
            x2 in prop::collection::vec(-5.0f64..5.0, 8),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let mix: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
            let w = fv(&w);
            let lhs = unscaled_inner_product(&w, &fv(&mix)).unwrap();
            let rhs = a * unscaled_inner_product(&w, &fv(&x1)).unwrap()
                + b * unscaled_inner_product(&w, &fv(&x2)).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);

            let x = fv(&x1);
            if w.raw_norm() > 1e-9 && x.raw_norm() > 1e-9 {
                let fwd = ideal_inner_product(&w, &x).unwrap();
                let bwd = ideal_inner_product(&x, &w).unwrap();
                prop_assert!((fwd - bwd).abs() < 1e-14);
                prop_assert!(fwd.abs() <= 1.0 + 1e-12);
                let unit = x.to_unit().unwrap();
                prop_assert!((unit.values().iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }
}
