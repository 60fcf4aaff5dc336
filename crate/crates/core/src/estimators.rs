//! Baseline real-time trainers: stochastic gradient descent and recursive
//! least squares with a forgetting factor, plus the Sherman–Morrison
//! rank-one covariance update shared with SMRLS.
//!
//! Nothing on a step path inverts or factorizes a matrix; every step is a
//! handful of matrix-vector products and rank-one corrections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible `1 - vᵀPv` for a covariance downdate.
pub const DEFAULT_POSITIVITY_GUARD: f64 = 1e-10;

/// Direction of a rank-one change to the information matrix `P⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `P⁻¹ + vvᵀ`
    Update,
    /// `P⁻¹ - vvᵀ`
    Downdate,
}

/// Which update law an [`EstimatorState`] follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Sgd {
        learning_rate: f64,
    },
    /// `forgetting == 1.0` is ordinary RLS.
    Ffrls {
        forgetting: f64,
    },
}

/// Weights, covariance and hyperparameters of one training session.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    algorithm: Algorithm,
    weights: DVector<f64>,
    covariance: Option<DMatrix<f64>>,
    initial_weights: DVector<f64>,
    initial_covariance: Option<DMatrix<f64>>,
    scratch: DVector<f64>,
}

impl EstimatorState {
    pub fn sgd(learning_rate: f64, initial_weights: DVector<f64>) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!(
                    "learning rate must be finite and non-negative, got {learning_rate}"
                ),
            });
        }
        let n = initial_weights.len();
        Ok(Self {
            algorithm: Algorithm::Sgd { learning_rate },
            weights: initial_weights.clone(),
            covariance: None,
            initial_weights,
            initial_covariance: None,
            scratch: DVector::zeros(n),
        })
    }

    /// Forgetting-factor RLS starting from `(W0, P0)`; `P0` must be SPD.
    pub fn ffrls(
        forgetting: f64,
        initial_covariance: DMatrix<f64>,
        initial_weights: DVector<f64>,
    ) -> Result<Self> {
        if !(forgetting > 0.0 && forgetting <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("forgetting factor must lie in (0, 1], got {forgetting}"),
            });
        }
        let n = initial_weights.len();
        check_covariance(&initial_covariance, n)?;
        let mut initial_covariance = initial_covariance;
        symmetrize(&mut initial_covariance);
        Ok(Self {
            algorithm: Algorithm::Ffrls { forgetting },
            weights: initial_weights.clone(),
            covariance: Some(initial_covariance.clone()),
            initial_weights,
            initial_covariance: Some(initial_covariance),
            scratch: DVector::zeros(n),
        })
    }

    /// Ordinary RLS (forgetting factor 1).
    pub fn rls(initial_covariance: DMatrix<f64>, initial_weights: DVector<f64>) -> Result<Self> {
        Self::ffrls(1.0, initial_covariance, initial_weights)
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    pub fn initial_weights(&self) -> &DVector<f64> {
        &self.initial_weights
    }

    pub fn initial_covariance(&self) -> Option<&DMatrix<f64>> {
        self.initial_covariance.as_ref()
    }

    /// A priori prediction `W(k-1)ᵀ Φ`.
    pub fn predict(&self, regressor: &DVector<f64>) -> Result<f64> {
        self.check_len(regressor)?;
        Ok(self.weights.dot(regressor))
    }

    /// One step of whichever law this state was built with.
    pub fn step(&mut self, regressor: &DVector<f64>, measurement: f64) -> Result<()> {
        match self.algorithm {
            Algorithm::Sgd { .. } => self.sgd_step(regressor, measurement),
            Algorithm::Ffrls { .. } => self.ffrls_step(regressor, measurement),
        }
    }

    /// `W ← W + η Φ (y - WᵀΦ)`.
    pub fn sgd_step(&mut self, regressor: &DVector<f64>, measurement: f64) -> Result<()> {
        self.check_len(regressor)?;
        let learning_rate = match self.algorithm {
            Algorithm::Sgd { learning_rate } => learning_rate,
            Algorithm::Ffrls { .. } => {
                return Err(Error::InvalidParameter {
                    name: "algorithm",
                    reason: "sgd_step called on an RLS state".into(),
                })
            }
        };
        let innovation = measurement - self.weights.dot(regressor);
        self.weights
            .axpy(learning_rate * innovation, regressor, 1.0);
        Ok(())
    }

    /// Forgetting-factor RLS in matrix-inversion-lemma form:
    /// `P ← (P - PΦΦᵀP / (λ + ΦᵀPΦ)) / λ`, then
    /// `W ← W + PΦ (y - W_prevᵀΦ)` with the updated `P`.
    pub fn ffrls_step(&mut self, regressor: &DVector<f64>, measurement: f64) -> Result<()> {
        self.check_len(regressor)?;
        let forgetting = match self.algorithm {
            Algorithm::Ffrls { forgetting } => forgetting,
            Algorithm::Sgd { .. } => {
                return Err(Error::InvalidParameter {
                    name: "algorithm",
                    reason: "ffrls_step called on an SGD state".into(),
                })
            }
        };
        let p = self.covariance.as_mut().ok_or(Error::MissingCovariance)?;
        let innovation = measurement - self.weights.dot(regressor);

        // scratch = P(k-1) Φ
        symmetric_product(p, regressor, &mut self.scratch);
        let denom = forgetting + regressor.dot(&self.scratch);
        symmetric_rank_one(p, -1.0 / denom, &self.scratch);
        if forgetting != 1.0 {
            *p /= forgetting;
        }
        debug_assert!(positive_diagonal(p));

        // scratch = P(k) Φ
        symmetric_product(p, regressor, &mut self.scratch);
        self.weights.axpy(innovation, &self.scratch, 1.0);
        Ok(())
    }

    /// Full Cholesky check of the covariance; for tests and diagnostics only.
    pub fn check_positive_definite(&self) -> Result<()> {
        match &self.covariance {
            Some(p) => check_covariance(p, self.weights.len()),
            None => Err(Error::MissingCovariance),
        }
    }

    fn check_len(&self, regressor: &DVector<f64>) -> Result<()> {
        if regressor.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: regressor.len(),
            });
        }
        Ok(())
    }
}

/// Gradient of `½ (y - WᵀΦ)²` with respect to `W`.
pub fn squared_error_gradient(
    weights: &DVector<f64>,
    regressor: &DVector<f64>,
    measurement: f64,
) -> DVector<f64> {
    regressor * -(measurement - weights.dot(regressor))
}

/// Sherman–Morrison: returns the matrix whose inverse is `P⁻¹ ± vvᵀ`.
pub fn rank_one_update(p: &DMatrix<f64>, v: &DVector<f64>, sign: Sign) -> Result<DMatrix<f64>> {
    let mut out = p.clone();
    let mut scratch = DVector::zeros(v.len());
    rank_one_update_in_place(&mut out, v, sign, DEFAULT_POSITIVITY_GUARD, &mut scratch)?;
    Ok(out)
}

/// In-place form of [`rank_one_update`]; `scratch` must have `v.len()`
/// entries. On error `p` is left untouched.
///
/// Update: `P - PvvᵀP / (1 + vᵀPv)`.
/// Downdate: `P + PvvᵀP / (1 - vᵀPv)`, refused when `1 - vᵀPv < guard`.
pub fn rank_one_update_in_place(
    p: &mut DMatrix<f64>,
    v: &DVector<f64>,
    sign: Sign,
    guard: f64,
    scratch: &mut DVector<f64>,
) -> Result<()> {
    let n = v.len();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.nrows(),
        });
    }
    if scratch.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: scratch.len(),
        });
    }
    symmetric_product(p, v, scratch);
    let quad = v.dot(scratch);
    let scale = match sign {
        Sign::Update => -1.0 / (1.0 + quad),
        Sign::Downdate => {
            let margin = 1.0 - quad;
            if !(margin >= guard) {
                return Err(Error::DowndateSingular { margin });
            }
            1.0 / margin
        }
    };
    symmetric_rank_one(p, scale, scratch);
    Ok(())
}

/// `out = P v` for symmetric `P`: entry `i` is column `i` dotted with `v`.
pub(crate) fn symmetric_product(p: &DMatrix<f64>, v: &DVector<f64>, out: &mut DVector<f64>) {
    let n = v.len();
    let v = v.as_slice();
    for (col, o) in p.as_slice().chunks_exact(n).zip(out.iter_mut()) {
        *o = col.iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

/// `P ← P + s u uᵀ`. Entry `(i, j)` gets `s (uᵢ uⱼ)`, which is bitwise equal
/// to what `(j, i)` gets, so a symmetric `P` stays exactly symmetric.
pub(crate) fn symmetric_rank_one(p: &mut DMatrix<f64>, scale: f64, u: &DVector<f64>) {
    let n = u.len();
    let u = u.as_slice();
    for (col, uj) in p.as_mut_slice().chunks_exact_mut(n).zip(u) {
        for (c, ui) in col.iter_mut().zip(u) {
            *c += scale * (ui * uj);
        }
    }
}

pub(crate) fn positive_diagonal(p: &DMatrix<f64>) -> bool {
    (0..p.nrows()).all(|i| p[(i, i)] > 0.0)
}

/// `P ← (P + Pᵀ) / 2`.
pub fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = avg;
            p[(j, i)] = avg;
        }
    }
}

pub(crate) fn check_covariance(p: &DMatrix<f64>, n: usize) -> Result<()> {
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.nrows(),
        });
    }
    let asym = (p - p.transpose()).abs().max();
    if !(asym <= 1e-9 * (1.0 + p.abs().max())) {
        return Err(Error::NotPositiveDefinite);
    }
    if p.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn sgd_zero_innovation_keeps_weights() {
        let w = DVector::from_vec(vec![0.5, -1.0]);
        let phi = DVector::from_vec(vec![0.3, 0.7]);
        let y = w.dot(&phi);
        let mut s = EstimatorState::sgd(0.02, w.clone()).unwrap();
        s.sgd_step(&phi, y).unwrap();
        assert_eq!(s.weights(), &w);
    }

    #[test]
    fn sgd_single_step() {
        let mut s = EstimatorState::sgd(1.0, DVector::zeros(1)).unwrap();
        s.sgd_step(&DVector::from_element(1, 1.0), 2.0).unwrap();
        assert_eq!(s.weights()[0], 2.0);
    }

    #[test]
    fn sgd_zero_rate_is_identity() {
        let w = DVector::from_vec(vec![0.1, 0.2, 0.3]);
        let mut s = EstimatorState::sgd(0.0, w.clone()).unwrap();
        for k in 0..20 {
            let phi = DVector::from_fn(3, |i, _| ((i + k) as f64).sin());
            s.sgd_step(&phi, k as f64).unwrap();
        }
        assert_eq!(s.weights(), &w);
    }

    #[test]
    fn ffrls_scalar_first_step() {
        let mut s = EstimatorState::ffrls(1.0, DMatrix::from_element(1, 1, 1.0), DVector::zeros(1))
            .unwrap();
        s.ffrls_step(&DVector::from_element(1, 1.0), 1.0).unwrap();
        assert_relative_eq!(s.covariance().unwrap()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.weights()[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn constructors_validate() {
        let p0 = DMatrix::identity(2, 2);
        assert!(EstimatorState::ffrls(1.5, p0.clone(), DVector::zeros(2)).is_err());
        assert!(EstimatorState::ffrls(0.0, p0.clone(), DVector::zeros(2)).is_err());
        assert!(EstimatorState::ffrls(0.9, p0, DVector::zeros(3)).is_err());
        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            EstimatorState::rls(not_spd, DVector::zeros(2)),
            Err(Error::NotPositiveDefinite)
        );
        assert!(EstimatorState::sgd(-0.1, DVector::zeros(2)).is_err());
    }

    #[test]
    fn wrong_law_is_rejected() {
        let mut s = EstimatorState::sgd(0.1, DVector::zeros(1)).unwrap();
        assert!(s.ffrls_step(&DVector::zeros(1), 1.0).is_err());
        let mut r = EstimatorState::rls(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        assert!(r.sgd_step(&DVector::zeros(1), 1.0).is_err());
        assert!(r.step(&DVector::zeros(2), 1.0).is_err());
    }

    #[test]
    fn rank_one_zero_vector_is_noop() {
        let p = spd(4, &[0.3, -0.1, 0.7, 0.2, 0.5]);
        let v = DVector::zeros(4);
        assert_eq!(rank_one_update(&p, &v, Sign::Update).unwrap(), p);
        assert_eq!(rank_one_update(&p, &v, Sign::Downdate).unwrap(), p);
    }

    #[test]
    fn downdate_guard_trips() {
        // P = I, v = e1: 1 - vᵀPv = 0
        let p = DMatrix::identity(3, 3);
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let mut q = p.clone();
        let mut scratch = DVector::zeros(3);
        let err = rank_one_update_in_place(
            &mut q,
            &v,
            Sign::Downdate,
            DEFAULT_POSITIVITY_GUARD,
            &mut scratch,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DowndateSingular { .. }));
        assert_eq!(q, p);
    }

    proptest! {
        #[test]
        fn update_downdate_round_trip(
            seed in prop::collection::vec(-1.0f64..1.0, 81),
            v in prop::collection::vec(-1.0f64..1.0, 9),
        ) {
            let p = spd(9, &seed);
            let v = DVector::from_vec(v);
            let up = rank_one_update(&p, &v, Sign::Update).unwrap();
            let back = rank_one_update(&up, &v, Sign::Downdate).unwrap();
            prop_assert!((back - &p).abs().max() <= 1e-10 * (1.0 + p.abs().max()));
        }

        #[test]
        fn sgd_is_deterministic(w in prop::collection::vec(-1.0f64..1.0, 4), y in -3.0f64..3.0) {
            let phi = DVector::from_vec(vec![0.9, 0.1, 0.4, 0.6]);
            let mut a = EstimatorState::sgd(0.02, DVector::from_vec(w.clone())).unwrap();
            let mut b = a.clone();
            a.sgd_step(&phi, y).unwrap();
            b.sgd_step(&phi, y).unwrap();
            prop_assert_eq!(a.weights().as_slice(), b.weights().as_slice());
        }
    }
}
