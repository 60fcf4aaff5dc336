//! Direct (non-recursive) least-squares solutions used as reference values
//! for the recursive trainers. These factorize dense matrices and are meant
//! for tests and offline evaluation, never for a training step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regressor/measurement pair with a non-negative weight in the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub regressor: DVector<f64>,
    pub measurement: f64,
    pub weight: f64,
}

impl WeightedSample {
    pub fn new(regressor: DVector<f64>, measurement: f64, weight: f64) -> Self {
        Self {
            regressor,
            measurement,
            weight,
        }
    }
}

/// Minimizer of `Σ w_i (y_i - WᵀΦ_i)² + (W - W0)ᵀ P0⁻¹ (W - W0)`, from the
/// regularized normal equations solved by Cholesky.
pub fn batch_oracle_weighted(
    samples: &[WeightedSample],
    initial_covariance: &DMatrix<f64>,
    initial_weights: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = initial_weights.len();
    let information = dense_inverse(initial_covariance)?;
    if information.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: information.nrows(),
        });
    }
    let mut lhs = information.clone();
    let mut rhs = &information * initial_weights;
    for s in samples {
        if s.regressor.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: s.regressor.len(),
            });
        }
        if !(s.weight >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "weight",
                reason: format!("sample weight must be non-negative, got {}", s.weight),
            });
        }
        lhs.ger(s.weight, &s.regressor, &s.regressor, 1.0);
        rhs.axpy(s.weight * s.measurement, &s.regressor, 1.0);
    }
    let chol = lhs.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&rhs))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn dense_inverse(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            actual: p.ncols(),
        });
    }
    let chol = p.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mut inv = chol.inverse();
    crate::estimators::symmetrize(&mut inv);
    Ok(inv)
}

/// `‖a - b‖₂ / ‖b‖₂`, or the absolute difference when `b` is zero.
pub fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Frobenius-norm analogue of [`relative_error`] for matrices.
pub fn relative_matrix_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let scale = b.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_samples_give_initial_weights() {
        let w0 = DVector::from_vec(vec![0.5, -2.0]);
        let p0 = DMatrix::identity(2, 2) * 10.0;
        let w = batch_oracle_weighted(&[], &p0, &w0).unwrap();
        assert_relative_eq!(w, w0, epsilon = 1e-14);
    }

    #[test]
    fn weak_prior_interpolates_single_sample() {
        let p0 = DMatrix::from_element(1, 1, 1e12);
        let s = WeightedSample::new(DVector::from_element(1, 1.0), 3.0, 1.0);
        let w = batch_oracle_weighted(&[s], &p0, &DVector::zeros(1)).unwrap();
        assert_relative_eq!(w[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn hand_solved_scalar_objective() {
        // (1 - W)² + W² is minimized at W = 1/2
        let s = WeightedSample::new(DVector::from_element(1, 1.0), 1.0, 1.0);
        let w = batch_oracle_weighted(&[s], &DMatrix::identity(1, 1), &DVector::zeros(1)).unwrap();
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_negative_weight() {
        let s = WeightedSample::new(DVector::from_element(1, 1.0), 1.0, -1.0);
        assert!(batch_oracle_weighted(&[s], &DMatrix::identity(1, 1), &DVector::zeros(1)).is_err());
    }

    #[test]
    fn dense_inverse_round_trip() {
        let p = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = dense_inverse(&p).unwrap();
        assert_relative_eq!(&p * inv, DMatrix::identity(2, 2), epsilon = 1e-14);
    }
}
