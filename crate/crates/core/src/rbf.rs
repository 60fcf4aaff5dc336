//! Gaussian radial basis function networks.
//!
//! A network is a fixed set of neurons (center, receptive width) plus a
//! weight vector. The output is linear in the weights, `Wᵀ Φ(x)`, with
//! `φ_i(x) = exp(-‖x - c_i‖² / 2σ_i²)`.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RbfNetwork {
    dimension: usize,
    /// Row-major, `len() == neurons * dimension`.
    centers: Vec<f64>,
    widths: Vec<f64>,
    weights: DVector<f64>,
}

impl RbfNetwork {
    /// Builds a network from explicit centers and widths with zero weights.
    pub fn new(dimension: usize, centers: Vec<Vec<f64>>, widths: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "must be at least 1".into(),
            });
        }
        if centers.is_empty() {
            return Err(Error::InvalidParameter {
                name: "centers",
                reason: "network needs at least one neuron".into(),
            });
        }
        if widths.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                actual: widths.len(),
            });
        }
        if let Some(w) = widths.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "width",
                reason: format!("receptive width must be positive and finite, got {w}"),
            });
        }
        let mut flat = Vec::with_capacity(centers.len() * dimension);
        for c in &centers {
            if c.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: c.len(),
                });
            }
            flat.extend_from_slice(c);
        }
        let n = centers.len();
        Ok(Self {
            dimension,
            centers: flat,
            widths,
            weights: DVector::zeros(n),
        })
    }

    /// Evenly spaced lattice of `per_dim_count^dimension` neurons over
    /// `[-1, 1]^dimension`, boundary included, all with the same width and
    /// zero weights.
    ///
    /// Neuron `i` sits at lattice coordinates `(d_1, …, d_n)` with
    /// `i = Σ d_j · per_dim_count^(j-1)`, so the first dimension varies fastest.
    pub fn grid(per_dim_count: usize, dimension: usize, width: f64) -> Result<Self> {
        if per_dim_count == 0 {
            return Err(Error::InvalidParameter {
                name: "per_dim_count",
                reason: "must be at least 1".into(),
            });
        }
        if dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "dimension",
                reason: "must be at least 1".into(),
            });
        }
        let coords = lattice_coordinates(per_dim_count);
        let total = per_dim_count
            .checked_pow(dimension as u32)
            .ok_or(Error::InvalidParameter {
                name: "per_dim_count",
                reason: "neuron count overflows".into(),
            })?;
        let centers = (0..total)
            .map(|mut idx| {
                (0..dimension)
                    .map(|_| {
                        let d = idx % per_dim_count;
                        idx /= per_dim_count;
                        coords[d]
                    })
                    .collect()
            })
            .collect();
        Self::new(dimension, centers, vec![width; total])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn neurons(&self) -> usize {
        self.widths.len()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Returns a copy of this network carrying `weights`.
    pub fn with_weights(&self, weights: DVector<f64>) -> Result<Self> {
        if weights.len() != self.neurons() {
            return Err(Error::DimensionMismatch {
                expected: self.neurons(),
                actual: weights.len(),
            });
        }
        Ok(Self {
            weights,
            ..self.clone()
        })
    }

    /// Regressor vector `Φ(input)`.
    pub fn regressor(&self, input: &[f64]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.neurons());
        self.regressor_into(input, &mut out)?;
        Ok(out)
    }

    /// Writes `Φ(input)` into `out` without allocating.
    pub fn regressor_into(&self, input: &[f64], out: &mut DVector<f64>) -> Result<()> {
        self.check_input(input)?;
        if out.len() != self.neurons() {
            return Err(Error::DimensionMismatch {
                expected: self.neurons(),
                actual: out.len(),
            });
        }
        for (i, (slot, sigma)) in out.iter_mut().zip(&self.widths).enumerate() {
            let sq: f64 = self
                .center(i)
                .iter()
                .zip(input)
                .map(|(c, x)| (x - c) * (x - c))
                .sum();
            *slot = (-sq / (2.0 * sigma * sigma)).exp();
        }
        Ok(())
    }

    /// Network output `Wᵀ Φ(input)`.
    pub fn evaluate(&self, input: &[f64]) -> Result<f64> {
        Ok(self.weights.dot(&self.regressor(input)?))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: input.len(),
            });
        }
        Ok(())
    }
}

fn lattice_coordinates(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.0];
    }
    let step = 2.0 / (count - 1) as f64;
    (0..count)
        .map(|d| {
            if d == count - 1 {
                1.0
            } else {
                -1.0 + d as f64 * step
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_3x3_has_boundary_lattice() {
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        assert_eq!(net.neurons(), 9);
        for i in 0..9 {
            for &c in net.center(i) {
                assert!(c == -1.0 || c == 0.0 || c == 1.0);
            }
        }
        assert_eq!(net.center(0), &[-1.0, -1.0]);
        assert_eq!(net.center(1), &[0.0, -1.0]);
        assert_eq!(net.center(4), &[0.0, 0.0]);
        assert_eq!(net.center(8), &[1.0, 1.0]);
        assert!(net.widths().iter().all(|&w| w == 1.0));
        assert!(net.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn single_neuron_grid_sits_at_origin() {
        let net = RbfNetwork::grid(1, 1, 2.0).unwrap();
        assert_eq!(net.neurons(), 1);
        assert_eq!(net.center(0), &[0.0]);
        assert_eq!(net.widths(), &[2.0]);
    }

    #[test]
    fn wider_grid_keeps_centers() {
        let a = RbfNetwork::grid(3, 2, 1.0).unwrap();
        let b = RbfNetwork::grid(3, 2, 2.0).unwrap();
        for i in 0..9 {
            assert_eq!(a.center(i), b.center(i));
        }
        assert!(b.widths().iter().all(|&w| w == 2.0));
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(RbfNetwork::grid(0, 2, 1.0).is_err());
        assert!(RbfNetwork::grid(3, 0, 1.0).is_err());
        assert!(RbfNetwork::grid(3, 2, 0.0).is_err());
        assert!(RbfNetwork::grid(3, 2, -1.0).is_err());
    }

    #[test]
    fn regressor_values() {
        let net = RbfNetwork::grid(1, 1, 1.0).unwrap();
        assert_eq!(net.regressor(&[0.0]).unwrap()[0], 1.0);
        assert_relative_eq!(net.regressor(&[1.0]).unwrap()[0], (-0.5f64).exp());
        assert_relative_eq!(net.regressor(&[1.0]).unwrap()[0], 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn regressor_peak_at_matching_center() {
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        let phi = net.regressor(&[0.0, 0.0]).unwrap();
        let (argmax, _) = phi.argmax();
        assert_eq!(net.center(argmax), &[0.0, 0.0]);
        assert_eq!(phi.iter().filter(|&&p| p == phi[argmax]).count(), 1);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        assert_eq!(
            net.regressor(&[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
        assert!(net.evaluate(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn evaluate_simple_cases() {
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        assert_eq!(net.evaluate(&[0.3, -0.2]).unwrap(), 0.0);
        let one = RbfNetwork::grid(1, 1, 1.0)
            .unwrap()
            .with_weights(DVector::from_element(1, 2.0))
            .unwrap();
        assert_eq!(one.evaluate(&[0.0]).unwrap(), 2.0);
    }

    fn point() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..=1.0, 2)
    }

    proptest! {
        #[test]
        fn regressor_components_in_unit_interval(x in point()) {
            let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
            for p in net.regressor(&x).unwrap().iter() {
                prop_assert!(*p > 0.0 && *p <= 1.0);
            }
        }

        #[test]
        fn evaluate_is_linear_in_weights(
            x in point(),
            w1 in prop::collection::vec(-5.0f64..5.0, 9),
            w2 in prop::collection::vec(-5.0f64..5.0, 9),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let base = RbfNetwork::grid(3, 2, 1.0).unwrap();
            let w1 = DVector::from_vec(w1);
            let w2 = DVector::from_vec(w2);
            let combo = base.with_weights(&w1 * a + &w2 * b).unwrap();
            let lhs = combo.evaluate(&x).unwrap();
            let rhs = a * base.with_weights(w1).unwrap().evaluate(&x).unwrap()
                + b * base.with_weights(w2).unwrap().evaluate(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn evaluate_invariant_under_neuron_permutation(
            x in point(),
            w in prop::collection::vec(-5.0f64..5.0, 9),
            perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let base = RbfNetwork::grid(3, 2, 1.0).unwrap()
                .with_weights(DVector::from_vec(w.clone())).unwrap();
            let centers = perm.iter().map(|&i| base.center(i).to_vec()).collect();
            let widths = perm.iter().map(|&i| base.widths()[i]).collect();
            let permuted = RbfNetwork::new(2, centers, widths).unwrap()
                .with_weights(DVector::from_iterator(9, perm.iter().map(|&i| w[i]))).unwrap();
            let a = base.evaluate(&x).unwrap();
            let b = permuted.evaluate(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
