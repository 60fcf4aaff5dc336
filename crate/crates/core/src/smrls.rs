//! Selective memory recursive least squares.
//!
//! The normalized input space is cut into lattice partitions and each
//! partition remembers one synthesized sample. The trained weights are the
//! exact minimizer of
//!
//! ```text
//! J_S(W) = Σ_j (φ_j - WᵀΦ(γ_j))² + (W - W0)ᵀ P0⁻¹ (W - W0)
//! ```
//!
//! over the visited partitions `j`. A new sample replaces the stored sample
//! of its partition, so the step removes the old term from the objective
//! (a covariance downdate) and adds the new one (an update). Old knowledge
//! elsewhere in the input space is never discounted.
//!
//! A partition's first visit has no previous term to remove, so the
//! downdate and its weight correction are skipped; the step is then plain
//! RLS on the new sample.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{
    check_covariance, positive_diagonal, rank_one_update_in_place, symmetric_product, symmetrize,
    Sign, DEFAULT_POSITIVITY_GUARD,
};
use crate::input_space::{
    Displaced, LatestSample, MemoryUpdateRule, Normalizer, PartitionStore, SynthSample,
};
use crate::oracle::dense_inverse;
use crate::rbf::RbfNetwork;

/// What happened during one [`SmrlsState::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Partition index in `1..=N_P`.
    pub partition: usize,
    pub visited_before: bool,
    /// `W(k-1)ᵀ Φ(x(k))`, computed before the step.
    pub prediction: f64,
}

#[derive(Debug, Clone)]
pub struct SmrlsState<R = LatestSample> {
    network: RbfNetwork,
    normalizer: Normalizer,
    store: PartitionStore,
    rule: R,
    weights: DVector<f64>,
    covariance: DMatrix<f64>,
    initial_weights: DVector<f64>,
    initial_covariance: DMatrix<f64>,
    positivity_guard: f64,
    // per-step buffers
    normalized: Vec<f64>,
    phi_new: DVector<f64>,
    phi_old: DVector<f64>,
    correction: DVector<f64>,
    scratch: DVector<f64>,
    incoming: SynthSample,
    merged: SynthSample,
    displaced: Displaced,
}

impl SmrlsState<LatestSample> {
    /// Latest-sample memory with `partitions_per_dim^n` partitions.
    pub fn new(
        network: RbfNetwork,
        normalizer: Normalizer,
        partitions_per_dim: usize,
        initial_covariance: DMatrix<f64>,
        initial_weights: DVector<f64>,
    ) -> Result<Self> {
        Self::with_rule(
            network,
            normalizer,
            partitions_per_dim,
            initial_covariance,
            initial_weights,
            LatestSample,
        )
    }
}

impl<R: MemoryUpdateRule> SmrlsState<R> {
    pub fn with_rule(
        network: RbfNetwork,
        normalizer: Normalizer,
        partitions_per_dim: usize,
        initial_covariance: DMatrix<f64>,
        initial_weights: DVector<f64>,
        rule: R,
    ) -> Result<Self> {
        let n = network.neurons();
        let dim = network.dimension();
        if normalizer.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: normalizer.dimension(),
            });
        }
        if initial_weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: initial_weights.len(),
            });
        }
        check_covariance(&initial_covariance, n)?;
        let mut initial_covariance = initial_covariance;
        symmetrize(&mut initial_covariance);
        let store = PartitionStore::new(partitions_per_dim, dim)?;
        Ok(Self {
            network,
            normalizer,
            store,
            rule,
            weights: initial_weights.clone(),
            covariance: initial_covariance.clone(),
            initial_weights,
            initial_covariance,
            positivity_guard: DEFAULT_POSITIVITY_GUARD,
            normalized: vec![0.0; dim],
            phi_new: DVector::zeros(n),
            phi_old: DVector::zeros(n),
            correction: DVector::zeros(n),
            scratch: DVector::zeros(n),
            incoming: SynthSample::zero(dim),
            merged: SynthSample::zero(dim),
            displaced: Displaced {
                sample: SynthSample::zero(dim),
                visited_before: false,
            },
        })
    }

    pub fn set_positivity_guard(&mut self, guard: f64) {
        self.positivity_guard = guard;
    }

    pub fn network(&self) -> &RbfNetwork {
        &self.network
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn store(&self) -> &PartitionStore {
        &self.store
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn initial_weights(&self) -> &DVector<f64> {
        &self.initial_weights
    }

    pub fn initial_covariance(&self) -> &DMatrix<f64> {
        &self.initial_covariance
    }

    /// Number of squared-error terms in the synthesized objective (`M_P`).
    pub fn objective_terms(&self) -> usize {
        self.store.visited_count()
    }

    /// Trains on a raw (unnormalized) input and its measurement.
    pub fn step(&mut self, raw_input: &[f64], measurement: f64) -> Result<StepOutcome> {
        let mut x = std::mem::take(&mut self.normalized);
        let res = self
            .normalizer
            .normalize_into(raw_input, &mut x)
            .and_then(|_| self.step_normalized(&x, measurement));
        self.normalized = x;
        res
    }

    /// Trains on an input already in `[-1, 1]^n`.
    pub fn step_normalized(&mut self, x: &[f64], measurement: f64) -> Result<StepOutcome> {
        let partition = self.store.encode(x)?;
        self.network.regressor_into(x, &mut self.phi_new)?;
        let prediction = self.weights.dot(&self.phi_new);

        self.incoming.input.clear();
        self.incoming.input.extend_from_slice(x);
        self.incoming.output = measurement;
        self.store.update_with(
            partition,
            &self.incoming,
            &self.rule,
            &mut self.displaced,
            &mut self.merged,
        )?;
        let (_, current, current_output) = self.store.stored(partition)?;

        // Φ(γ_a(k)) may differ from Φ(x(k)) under a non-default rule.
        if current != x {
            self.network.regressor_into(current, &mut self.phi_new)?;
        }
        let innovation_new = current_output - self.weights.dot(&self.phi_new);
        let displaced = &self.displaced;

        if displaced.visited_before {
            self.network
                .regressor_into(&displaced.sample.input, &mut self.phi_old)?;
            if let Err(e) = rank_one_update_in_place(
                &mut self.covariance,
                &self.phi_old,
                Sign::Downdate,
                self.positivity_guard,
                &mut self.scratch,
            ) {
                self.store.restore(partition, displaced);
                return Err(e);
            }
        }
        rank_one_update_in_place(
            &mut self.covariance,
            &self.phi_new,
            Sign::Update,
            self.positivity_guard,
            &mut self.scratch,
        )?;
        debug_assert!(positive_diagonal(&self.covariance));

        // W(k) = W(k-1) + P(k) [Φ_new e_new - Φ_old e_old]
        self.correction.copy_from(&self.phi_new);
        self.correction *= innovation_new;
        if displaced.visited_before {
            let innovation_old = displaced.sample.output - self.weights.dot(&self.phi_old);
            self.correction.axpy(-innovation_old, &self.phi_old, 1.0);
        }
        symmetric_product(&self.covariance, &self.correction, &mut self.scratch);
        self.weights += &self.scratch;

        Ok(StepOutcome {
            partition,
            visited_before: displaced.visited_before,
            prediction,
        })
    }

    /// A priori prediction at a normalized input.
    pub fn predict_normalized(&self, x: &[f64]) -> Result<f64> {
        Ok(self.weights.dot(&self.network.regressor(x)?))
    }

    /// `P0⁻¹ + Σ_j Φ(γ_j)Φ(γ_j)ᵀ` rebuilt from the memory store.
    pub fn rebuild_information_matrix(&self) -> Result<DMatrix<f64>> {
        let mut info = dense_inverse(&self.initial_covariance)?;
        for (_, gamma, _) in self.store.iter_visited() {
            let phi = self.network.regressor(gamma)?;
            info.ger(1.0, &phi, &phi, 1.0);
        }
        Ok(info)
    }

    /// Snapshot of the current weights.
    pub fn learned_knowledge(&self) -> DVector<f64> {
        self.weights.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorState;
    use approx::assert_relative_eq;

    fn state(per_dim: usize) -> SmrlsState {
        SmrlsState::new(
            RbfNetwork::grid(3, 2, 1.0).unwrap(),
            Normalizer::unit(2).unwrap(),
            per_dim,
            DMatrix::identity(9, 9) * 10.0,
            DVector::zeros(9),
        )
        .unwrap()
    }

    #[test]
    fn first_sample_is_one_rls_step() {
        let mut s = state(10);
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        let mut rls =
            EstimatorState::rls(DMatrix::identity(9, 9) * 10.0, DVector::zeros(9)).unwrap();
        let x = [0.31, -0.44];
        let out = s.step(&x, 2.5).unwrap();
        rls.ffrls_step(&net.regressor(&x).unwrap(), 2.5).unwrap();
        assert!(!out.visited_before);
        assert_eq!(out.prediction, 0.0);
        assert_relative_eq!(s.weights(), rls.weights(), epsilon = 1e-13);
        assert_relative_eq!(s.covariance(), rls.covariance().unwrap(), epsilon = 1e-12);
        assert_eq!(s.objective_terms(), 1);
    }

    #[test]
    fn repeated_sample_is_idempotent() {
        let mut s = state(10);
        for (x, y) in [([0.1, 0.2], 1.0), ([-0.5, 0.7], -2.0), ([0.9, -0.9], 0.5)] {
            s.step(&x, y).unwrap();
        }
        let w = s.weights().clone();
        let p = s.covariance().clone();
        let out = s.step(&[-0.5, 0.7], -2.0).unwrap();
        assert!(out.visited_before);
        assert!((s.weights() - &w).abs().max() < 1e-10);
        assert!((s.covariance() - &p).abs().max() < 1e-10);
    }

    #[test]
    fn covariance_stays_exactly_symmetric() {
        let mut s = state(10);
        let mut ff =
            EstimatorState::ffrls(0.999, DMatrix::identity(9, 9) * 10.0, DVector::zeros(9))
                .unwrap();
        let net = RbfNetwork::grid(3, 2, 1.0).unwrap();
        for k in 0..2000 {
            let t = k as f64 * 0.01;
            let x = [t.sin(), (0.7 * t).cos()];
            let y = x[0] * x[1] - 0.3 * x[0];
            s.step(&x, y).unwrap();
            ff.ffrls_step(&net.regressor(&x).unwrap(), y).unwrap();
        }
        assert_eq!(s.covariance(), &s.covariance().transpose());
        let p = ff.covariance().unwrap();
        assert_eq!(p, &p.transpose());
    }

    #[test]
    fn fresh_state_information_is_prior() {
        let s = state(4);
        assert_relative_eq!(
            s.rebuild_information_matrix().unwrap(),
            DMatrix::identity(9, 9) * 0.1,
            epsilon = 1e-15
        );
        assert_eq!(s.learned_knowledge(), DVector::zeros(9));
    }

    #[test]
    fn snapshot_is_a_copy() {
        let mut s = state(4);
        s.step(&[0.2, 0.2], 1.0).unwrap();
        let snap = s.learned_knowledge();
        s.step(&[-0.7, 0.4], 3.0).unwrap();
        assert_ne!(&snap, s.weights());
    }

    #[test]
    fn raw_inputs_are_normalized() {
        let mut s = SmrlsState::new(
            RbfNetwork::grid(3, 2, 1.0).unwrap(),
            Normalizer::new(vec![(0.0, 10.0), (-2.0, 2.0)]).unwrap(),
            10,
            DMatrix::identity(9, 9) * 10.0,
            DVector::zeros(9),
        )
        .unwrap();
        let out = s.step(&[10.0, 2.0], 1.0).unwrap();
        assert_eq!(out.partition, 100);
        assert!(s.step(&[1.0], 1.0).is_err());
    }

    #[test]
    fn guard_failure_leaves_state_untouched() {
        let mut s = state(4);
        s.step(&[0.1, 0.1], 1.0).unwrap();
        s.set_positivity_guard(2.0);
        let before_w = s.weights().clone();
        let before_p = s.covariance().clone();
        let before_store = s.store().clone();
        let err = s.step(&[0.2, 0.2], 4.0).unwrap_err();
        assert!(matches!(err, Error::DowndateSingular { .. }));
        assert_eq!(s.weights(), &before_w);
        assert_eq!(s.covariance(), &before_p);
        assert_eq!(s.store(), &before_store);
    }
}
