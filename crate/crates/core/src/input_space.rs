//! Input normalization, lattice partitioning and the per-partition sample
//! memory used by selective-memory training.

use crate::error::{Error, Result};

/// Affine map of raw state bounds onto `[-1, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    bounds: Vec<(f64, f64)>,
}

impl Normalizer {
    /// `bounds[i] = (min_i, max_i)` in raw units; requires `max_i > min_i`.
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter {
                name: "bounds",
                reason: "need at least one dimension".into(),
            });
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!("degenerate interval [{lo}, {hi}]"),
                });
            }
        }
        Ok(Self { bounds })
    }

    /// Identity normalizer over `[-1, 1]^dimension`.
    pub fn unit(dimension: usize) -> Result<Self> {
        Self::new(vec![(-1.0, 1.0); dimension])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// `(2x - max - min) / (max - min)` per component, clamped to `[-1, 1]`.
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dimension()];
        self.normalize_into(raw, &mut out)?;
        Ok(out)
    }

    pub fn normalize_into(&self, raw: &[f64], out: &mut [f64]) -> Result<()> {
        if raw.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: raw.len(),
            });
        }
        if out.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: out.len(),
            });
        }
        for ((o, &x), &(lo, hi)) in out.iter_mut().zip(raw).zip(&self.bounds) {
            *o = ((2.0 * x - hi - lo) / (hi - lo)).clamp(-1.0, 1.0);
        }
        Ok(())
    }
}

/// Exact integer `dimension`-th root of `count`, if there is one.
pub fn per_dim_partitions(count: usize, dimension: usize) -> Result<usize> {
    let err = Error::NotPerfectPower { count, dimension };
    if count == 0 || dimension == 0 {
        return Err(err);
    }
    let guess = (count as f64).powf(1.0 / dimension as f64).round() as usize;
    for cand in guess.saturating_sub(1)..=guess + 1 {
        if cand > 0 && cand.checked_pow(dimension as u32) == Some(count) {
            return Ok(cand);
        }
    }
    Err(err)
}

/// Partition index in `1..=count` of a normalized point.
///
/// Per dimension the cell index is `ceil((x_i + 1)·m/2 - 1)` clamped into
/// `[0, m-1]`, where `m` is the per-dimension partition count; the flat index
/// is `1 + Σ d_i · m^(i-1)`. Cells are closed on their upper edge, and the
/// lowest cell also absorbs `x_i = -1`.
pub fn encode_partition(x: &[f64], count: usize, dimension: usize) -> Result<usize> {
    if x.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            actual: x.len(),
        });
    }
    let m = per_dim_partitions(count, dimension)?;
    encode_with(x, m)
}

fn encode_with(x: &[f64], m: usize) -> Result<usize> {
    let mut index = 0usize;
    let mut stride = 1usize;
    for &xi in x {
        if !xi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "input",
                reason: format!("non-finite coordinate {xi}"),
            });
        }
        let raw = ((xi + 1.0) * m as f64 / 2.0 - 1.0).ceil();
        let d = raw.clamp(0.0, (m - 1) as f64) as usize;
        index += d * stride;
        stride *= m;
    }
    Ok(index + 1)
}

/// One synthesized sample `(γ_j, φ_j)` in normalized input coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub input: Vec<f64>,
    pub output: f64,
}

impl SynthSample {
    pub fn new(input: Vec<f64>, output: f64) -> Self {
        Self { input, output }
    }

    pub fn zero(dimension: usize) -> Self {
        Self {
            input: vec![0.0; dimension],
            output: 0.0,
        }
    }
}

/// How a partition's stored sample absorbs a newly observed sample.
pub trait MemoryUpdateRule {
    /// Writes into `merged` the new synthesized sample for a partition that
    /// previously held `stored` (`visited` tells whether `stored` is real
    /// data or the zero placeholder).
    fn synthesize(
        &self,
        stored: &SynthSample,
        visited: bool,
        incoming: &SynthSample,
        merged: &mut SynthSample,
    );
}

/// Keep only the latest sample observed in each partition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LatestSample;

impl MemoryUpdateRule for LatestSample {
    fn synthesize(
        &self,
        _: &SynthSample,
        _: bool,
        incoming: &SynthSample,
        merged: &mut SynthSample,
    ) {
        merged.clone_from(incoming);
    }
}

/// What a memory update pushed out of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Displaced {
    pub sample: SynthSample,
    pub visited_before: bool,
}

/// Dense per-partition memory: synthesized inputs, outputs and visited flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStore {
    dimension: usize,
    per_dim: usize,
    count: usize,
    /// Row-major `count × dimension`.
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    visited: Vec<bool>,
    visited_count: usize,
}

impl PartitionStore {
    /// Store over `per_dim^dimension` partitions, all unvisited and zeroed.
    pub fn new(per_dim: usize, dimension: usize) -> Result<Self> {
        if per_dim == 0 || dimension == 0 {
            return Err(Error::InvalidParameter {
                name: "partitions",
                reason: "per-dimension count and dimension must be positive".into(),
            });
        }
        let count = per_dim
            .checked_pow(dimension as u32)
            .ok_or(Error::InvalidParameter {
                name: "partitions",
                reason: "partition count overflows".into(),
            })?;
        Ok(Self {
            dimension,
            per_dim,
            count,
            inputs: vec![0.0; count * dimension],
            outputs: vec![0.0; count],
            visited: vec![false; count],
            visited_count: 0,
        })
    }

    /// Store over `count` partitions; `count` must be a perfect `dimension`-th power.
    pub fn with_count(count: usize, dimension: usize) -> Result<Self> {
        Self::new(per_dim_partitions(count, dimension)?, dimension)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn per_dim(&self) -> usize {
        self.per_dim
    }

    /// Total partition count `N_P`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Number of partitions sampled at least once, `M_P`.
    pub fn visited_count(&self) -> usize {
        self.visited_count
    }

    pub fn encode(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        encode_with(x, self.per_dim)
    }

    pub fn lookup(&self, index: usize) -> Result<(bool, SynthSample)> {
        let slot = self.slot(index)?;
        Ok((self.visited[slot], self.sample_at(slot)))
    }

    /// Stored sample of partition `index` as `(visited, γ_j, φ_j)`, borrowed.
    pub fn stored(&self, index: usize) -> Result<(bool, &[f64], f64)> {
        let slot = self.slot(index)?;
        let d = self.dimension;
        Ok((
            self.visited[slot],
            &self.inputs[slot * d..(slot + 1) * d],
            self.outputs[slot],
        ))
    }

    /// Applies `rule` to partition `index` with `new_sample` and returns the
    /// sample that was stored there before.
    pub fn update(
        &mut self,
        index: usize,
        new_sample: &SynthSample,
        rule: &dyn MemoryUpdateRule,
    ) -> Result<Displaced> {
        let mut displaced = Displaced {
            sample: SynthSample::zero(self.dimension),
            visited_before: false,
        };
        let mut merged = SynthSample::zero(self.dimension);
        self.update_with(index, new_sample, rule, &mut displaced, &mut merged)?;
        Ok(displaced)
    }

    /// Allocation-free [`PartitionStore::update`]: the previous sample goes
    /// to `displaced`, `merged` is scratch space for the rule. On error the
    /// store is unchanged.
    pub fn update_with(
        &mut self,
        index: usize,
        new_sample: &SynthSample,
        rule: &dyn MemoryUpdateRule,
        displaced: &mut Displaced,
        merged: &mut SynthSample,
    ) -> Result<()> {
        let slot = self.slot(index)?;
        let actual = self.encode(&new_sample.input)?;
        if actual != index {
            return Err(Error::PartitionMismatch {
                expected: index,
                actual,
            });
        }
        let d = self.dimension;
        let visited_before = self.visited[slot];
        displaced.visited_before = visited_before;
        displaced.sample.input.clear();
        displaced
            .sample
            .input
            .extend_from_slice(&self.inputs[slot * d..(slot + 1) * d]);
        displaced.sample.output = self.outputs[slot];
        rule.synthesize(&displaced.sample, visited_before, new_sample, merged);
        let merged_index = self.encode(&merged.input)?;
        if merged_index != index {
            return Err(Error::PartitionMismatch {
                expected: index,
                actual: merged_index,
            });
        }
        self.inputs[slot * d..(slot + 1) * d].copy_from_slice(&merged.input);
        self.outputs[slot] = merged.output;
        if !visited_before {
            self.visited[slot] = true;
            self.visited_count += 1;
        }
        Ok(())
    }

    /// Visited partitions in index order as `(index, γ_j, φ_j)`.
    pub fn iter_visited(&self) -> impl Iterator<Item = (usize, &[f64], f64)> + '_ {
        let d = self.dimension;
        self.visited
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(move |(slot, _)| {
                (
                    slot + 1,
                    &self.inputs[slot * d..(slot + 1) * d],
                    self.outputs[slot],
                )
            })
    }

    /// Every partition in index order as `(index, visited, γ_j, φ_j)`.
    pub fn iter_all(&self) -> impl Iterator<Item = (usize, bool, &[f64], f64)> + '_ {
        let d = self.dimension;
        (0..self.count).map(move |slot| {
            (
                slot + 1,
                self.visited[slot],
                &self.inputs[slot * d..(slot + 1) * d],
                self.outputs[slot],
            )
        })
    }

    /// Puts back what [`PartitionStore::update`] displaced.
    pub(crate) fn restore(&mut self, index: usize, displaced: &Displaced) {
        let slot = index - 1;
        let d = self.dimension;
        self.inputs[slot * d..(slot + 1) * d].copy_from_slice(&displaced.sample.input);
        self.outputs[slot] = displaced.sample.output;
        if !displaced.visited_before && self.visited[slot] {
            self.visited[slot] = false;
            self.visited_count -= 1;
        }
    }

    fn slot(&self, index: usize) -> Result<usize> {
        if index == 0 || index > self.count {
            return Err(Error::PartitionOutOfRange {
                index,
                count: self.count,
            });
        }
        Ok(index - 1)
    }

    fn sample_at(&self, slot: usize) -> SynthSample {
        let d = self.dimension;
        SynthSample::new(
            self.inputs[slot * d..(slot + 1) * d].to_vec(),
            self.outputs[slot],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn normalize_examples() {
        let norm = Normalizer::new(vec![(0.0, 10.0)]).unwrap();
        assert_eq!(norm.normalize(&[5.0]).unwrap(), vec![0.0]);
        assert_eq!(norm.normalize(&[0.0]).unwrap(), vec![-1.0]);
        assert_eq!(norm.normalize(&[10.0]).unwrap(), vec![1.0]);
        let unit = Normalizer::new(vec![(-1.0, 1.0)]).unwrap();
        assert_eq!(unit.normalize(&[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn normalize_clamps_out_of_bounds() {
        let norm = Normalizer::new(vec![(0.0, 10.0)]).unwrap();
        assert_eq!(norm.normalize(&[12.0]).unwrap(), vec![1.0]);
        assert_eq!(norm.normalize(&[-0.5]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn normalizer_rejects_degenerate_bounds() {
        assert!(Normalizer::new(vec![(1.0, 1.0)]).is_err());
        assert!(Normalizer::new(vec![(2.0, 1.0)]).is_err());
        assert!(Normalizer::new(vec![(0.0, f64::INFINITY)]).is_err());
        assert!(Normalizer::new(vec![]).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_partition(&[1.0, 1.0], 100, 2).unwrap(), 100);
        assert_eq!(encode_partition(&[-0.95, -0.95], 100, 2).unwrap(), 1);
        assert_eq!(encode_partition(&[-1.0, -1.0], 100, 2).unwrap(), 1);
        // second dimension carries stride 10
        assert_eq!(encode_partition(&[-1.0, 1.0], 100, 2).unwrap(), 91);
        assert_eq!(encode_partition(&[1.0, -1.0], 100, 2).unwrap(), 10);
    }

    #[test]
    fn encode_cells_are_closed_above() {
        // m = 10: cell 0 is [-1, -0.8], cell 1 is (-0.8, -0.6]
        assert_eq!(encode_partition(&[-0.8], 10, 1).unwrap(), 1);
        assert_eq!(encode_partition(&[-0.7999999], 10, 1).unwrap(), 2);
        assert_eq!(encode_partition(&[0.0], 10, 1).unwrap(), 5);
        assert_eq!(encode_partition(&[1e-12], 10, 1).unwrap(), 6);
    }

    #[test]
    fn encode_rejects_non_power_counts() {
        assert_eq!(
            encode_partition(&[0.0, 0.0], 99, 2),
            Err(Error::NotPerfectPower {
                count: 99,
                dimension: 2
            })
        );
        assert!(encode_partition(&[0.0, 0.0], 0, 2).is_err());
        assert_eq!(per_dim_partitions(1000, 3).unwrap(), 10);
        assert_eq!(per_dim_partitions(1, 4).unwrap(), 1);
    }

    #[test]
    fn fresh_store_lookup_is_zero() {
        let store = PartitionStore::new(10, 2).unwrap();
        assert_eq!(store.count(), 100);
        assert_eq!(store.visited_count(), 0);
        let (visited, sample) = store.lookup(37).unwrap();
        assert!(!visited);
        assert_eq!(sample, SynthSample::zero(2));
        assert!(store.lookup(0).is_err());
        assert!(store.lookup(101).is_err());
    }

    #[test]
    fn update_then_lookup() {
        let mut store = PartitionStore::new(10, 2).unwrap();
        let s1 = SynthSample::new(vec![0.05, 0.05], 1.5);
        let a = store.encode(&s1.input).unwrap();
        let d = store.update(a, &s1, &LatestSample).unwrap();
        assert_eq!(d.sample, SynthSample::zero(2));
        assert!(!d.visited_before);
        assert_eq!(store.visited_count(), 1);
        assert_eq!(store.lookup(a).unwrap(), (true, s1.clone()));

        let s2 = SynthSample::new(vec![0.15, 0.02], -2.0);
        assert_eq!(store.encode(&s2.input).unwrap(), a);
        let d = store.update(a, &s2, &LatestSample).unwrap();
        assert_eq!(d.sample, s1);
        assert!(d.visited_before);
        assert_eq!(store.visited_count(), 1);
        assert_eq!(store.lookup(a).unwrap(), (true, s2.clone()));

        let d = store.update(a, &s2, &LatestSample).unwrap();
        assert_eq!(d.sample, s2);
    }

    #[test]
    fn update_rejects_foreign_sample() {
        let mut store = PartitionStore::new(10, 2).unwrap();
        let s = SynthSample::new(vec![0.95, 0.95], 1.0);
        assert_eq!(
            store.update(1, &s, &LatestSample),
            Err(Error::PartitionMismatch {
                expected: 1,
                actual: 100
            })
        );
        assert_eq!(store.visited_count(), 0);
    }

    #[test]
    fn update_with_reports_previous_sample() {
        let mut store = PartitionStore::new(10, 2).unwrap();
        let mut displaced = Displaced {
            sample: SynthSample::zero(2),
            visited_before: true,
        };
        let mut merged = SynthSample::zero(2);
        let first = SynthSample::new(vec![0.05, 0.05], 1.5);
        let index = store.encode(&first.input).unwrap();
        store
            .update_with(index, &first, &LatestSample, &mut displaced, &mut merged)
            .unwrap();
        assert!(!displaced.visited_before);
        assert_eq!(displaced.sample, SynthSample::zero(2));

        let second = SynthSample::new(vec![0.02, 0.09], -0.5);
        store
            .update_with(index, &second, &LatestSample, &mut displaced, &mut merged)
            .unwrap();
        assert!(displaced.visited_before);
        assert_eq!(displaced.sample, first);
        let (visited, input, output) = store.stored(index).unwrap();
        assert!(visited);
        assert_eq!(input, &[0.02, 0.09][..]);
        assert_eq!(output, -0.5);
        assert_eq!(store.lookup(index).unwrap(), (true, second));
        assert_eq!(store.visited_count(), 1);
    }

    #[test]
    fn update_with_leaves_store_unchanged_on_mismatch() {
        let mut store = PartitionStore::new(4, 2).unwrap();
        let kept = SynthSample::new(vec![-0.9, -0.9], 3.0);
        let index = store.encode(&kept.input).unwrap();
        store.update(index, &kept, &LatestSample).unwrap();
        let before: Vec<_> = store
            .iter_all()
            .map(|(i, v, g, f)| (i, v, g.to_vec(), f))
            .collect();
        let mut displaced = Displaced {
            sample: SynthSample::zero(2),
            visited_before: false,
        };
        let mut merged = SynthSample::zero(2);
        let foreign = SynthSample::new(vec![0.9, 0.9], 7.0);
        assert!(store
            .update_with(index, &foreign, &LatestSample, &mut displaced, &mut merged)
            .is_err());
        let after: Vec<_> = store
            .iter_all()
            .map(|(i, v, g, f)| (i, v, g.to_vec(), f))
            .collect();
        assert_eq!(before, after);
        assert!(store.stored(0).is_err());
        assert!(store.stored(store.count() + 1).is_err());
    }

    fn stream() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0, -10.0f64..10.0), 0..300)
    }

    proptest! {
        #[test]
        fn encode_is_total_and_in_range(x in -1.0f64..=1.0, y in -1.0f64..=1.0, m in 1usize..20) {
            let idx = encode_partition(&[x, y], m * m, 2).unwrap();
            prop_assert!(idx >= 1 && idx <= m * m);
        }

        #[test]
        fn encode_matches_cell_bounds(x in -1.0f64..=1.0, m in 1usize..30) {
            let idx = encode_partition(&[x], m, 1).unwrap() - 1;
            let width = 2.0 / m as f64;
            let lo = -1.0 + idx as f64 * width;
            let hi = lo + width;
            prop_assert!(x <= hi + 1e-12);
            prop_assert!(x >= lo - 1e-12);
        }

        #[test]
        fn store_matches_last_sample_replay(samples in stream()) {
            let mut store = PartitionStore::new(10, 2).unwrap();
            let mut replay: BTreeMap<usize, (Vec<f64>, f64)> = BTreeMap::new();
            let mut last_mp = 0;
            for (i, (x, y, out)) in samples.iter().enumerate() {
                let s = SynthSample::new(vec![*x, *y], *out);
                let a = store.encode(&s.input).unwrap();
                store.update(a, &s, &LatestSample).unwrap();
                replay.insert(a, (s.input.clone(), *out));
                prop_assert!(store.visited_count() >= last_mp);
                prop_assert!(store.visited_count() <= (i + 1).min(store.count()));
                last_mp = store.visited_count();
            }
            prop_assert_eq!(store.visited_count(), replay.len());
            let stored: Vec<_> = store.iter_visited()
                .map(|(j, g, p)| (j, (g.to_vec(), p)))
                .collect();
            let expected: Vec<_> = replay.into_iter().collect();
            prop_assert_eq!(&stored, &expected);
            for (j, g, _) in store.iter_visited() {
                prop_assert_eq!(store.encode(g).unwrap(), j);
            }
            for (_, visited, g, p) in store.iter_all() {
                if !visited {
                    prop_assert!(g.iter().all(|v| *v == 0.0) && p == 0.0);
                }
            }
        }
    }
}
