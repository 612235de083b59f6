//! Digital twin tests.
//!
//! Each test compares the observed statistic with statistics computed on
//! "digital twins": offspring genotypes redrawn from the meiosis model
//! given the parents. Three variants are provided:
//!
//! * [`digital_twin_test`] redraws whole chromosomes;
//! * [`local_dtt`] and [`local_dtt_groups`] redraw one group of SNPs
//!   given the rest of the offspring haplotype;
//! * [`local_dtt_independent`] conditions on the copying states at the
//!   group boundaries, which makes the p-values of null groups jointly
//!   independent.
//!
//! All randomness comes from keyed streams, so results do not depend on
//! the number of worker threads.

mod global;
mod independent;
mod local;

pub use global::digital_twin_test;
pub use independent::{local_dtt_independent, IndependentDesign};
pub use local::{local_dtt, local_dtt_groups};

use rand::Rng;

use crate::data::{Side, TrioRecord};
use crate::error::{Error, Result};
use crate::hmm::Interval;

/// How exact ties between the observed and a twin statistic are counted.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum TiePolicy {
    /// The observed statistic takes a uniformly random rank among the
    /// twins it ties with.
    #[default]
    Randomized,
    /// Every tie counts against the observed statistic.
    Conservative,
}

/// Quantile of `t_star` among the twin statistics,
/// `(1 + #{k: t_star < t_k} + ties) / (K + 1)`.
pub fn quantile_pvalue<R: Rng + ?Sized>(
    t_star: f64,
    twins: &[f64],
    policy: TiePolicy,
    rng: &mut R,
) -> Result<f64> {
    if twins.is_empty() {
        return Err(Error::input("at least one twin statistic is needed"));
    }
    if t_star.is_nan() || twins.iter().any(|t| t.is_nan()) {
        return Err(Error::Numeric("statistic is NaN".into()));
    }
    let above = twins.iter().filter(|&&t| t > t_star).count();
    let tied = twins.iter().filter(|&&t| t == t_star).count();
    let counted = match policy {
        TiePolicy::Conservative => tied,
        TiePolicy::Randomized => rng.gen_range(0..=tied),
    };
    Ok((1 + above + counted) as f64 / (twins.len() + 1) as f64)
}

/// Settings shared by every twin test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwinTestConfig {
    /// Number of twin replicates `K`.
    pub replicates: usize,
    pub tie_policy: TiePolicy,
    pub seed: u64,
}

impl Default for TwinTestConfig {
    fn default() -> Self {
        TwinTestConfig {
            replicates: 99,
            tie_policy: TiePolicy::Randomized,
            seed: 0,
        }
    }
}

impl TwinTestConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        TwinTestConfig {
            replicates,
            seed,
            ..Self::default()
        }
    }

    pub fn with_tie_policy(mut self, tie_policy: TiePolicy) -> Self {
        self.tie_policy = tie_policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::input(
                "the number of twin replicates must be positive",
            ));
        }
        Ok(())
    }
}

/// Result of a single test.
#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub p_value: f64,
    pub t_star: f64,
    pub twin_scores: Vec<f64>,
}

/// Which haplotypes of an offspring are redrawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    /// Indexed by [`Side::index`]; `false` keeps the observed haplotype.
    pub resample: [bool; 2],
}

impl SamplingPlan {
    pub fn resamples(&self, side: Side) -> bool {
        self.resample[side.index()]
    }
}

/// Haplotypes transmitted by an ungenotyped parent are held fixed.
pub fn resolve_duos(record: &TrioRecord) -> Result<SamplingPlan> {
    let plan = SamplingPlan {
        resample: [record.mother.is_some(), record.father.is_some()],
    };
    if plan.resample == [false, false] {
        return Err(Error::input(format!(
            "record {} has no genotyped parent, nothing can be resampled",
            record.id
        )));
    }
    Ok(plan)
}

/// One group's result.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueEntry {
    pub group_index: usize,
    pub group: Interval,
    pub p_value: f64,
    pub weight: f64,
    pub replicates: usize,
    pub t_star: f64,
}

/// P-values of a partition, in partition order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PValueTable {
    pub entries: Vec<PValueEntry>,
}

impl PValueTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p_value).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.entries.len() {
            return Err(Error::input(format!(
                "{} weights for {} groups",
                weights.len(),
                self.entries.len()
            )));
        }
        for (e, &w) in self.entries.iter_mut().zip(weights) {
            e.weight = w;
        }
        Ok(self)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::data::{Phenotype, TrioDataset, TrioRecord};
    use crate::hmm::{sample_global_twin, GeneticMap, HaplotypePair, HmmParams};

    /// Random parents and offspring drawn from the model, with a pure-noise
    /// binary phenotype.
    pub fn random_dataset(seed: u64, n: usize, layout: &[(u32, usize, f64, u64)]) -> TrioDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = GeneticMap::uniform(layout).unwrap();
        let params = HmmParams::default();
        let p = map.len();
        let strand = |rng: &mut ChaCha8Rng| {
            (0..p)
                .map(|_| u8::from(rng.gen::<f64>() < 0.4))
                .collect::<Vec<u8>>()
        };
        let mut records = Vec::new();
        for i in 0..n {
            let mother = HaplotypePair::new(strand(&mut rng), strand(&mut rng)).unwrap();
            let father = HaplotypePair::new(strand(&mut rng), strand(&mut rng)).unwrap();
            let (x_m, _) = sample_global_twin(&mother, &map, &params, &mut rng).unwrap();
            let (x_f, _) = sample_global_twin(&father, &map, &params, &mut rng).unwrap();
            records.push(
                TrioRecord::new(format!("id{i}"), x_m, x_f, Some(mother), Some(father)).unwrap(),
            );
        }
        let y = (0..n).map(|_| u8::from(rng.gen::<bool>())).collect();
        TrioDataset::new(records, Phenotype::binary(y).unwrap(), map, params).unwrap()
    }
}
