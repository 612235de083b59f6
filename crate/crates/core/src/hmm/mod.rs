//! Haldane's meiosis model as a two-state hidden Markov model.
//!
//! The hidden state at each site says which of the parent's two haplotypes
//! the transmitted allele was copied from. Crossovers follow a Poisson
//! process in genetic distance, so two sites `d` Morgans apart share their
//! state with probability `(1 + exp(-2d)) / 2`. Each copied allele is
//! flipped by a de novo mutation with probability `epsilon`.
//!
//! Sites on different chromosomes are treated as infinitely far apart,
//! which makes a single chain over the whole map equivalent to independent
//! chains per chromosome.

mod forward_backward;
pub(crate) mod sampling;

pub use forward_backward::{compute_fb_weights, WeightTable};
pub use sampling::{
    posterior_mean_segment, sample_ancestry_posterior, sample_global_twin, sample_global_twin_at,
    sample_local_twin, sample_modified_local_twin, LocalTwinSampler,
};

use crate::error::{Error, Result};

/// Probability that two sites `d` Morgans apart are copied from the same
/// parental haplotype (an even number of crossovers between them).
pub fn transition_prob(d: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::input(format!(
            "genetic distance must be >= 0, got {d}"
        )));
    }
    Ok(stay_prob(d))
}

#[inline]
pub(crate) fn stay_prob(d: f64) -> f64 {
    if d.is_infinite() {
        0.5
    } else {
        0.5 * (1.0 + (-2.0 * d).exp())
    }
}

/// Transition kernel for distance `d`: `[[same, switch], [switch, same]]`.
#[inline]
pub(crate) fn kernel(d: f64) -> [[f64; 2]; 2] {
    let s = stay_prob(d);
    [[s, 1.0 - s], [1.0 - s, s]]
}

/// Which of a parent's two haplotypes a site was copied from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strand {
    A,
    B,
}

impl Strand {
    pub fn other(self) -> Strand {
        match self {
            Strand::A => Strand::B,
            Strand::B => Strand::A,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Strand::A => 0,
            Strand::B => 1,
        }
    }

    #[inline]
    pub fn from_index(i: usize) -> Strand {
        if i == 0 {
            Strand::A
        } else {
            Strand::B
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub id: String,
    pub chromosome: u32,
    pub physical_pos: u64,
    /// Cumulative genetic position in Morgans.
    pub genetic_pos: f64,
}

/// Contiguous block of site indices `start..end` belonging to one chromosome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChromosomeRange {
    pub chromosome: u32,
    pub start: usize,
    pub end: usize,
}

impl ChromosomeRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.start..self.end).contains(&j)
    }
}

/// Ordered marker map. Genetic positions are stored in Morgans; map files in
/// centiMorgans are converted when loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneticMap {
    sites: Vec<Site>,
    chromosomes: Vec<ChromosomeRange>,
    chrom_of_site: Vec<u32>,
}

impl GeneticMap {
    pub fn new(sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::input("genetic map has no sites"));
        }
        let mut chromosomes: Vec<ChromosomeRange> = Vec::new();
        for (j, site) in sites.iter().enumerate() {
            if !site.genetic_pos.is_finite() {
                return Err(Error::input(format!(
                    "site {} has non-finite genetic position",
                    site.id
                )));
            }
            match chromosomes.last_mut() {
                Some(last) if last.chromosome == site.chromosome => {
                    let prev = &sites[j - 1];
                    if site.genetic_pos < prev.genetic_pos {
                        return Err(Error::input(format!(
                            "genetic position decreases at site {} on chromosome {}",
                            site.id, site.chromosome
                        )));
                    }
                    if site.physical_pos < prev.physical_pos {
                        return Err(Error::input(format!(
                            "physical position decreases at site {} on chromosome {}",
                            site.id, site.chromosome
                        )));
                    }
                    last.end = j + 1;
                }
                _ => {
                    if chromosomes.iter().any(|c| c.chromosome == site.chromosome) {
                        return Err(Error::input(format!(
                            "chromosome {} appears in two separate blocks (site {})",
                            site.chromosome, site.id
                        )));
                    }
                    chromosomes.push(ChromosomeRange {
                        chromosome: site.chromosome,
                        start: j,
                        end: j + 1,
                    });
                }
            }
        }
        let mut chrom_of_site = vec![0u32; sites.len()];
        for (ci, c) in chromosomes.iter().enumerate() {
            chrom_of_site[c.start..c.end].fill(ci as u32);
        }
        Ok(GeneticMap {
            sites,
            chromosomes,
            chrom_of_site,
        })
    }

    /// Evenly spaced map: for each `(chromosome, n_sites, morgans, bp)` the
    /// sites are spread uniformly over `[0, morgans]` and `[1, bp]`.
    pub fn uniform(layout: &[(u32, usize, f64, u64)]) -> Result<Self> {
        let mut sites = Vec::new();
        for &(chromosome, n, morgans, bp) in layout {
            for k in 0..n {
                let frac = if n > 1 {
                    k as f64 / (n - 1) as f64
                } else {
                    0.0
                };
                sites.push(Site {
                    id: format!("chr{chromosome}_{}", k + 1),
                    chromosome,
                    physical_pos: 1 + (frac * (bp.saturating_sub(1)) as f64).round() as u64,
                    genetic_pos: frac * morgans,
                });
            }
        }
        GeneticMap::new(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, j: usize) -> &Site {
        &self.sites[j]
    }

    pub fn chromosomes(&self) -> &[ChromosomeRange] {
        &self.chromosomes
    }

    pub fn chromosome_range(&self, chromosome: u32) -> Option<ChromosomeRange> {
        self.chromosomes
            .iter()
            .copied()
            .find(|c| c.chromosome == chromosome)
    }

    pub fn range_of(&self, j: usize) -> ChromosomeRange {
        self.chromosomes[self.chrom_of_site[j] as usize]
    }

    pub fn same_chromosome(&self, i: usize, k: usize) -> bool {
        self.chrom_of_site[i] == self.chrom_of_site[k]
    }

    /// `d_j`: distance from site `j - 1` to site `j`; infinite at the first
    /// site of every chromosome.
    pub fn distance(&self, j: usize) -> f64 {
        if j == 0 || !self.same_chromosome(j - 1, j) {
            f64::INFINITY
        } else {
            self.sites[j].genetic_pos - self.sites[j - 1].genetic_pos
        }
    }

    /// Genetic distance between any two sites (infinite across chromosomes).
    pub fn distance_between(&self, i: usize, k: usize) -> f64 {
        if self.same_chromosome(i, k) {
            (self.sites[k].genetic_pos - self.sites[i].genetic_pos).abs()
        } else {
            f64::INFINITY
        }
    }

    /// Total map length of a chromosome in Morgans.
    pub fn length_morgans(&self, range: ChromosomeRange) -> f64 {
        self.sites[range.end - 1].genetic_pos - self.sites[range.start].genetic_pos
    }
}

/// A parent's two haplotypes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaplotypePair {
    pub strand_a: Vec<u8>,
    pub strand_b: Vec<u8>,
}

impl HaplotypePair {
    pub fn new(strand_a: Vec<u8>, strand_b: Vec<u8>) -> Result<Self> {
        if strand_a.len() != strand_b.len() {
            return Err(Error::input(format!(
                "haplotype strands differ in length ({} vs {})",
                strand_a.len(),
                strand_b.len()
            )));
        }
        if strand_a.iter().chain(&strand_b).any(|&x| x > 1) {
            return Err(Error::input("haplotype alleles must be 0 or 1"));
        }
        Ok(HaplotypePair { strand_a, strand_b })
    }

    pub fn len(&self) -> usize {
        self.strand_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strand_a.is_empty()
    }

    #[inline]
    pub fn strand(&self, s: Strand) -> &[u8] {
        match s {
            Strand::A => &self.strand_a,
            Strand::B => &self.strand_b,
        }
    }

    #[inline]
    pub fn allele(&self, s: Strand, j: usize) -> u8 {
        self.strand(s)[j]
    }
}

/// Latent copying states for one transmitted haplotype.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AncestryVector {
    pub states: Vec<Strand>,
}

impl AncestryVector {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Alleles obtained by copying `parents` without mutation.
    pub fn copy_from(&self, parents: &HaplotypePair) -> Vec<u8> {
        self.states
            .iter()
            .enumerate()
            .map(|(j, &s)| parents.allele(s, j))
            .collect()
    }
}

/// How crossover points are placed inside a group by the modified local
/// twin sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PointWeighting {
    /// Weight interval `j` by `(1 + exp(-2 d_j)) / 2`.
    #[default]
    StayProbability,
    /// Weight interval `j` by `d_j`.
    Distance,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HmmParams {
    /// De novo mutation probability per site and meiosis.
    pub epsilon: f64,
    pub point_weighting: PointWeighting,
}

impl Default for HmmParams {
    fn default() -> Self {
        HmmParams {
            epsilon: 1e-8,
            point_weighting: PointWeighting::StayProbability,
        }
    }
}

impl HmmParams {
    pub fn with_epsilon(epsilon: f64) -> Result<Self> {
        let p = HmmParams {
            epsilon,
            ..HmmParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::input(format!(
                "epsilon must lie in [0, 0.5), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn emission(&self, observed: u8, copied: u8) -> f64 {
        if observed == copied {
            1.0 - self.epsilon
        } else {
            self.epsilon
        }
    }
}

/// Inclusive block of site indices `first..=last`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub first: usize,
    pub last: usize,
}

impl Interval {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first > last {
            return Err(Error::input(format!(
                "interval start {first} exceeds end {last}"
            )));
        }
        Ok(Interval { first, last })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.first..=self.last).contains(&j)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    /// Checks that the interval lies inside the map and on one chromosome.
    pub fn check_within(&self, map: &GeneticMap) -> Result<ChromosomeRange> {
        if self.last >= map.len() {
            return Err(Error::input(format!(
                "interval {}..={} exceeds the {} mapped sites",
                self.first,
                self.last,
                map.len()
            )));
        }
        if !map.same_chromosome(self.first, self.last) {
            return Err(Error::input(format!(
                "interval {}..={} spans a chromosome boundary",
                self.first, self.last
            )));
        }
        Ok(map.range_of(self.first))
    }
}

pub(crate) fn check_lengths(
    map: &GeneticMap,
    parents: &HaplotypePair,
    haplotype: Option<&[u8]>,
) -> Result<()> {
    if parents.len() != map.len() {
        return Err(Error::input(format!(
            "parental haplotypes have {} sites but the map has {}",
            parents.len(),
            map.len()
        )));
    }
    if let Some(h) = haplotype {
        if h.len() != map.len() {
            return Err(Error::input(format!(
                "haplotype has {} sites but the map has {}",
                h.len(),
                map.len()
            )));
        }
        if h.iter().any(|&x| x > 1) {
            return Err(Error::input("haplotype alleles must be 0 or 1"));
        }
    }
    Ok(())
}
