use rayon::prelude::*;

use super::{quantile_pvalue, resolve_duos, PValueEntry, PValueTable, TwinTestConfig};
use crate::data::{GenotypeMatrix, GroupPartition, Side, TrioDataset};
use crate::error::{Error, Result};
use crate::hmm::{
    posterior_mean_segment, sample_ancestry_posterior, sample_modified_local_twin, Strand,
};
use crate::rng::{Domain, Streams};
use crate::statistics::{ColumnBlock, Statistic};

const MATCH_TOL: f64 = 1e-6;

/// Copying states at the first and last site of a group.
type Endpoints = (Strand, Strand);

/// Everything the independent-p-value test fixes before drawing twins:
/// the sampled copying states at every group boundary and the masked
/// genotype matrix used outside the tested group.
#[derive(Clone, Debug)]
pub struct IndependentDesign {
    partition: GroupPartition,
    /// `[individual][side]`: endpoint states of every group, or `None` when
    /// the side is held fixed.
    boundaries: Vec<[Option<Vec<Endpoints>>; 2]>,
    masked: GenotypeMatrix,
    match_fraction: f64,
    streams: Streams,
}

impl IndependentDesign {
    pub fn build(data: &TrioDataset, partition: &GroupPartition, seed: u64) -> Result<Self> {
        for g in partition.groups() {
            g.check_within(&data.map)?;
        }
        let streams = Streams::new(seed);
        let p = data.p();
        let rows = data
            .records
            .par_iter()
            .enumerate()
            .map(|(i, rec)| {
                let plan = resolve_duos(rec)?;
                let mut bounds: [Option<Vec<Endpoints>>; 2] = [None, None];
                let mut row = vec![0.0; p];
                let mut matched = 0usize;
                for side in Side::BOTH {
                    let hap = rec.haplotype(side);
                    let mut masked: Vec<f64> = hap.iter().map(|&a| a as f64).collect();
                    if let (true, Some(parent)) = (plan.resamples(side), rec.parent(side)) {
                        let mut rng = streams
                            .stream(Domain::Posterior, [i as u64, side.index() as u64, 0, 0]);
                        let u = sample_ancestry_posterior(
                            hap,
                            parent,
                            &data.map,
                            &data.params,
                            &mut rng,
                        )?;
                        let mut b = Vec::with_capacity(partition.len());
                        for &g in partition.groups() {
                            let ends = (u.states[g.first], u.states[g.last]);
                            if ends.0 != ends.1 {
                                let mean = posterior_mean_segment(
                                    parent,
                                    ends,
                                    &data.map,
                                    &data.params,
                                    g,
                                )?;
                                masked[g.first..=g.last].copy_from_slice(&mean);
                            }
                            b.push(ends);
                        }
                        bounds[side.index()] = Some(b);
                    }
                    for (j, (m, &a)) in masked.iter().zip(hap).enumerate() {
                        row[j] += m;
                        if (m - a as f64).abs() <= MATCH_TOL {
                            matched += 1;
                        }
                    }
                }
                Ok((bounds, row, matched))
            })
            .collect::<Result<Vec<_>>>()?;

        let n = data.n();
        let mut masked = GenotypeMatrix::zeros(n, p);
        let mut boundaries = Vec::with_capacity(n);
        let mut matched = 0usize;
        for (i, (bounds, row, m)) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                masked.set(i, j, v);
            }
            boundaries.push(bounds);
            matched += m;
        }
        Ok(IndependentDesign {
            partition: partition.clone(),
            boundaries,
            masked,
            match_fraction: matched as f64 / (2 * n * p).max(1) as f64,
            streams,
        })
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    /// Masked offspring genotypes, summed over the two haplotypes.
    pub fn masked(&self) -> &GenotypeMatrix {
        &self.masked
    }

    /// Fraction of haplotype entries whose masked value equals the observed
    /// allele.
    pub fn match_fraction(&self) -> f64 {
        self.match_fraction
    }

    /// Sampled copying states at the two ends of group `g`.
    pub fn boundary_states(&self, i: usize, side: Side, g: usize) -> Option<(Strand, Strand)> {
        self.boundaries[i][side.index()].as_ref().map(|b| b[g])
    }

    /// Whether the haplotype has an odd number of crossovers in group `g`
    /// under the sampled copying states, i.e. whether its twins vary.
    pub fn is_flagged(&self, i: usize, side: Side, g: usize) -> bool {
        self.boundary_states(i, side, g)
            .is_some_and(|(a, b)| a != b)
    }

    /// One twin of the haplotype segment over group `g`, with the copying
    /// states it was drawn from (`None` when the observed segment is kept).
    pub fn twin_segment(
        &self,
        data: &TrioDataset,
        i: usize,
        side: Side,
        g: usize,
        replicate: usize,
    ) -> Result<(Vec<u8>, Option<Vec<Strand>>)> {
        let group = self.partition.groups()[g];
        let rec = &data.records[i];
        match (self.boundary_states(i, side, g), rec.parent(side)) {
            (Some(ends), Some(parent)) if ends.0 != ends.1 => {
                let mut rng = self.streams.stream(
                    Domain::ModifiedTwin,
                    [i as u64, side.index() as u64, replicate as u64, g as u64],
                );
                let (alleles, states) = sample_modified_local_twin(
                    ends,
                    parent,
                    &data.map,
                    &data.params,
                    group,
                    &mut rng,
                )?;
                Ok((alleles, Some(states)))
            }
            _ => Ok((rec.haplotype(side)[group.first..=group.last].to_vec(), None)),
        }
    }

    /// Twin genotypes of group `g` at `cols`, summed over both haplotypes.
    pub fn twin_block(
        &self,
        data: &TrioDataset,
        g: usize,
        cols: &[usize],
        replicate: usize,
    ) -> Result<ColumnBlock> {
        let group = self.partition.groups()[g];
        if cols.iter().any(|&j| !group.contains(j)) {
            return Err(Error::input("twin columns must lie inside the group"));
        }
        let mut block = ColumnBlock::zeros(data.n(), cols.to_vec());
        for (i, rec) in data.records.iter().enumerate() {
            for side in Side::BOTH {
                if self.is_flagged(i, side, g) {
                    let (seg, _) = self.twin_segment(data, i, side, g, replicate)?;
                    for (c, &j) in cols.iter().enumerate() {
                        block.add(i, c, seg[j - group.first] as f64);
                    }
                } else {
                    let hap = rec.haplotype(side);
                    for (c, &j) in cols.iter().enumerate() {
                        block.add(i, c, hap[j] as f64);
                    }
                }
            }
        }
        Ok(block)
    }

    /// The full matrix the statistic of group `g` sees: masked values
    /// outside the group and `block` inside it.
    pub fn statistic_input(&self, g: usize, block: &ColumnBlock) -> GenotypeMatrix {
        let group = self.partition.groups()[g];
        let mut x = self.masked.clone();
        for j in group.indices() {
            x.column_mut(j).fill(f64::NAN);
        }
        for (c, &j) in block.columns().iter().enumerate() {
            x.column_mut(j).copy_from_slice(block.column(c));
        }
        x
    }

    /// Runs the test for every group.
    pub fn run(
        &self,
        data: &TrioDataset,
        stat: &dyn Statistic,
        config: &TwinTestConfig,
    ) -> Result<PValueTable> {
        config.validate()?;
        stat.check(&data.phenotype, data.p())?;
        let truth = data.genotype_matrix();
        let entries = self
            .partition
            .groups()
            .par_iter()
            .enumerate()
            .map(|(g, &group)| {
                let tested: Vec<usize> = group.indices().collect();
                let cols = stat.relevant_columns(&tested);
                let prepared = stat.prepare(&self.masked, &data.phenotype, &tested)?;
                let t_star = prepared.score(&ColumnBlock::from_matrix(&truth, &cols))?;
                let twins = (0..config.replicates)
                    .into_par_iter()
                    .map(|k| prepared.score(&self.twin_block(data, g, &cols, k)?))
                    .collect::<Result<Vec<f64>>>()?;
                let mut rng = self.streams.stream(Domain::Ties, [3, g as u64, 0, 0]);
                let p_value = quantile_pvalue(t_star, &twins, config.tie_policy, &mut rng)?;
                Ok(PValueEntry {
                    group_index: g,
                    group,
                    p_value,
                    weight: 0.0,
                    replicates: config.replicates,
                    t_star,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PValueTable { entries })
    }
}

/// Local digital twin test whose p-values are jointly independent across
/// null groups.
pub fn local_dtt_independent(
    data: &TrioDataset,
    partition: &GroupPartition,
    stat: &dyn Statistic,
    config: &TwinTestConfig,
) -> Result<PValueTable> {
    config.validate()?;
    IndependentDesign::build(data, partition, config.seed)?.run(data, stat, config)
}
