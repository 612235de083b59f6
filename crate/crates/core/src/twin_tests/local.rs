use rayon::prelude::*;

use super::{quantile_pvalue, resolve_duos, PValueEntry, PValueTable, TestOutcome, TwinTestConfig};
use crate::data::GenotypeMatrix;
use crate::data::{GroupPartition, Side, TrioDataset};
use crate::error::Result;
use crate::hmm::{Interval, LocalTwinSampler};
use crate::rng::{Domain, Streams};
use crate::statistics::{ColumnBlock, Statistic};

type SamplerLookup<'a> = dyn Fn(usize, Side) -> Option<&'a LocalTwinSampler> + Sync + 'a;

fn run_group(
    data: &TrioDataset,
    x: &GenotypeMatrix,
    group: Interval,
    sampler: &SamplerLookup<'_>,
    stat: &dyn Statistic,
    config: &TwinTestConfig,
) -> Result<TestOutcome> {
    let tested: Vec<usize> = group.indices().collect();
    let cols = stat.relevant_columns(&tested);
    let prepared = stat.prepare(x, &data.phenotype, &tested)?;
    let t_star = prepared.score(&ColumnBlock::from_matrix(x, &cols))?;

    let n = data.n();
    let streams = Streams::new(config.seed);
    let twin_scores = (0..config.replicates)
        .into_par_iter()
        .map(|k| {
            let mut block = ColumnBlock::zeros(n, cols.clone());
            for (i, rec) in data.records.iter().enumerate() {
                for side in Side::BOTH {
                    match (sampler(i, side), rec.parent(side)) {
                        (Some(s), Some(parent)) => {
                            let mut rng = streams.stream(
                                Domain::LocalTwin,
                                [i as u64, side.index() as u64, k as u64, group.first as u64],
                            );
                            let twin =
                                s.sample_at(parent, &data.map, &data.params, &cols, &mut rng)?;
                            for (c, a) in twin.into_iter().enumerate() {
                                block.add(i, c, a as f64);
                            }
                        }
                        _ => {
                            let hap = rec.haplotype(side);
                            for (c, &j) in cols.iter().enumerate() {
                                block.add(i, c, hap[j] as f64);
                            }
                        }
                    }
                }
            }
            prepared.score(&block)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rng = streams.stream(Domain::Ties, [2, group.first as u64, group.last as u64, 0]);
    let p_value = quantile_pvalue(t_star, &twin_scores, config.tie_policy, &mut rng)?;
    Ok(TestOutcome {
        p_value,
        t_star,
        twin_scores,
    })
}

/// Tests one group by redrawing it given the rest of each offspring
/// haplotype.
pub fn local_dtt(
    data: &TrioDataset,
    group: Interval,
    stat: &dyn Statistic,
    config: &TwinTestConfig,
) -> Result<TestOutcome> {
    config.validate()?;
    stat.check(&data.phenotype, data.p())?;
    group.check_within(&data.map)?;
    let samplers = data
        .records
        .par_iter()
        .map(|rec| {
            let plan = resolve_duos(rec)?;
            let mut out: [Option<LocalTwinSampler>; 2] = [None, None];
            for side in Side::BOTH {
                if let (true, Some(parent)) = (plan.resamples(side), rec.parent(side)) {
                    out[side.index()] = Some(LocalTwinSampler::new(
                        rec.haplotype(side),
                        parent,
                        &data.map,
                        &data.params,
                        group,
                    )?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let x = data.genotype_matrix();
    let lookup = |i: usize, side: Side| samplers[i][side.index()].as_ref();
    run_group(data, &x, group, &lookup, stat, config)
}

/// [`local_dtt`] for every group of a partition, sharing one
/// forward-backward sweep per haplotype.
pub fn local_dtt_groups(
    data: &TrioDataset,
    partition: &GroupPartition,
    stat: &dyn Statistic,
    config: &TwinTestConfig,
) -> Result<PValueTable> {
    config.validate()?;
    stat.check(&data.phenotype, data.p())?;
    for g in partition.groups() {
        g.check_within(&data.map)?;
    }
    let samplers = data
        .records
        .par_iter()
        .map(|rec| {
            let plan = resolve_duos(rec)?;
            let mut out: [Option<Vec<LocalTwinSampler>>; 2] = [None, None];
            for side in Side::BOTH {
                if let (true, Some(parent)) = (plan.resamples(side), rec.parent(side)) {
                    out[side.index()] = Some(LocalTwinSampler::for_groups(
                        rec.haplotype(side),
                        parent,
                        &data.map,
                        &data.params,
                        partition.groups(),
                    )?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let x = data.genotype_matrix();
    let entries = partition
        .groups()
        .par_iter()
        .enumerate()
        .map(|(g, &group)| {
            let lookup = |i: usize, side: Side| samplers[i][side.index()].as_ref().map(|v| &v[g]);
            let out = run_group(data, &x, group, &lookup, stat, config)?;
            Ok(PValueEntry {
                group_index: g,
                group,
                p_value: out.p_value,
                weight: 0.0,
                replicates: config.replicates,
                t_star: out.t_star,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PValueTable { entries })
}
