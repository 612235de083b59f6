use rayon::prelude::*;

use super::{quantile_pvalue, resolve_duos, TestOutcome, TwinTestConfig};
use crate::data::{Side, TrioDataset};
use crate::error::{Error, Result};
use crate::hmm::sampling::SiteTrack;
use crate::rng::{Domain, Streams};
use crate::statistics::{ColumnBlock, Statistic};

/// Tests whether a chromosome carries signal by redrawing both transmitted
/// haplotypes of every offspring over the whole chromosome.
pub fn digital_twin_test(
    data: &TrioDataset,
    chromosome: u32,
    stat: &dyn Statistic,
    config: &TwinTestConfig,
) -> Result<TestOutcome> {
    config.validate()?;
    stat.check(&data.phenotype, data.p())?;
    let chrom = data
        .map
        .chromosome_range(chromosome)
        .ok_or_else(|| Error::input(format!("chromosome {chromosome} is not in the map")))?;
    data.params.validate()?;
    let plans = data
        .records
        .iter()
        .map(resolve_duos)
        .collect::<Result<Vec<_>>>()?;
    let tested: Vec<usize> = (chrom.start..chrom.end).collect();
    let cols = stat.relevant_columns(&tested);
    let x = data.genotype_matrix();
    let prepared = stat.prepare(&x, &data.phenotype, &tested)?;
    let t_star = prepared.score(&ColumnBlock::from_matrix(&x, &cols))?;

    let n = data.n();
    let track = SiteTrack::new(&data.map, &cols);
    let streams = Streams::new(config.seed);
    let twin_scores = (0..config.replicates)
        .into_par_iter()
        .map(|k| {
            // Rows are filled first and transposed once into the column block.
            let c = cols.len();
            let mut rows = vec![0u8; n * c];
            let mut twin = Vec::with_capacity(c);
            for (i, (rec, plan)) in data.records.iter().zip(&plans).enumerate() {
                let row = &mut rows[i * c..(i + 1) * c];
                for side in Side::BOTH {
                    match rec.parent(side) {
                        Some(parent) if plan.resamples(side) => {
                            let mut rng = streams.stream(
                                Domain::GlobalTwin,
                                [i as u64, side.index() as u64, k as u64, chromosome as u64],
                            );
                            twin.clear();
                            track.sample(parent, data.params.epsilon, &mut rng, &mut twin);
                            row.iter_mut().zip(&twin).for_each(|(g, &a)| *g += a);
                        }
                        _ => {
                            let hap = rec.haplotype(side);
                            row.iter_mut().zip(&cols).for_each(|(g, &j)| *g += hap[j]);
                        }
                    }
                }
            }
            let mut block = ColumnBlock::zeros(n, cols.clone());
            for k in 0..c {
                let col = block.column_mut(k);
                for (i, v) in col.iter_mut().enumerate() {
                    *v = rows[i * c + k] as f64;
                }
            }
            prepared.score(&block)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rng = streams.stream(Domain::Ties, [1, chromosome as u64, 0, 0]);
    let p_value = quantile_pvalue(t_star, &twin_scores, config.tie_policy, &mut rng)?;
    Ok(TestOutcome {
        p_value,
        t_star,
        twin_scores,
    })
}
