//! End-to-end analyses built from the other modules: fitting the external
//! model, localizing causal groups, and the two demonstrations of how
//! population structure misleads association tests.

use rand::seq::SliceRandom;

use crate::data::{GroupPartition, Side, TrioDataset};
use crate::error::{Error, Result};
use crate::hmm::sample_global_twin;
use crate::multiple_testing::{
    accumulation_test, benjamini_hochberg, bonferroni, selective_seqstep, DiscoverySet, Procedure,
};
use crate::rng::{Domain, Streams};
use crate::simulator::{
    exact_permutation_pvalue, make_confounded_example, permutation_test, simulate_study,
    MixingDesign, StudySpec,
};
use crate::statistics::{
    fit_penalized, group_weights, order_by_weight, tdt_analytic, Family, FittedModel, GwasDataset,
    LambdaPath, LossStatistic, TdtStatistic,
};
use crate::twin_tests::{
    digital_twin_test, local_dtt_independent, PValueTable, TestOutcome, TiePolicy, TwinTestConfig,
};

/// Penalty path and cross-validation folds for the external model.
#[derive(Clone, Debug, PartialEq)]
pub struct LassoSettings {
    pub path: LambdaPath,
    pub folds: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings {
            path: LambdaPath::default(),
            folds: 5,
        }
    }
}

/// Cross-validated penalized regression on the external study.
pub fn fit_external(
    gwas: &GwasDataset,
    settings: &LassoSettings,
    seed: u64,
) -> Result<FittedModel> {
    let family = Family::for_phenotype(gwas.phenotype().kind());
    let mut rng = Streams::new(seed).stream(Domain::CrossValidation, [0, 0, 0, 0]);
    fit_penalized(gwas, family, &settings.path, settings.folds, &mut rng)
}

/// Runs `procedure` on `pvals`; ordered procedures visit hypotheses in
/// `order` and use `c` as their threshold parameter.
pub fn discoveries(
    procedure: Procedure,
    pvals: &[f64],
    order: &[usize],
    alpha: f64,
    c: Option<f64>,
) -> Result<DiscoverySet> {
    match procedure {
        Procedure::Bonferroni => bonferroni(pvals, alpha),
        Procedure::BenjaminiHochberg => benjamini_hochberg(pvals, alpha),
        Procedure::AccumulationTest | Procedure::SelectiveSeqStep => {
            if order.len() != pvals.len() {
                return Err(Error::input("order must cover every hypothesis"));
            }
            let ordered: Vec<f64> = order.iter().map(|&i| pvals[i]).collect();
            let mut set = if procedure == Procedure::AccumulationTest {
                accumulation_test(&ordered, alpha, c.unwrap_or(2.0))?
            } else {
                selective_seqstep(&ordered, alpha, c.unwrap_or(0.5))?
            };
            set.rejected = set.rejected.iter().map(|&k| order[k]).collect();
            set.rejected.sort_unstable();
            Ok(set)
        }
    }
}

/// Independent local p-values with the loss statistic of `model`, group
/// weights from its coefficients, and discoveries of `procedure`.
pub fn localize(
    data: &TrioDataset,
    partition: &GroupPartition,
    model: &FittedModel,
    procedure: Procedure,
    alpha: f64,
    c: Option<f64>,
    config: &TwinTestConfig,
) -> Result<(PValueTable, DiscoverySet)> {
    let stat = LossStatistic::new(model.clone());
    let weights = group_weights(model, partition);
    let table = local_dtt_independent(data, partition, &stat, config)?.with_weights(&weights)?;
    let set = discoveries(
        procedure,
        &table.p_values(),
        &order_by_weight(&weights),
        alpha,
        c,
    )?;
    Ok((table, set))
}

/// Fraction of rejected groups that contain no causal site (0 when nothing
/// is rejected).
pub fn false_discovery_proportion(
    set: &DiscoverySet,
    partition: &GroupPartition,
    causal: &[usize],
) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let false_ones = set
        .rejected
        .iter()
        .filter(|&&g| !causal.iter().any(|&j| partition.groups()[g].contains(j)))
        .count();
    false_ones as f64 / set.len() as f64
}

/// Per-SNP analytic TDT p-values.
pub fn per_snp_tdt(data: &TrioDataset) -> Result<Vec<f64>> {
    (0..data.p())
        .map(|j| tdt_analytic(&data.records, &data.phenotype, j).map(|c| c.p_value))
        .collect()
}

/// Settings of the admixed-population demonstration.
#[derive(Clone, Debug)]
pub struct AdmixedDemoSpec {
    pub study: StudySpec,
    /// Genome-wide significance threshold for the per-SNP TDT.
    pub tdt_threshold: f64,
    /// Width of one map bin in Morgans. The default 0.1 cM makes ten bins
    /// about one megabase.
    pub bin_morgans: f64,
    /// TDT rejections more than this many bins from the causal site count
    /// as spurious far discoveries.
    pub far_bins: f64,
    pub groups_per_chromosome: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seqstep_c: f64,
    pub lasso: LassoSettings,
}

impl Default for AdmixedDemoSpec {
    fn default() -> Self {
        AdmixedDemoSpec {
            study: StudySpec {
                n_trios: 1000,
                n_external: 2000,
                layout: vec![(1, 400, 1.0, 63_000_000)],
                design: MixingDesign::AdmixedF2,
                fst: 0.3,
                n_causal: 1,
                h2: 0.18,
                prevalence: 0.2,
                ..StudySpec::default()
            },
            tdt_threshold: 5e-8,
            bin_morgans: 0.001,
            far_bins: 10.0,
            groups_per_chromosome: 20,
            replicates: 99,
            alpha: 0.2,
            seqstep_c: 0.5,
            lasso: LassoSettings {
                path: LambdaPath::Auto {
                    count: 30,
                    min_ratio: 0.01,
                },
                folds: 3,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdmixedDemoOutcome {
    pub causal: usize,
    pub tdt_pvalues: Vec<f64>,
    /// Sites rejected by the per-SNP TDT.
    pub tdt_rejections: Vec<usize>,
    /// TDT rejections more than `far_bins` bins from the causal site.
    pub far_rejections: Vec<usize>,
    pub partition: GroupPartition,
    pub local: PValueTable,
    pub discoveries: DiscoverySet,
    pub false_discovery_proportion: f64,
}

/// Simulates an admixed cohort with one causal site and contrasts the
/// per-SNP TDT with independent local twin p-values combined by Selective
/// SeqStep.
pub fn run_admixed_demo(spec: &AdmixedDemoSpec, seed: u64) -> Result<AdmixedDemoOutcome> {
    let study = simulate_study(&spec.study, seed)?;
    let data = &study.dataset;
    let causal = *study
        .causal
        .first()
        .ok_or_else(|| Error::input("the demonstration needs a causal site"))?;
    let tdt_pvalues = per_snp_tdt(data)?;
    let tdt_rejections: Vec<usize> = (0..data.p())
        .filter(|&j| tdt_pvalues[j] <= spec.tdt_threshold)
        .collect();
    let far_rejections = tdt_rejections
        .iter()
        .copied()
        .filter(|&j| {
            !data.map.same_chromosome(j, causal)
                || data.map.distance_between(j, causal) > spec.far_bins * spec.bin_morgans
        })
        .collect();

    let gwas = study
        .external
        .as_ref()
        .ok_or_else(|| Error::input("the demonstration needs an external study"))?;
    let model = fit_external(gwas, &spec.lasso, seed)?;
    let partition = GroupPartition::equal_count(&data.map, spec.groups_per_chromosome)?;
    let config = TwinTestConfig::new(spec.replicates, seed);
    let (local, discoveries) = localize(
        data,
        &partition,
        &model,
        Procedure::SelectiveSeqStep,
        spec.alpha,
        Some(spec.seqstep_c),
        &config,
    )?;
    let fdp = false_discovery_proportion(&discoveries, &partition, &study.causal);
    Ok(AdmixedDemoOutcome {
        causal,
        tdt_pvalues,
        tdt_rejections,
        far_rejections,
        partition,
        local,
        discoveries,
        false_discovery_proportion: fdp,
    })
}

#[derive(Clone, Debug)]
pub struct ConfoundedDemoOutcome {
    pub dataset: TrioDataset,
    /// Subpopulation label of each subject (1 or 2).
    pub population: Vec<u8>,
    pub genotype: Vec<f64>,
    /// The genotype column after one random permutation.
    pub permuted: Vec<f64>,
    /// One digital twin of the genotype column.
    pub twin: Vec<f64>,
    pub permutation_exact: f64,
    pub permutation_monte_carlo: f64,
    pub dtt: TestOutcome,
}

/// The eight-subject example in which population structure alone creates a
/// perfect association: the permutation test rejects and the twin test
/// cannot.
pub fn run_confounded_demo(replicates: usize, seed: u64) -> Result<ConfoundedDemoOutcome> {
    let data = make_confounded_example();
    let x = data.genotype_matrix();
    let genotype = x.column(0).to_vec();
    let streams = Streams::new(seed);
    let mut rng = streams.stream(Domain::Permutation, [0, 0, 0, 0]);
    let permutation_monte_carlo =
        permutation_test(&genotype, &data.phenotype, replicates, &mut rng)?;
    let permutation_exact = exact_permutation_pvalue(&genotype, &data.phenotype)?;
    let mut permuted = genotype.clone();
    permuted.shuffle(&mut rng);
    let mut twin = vec![0.0; data.n()];
    for (i, rec) in data.records.iter().enumerate() {
        for side in Side::BOTH {
            let parent = rec.parent(side).expect("both parents are genotyped");
            let mut r = streams.stream(Domain::GlobalTwin, [i as u64, side.index() as u64, 0, 0]);
            twin[i] += f64::from(sample_global_twin(parent, &data.map, &data.params, &mut r)?.0[0]);
        }
    }
    let config = TwinTestConfig::new(replicates, seed).with_tie_policy(TiePolicy::Conservative);
    let dtt = digital_twin_test(&data, 1, &TdtStatistic, &config)?;
    let population = (0..data.n()).map(|i| if i < 4 { 1 } else { 2 }).collect();
    Ok(ConfoundedDemoOutcome {
        dataset: data,
        population,
        genotype,
        permuted,
        twin,
        permutation_exact,
        permutation_monte_carlo,
        dtt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confounded_demo_values() {
        let out = run_confounded_demo(99, 1).unwrap();
        assert_eq!(out.permutation_exact, 1.0 / 70.0);
        assert!(out.permutation_monte_carlo <= 0.05);
        assert_eq!(out.dtt.p_value, 1.0);
        assert_eq!(out.twin, out.genotype);
        let mut a = out.permuted.clone();
        let mut b = out.genotype.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn ordered_discoveries_map_back() {
        let p = [0.9, 0.01, 0.02, 0.8];
        let set = discoveries(
            Procedure::SelectiveSeqStep,
            &p,
            &[1, 2, 0, 3],
            0.5,
            Some(0.5),
        )
        .unwrap();
        assert_eq!(set.rejected, vec![1, 2]);
        let bh = discoveries(Procedure::BenjaminiHochberg, &p, &[], 0.1, None).unwrap();
        assert_eq!(bh.rejected, vec![1, 2]);
    }

    #[test]
    fn fdp_counts_groups_without_causal_sites() {
        let map = crate::hmm::GeneticMap::uniform(&[(1, 10, 0.1, 1000)]).unwrap();
        let partition = GroupPartition::equal_count(&map, 5).unwrap();
        let set = bonferroni(&[0.001, 0.001, 0.5, 0.001, 0.9], 0.05).unwrap();
        assert_eq!(
            false_discovery_proportion(&set, &partition, &[0, 3]),
            1.0 / 3.0
        );
    }
}
