use rand::seq::index::sample;

use super::{
    calibrate_trait, generate_founders, generate_phenotype, generate_unrelated, sample_cohort,
    MixingDesign, PopulationModel, TraitModel,
};
use crate::data::{GenotypeMatrix, TrioDataset};
use crate::error::{Error, Result};
use crate::hmm::{GeneticMap, HmmParams};
use crate::rng::{Domain, Streams};
use crate::statistics::{Family, GwasDataset};

/// Causal-set draws tried before an unreachable heritability is reported.
const MAX_CAUSAL_DRAWS: usize = 50;

/// A complete simulated study: trio cohort, trait and optional external
/// association study.
#[derive(Clone, Debug)]
pub struct StudySpec {
    pub n_trios: usize,
    /// Size of the external study; 0 for none.
    pub n_external: usize,
    /// `(chromosome, sites, Morgans, base pairs)` per chromosome.
    pub layout: Vec<(u32, usize, f64, u64)>,
    pub design: MixingDesign,
    /// Differentiation between the two subpopulations.
    pub fst: f64,
    /// Founder LD decay rate per Morgan.
    pub ld_rate: f64,
    pub n_causal: usize,
    pub h2: f64,
    pub prevalence: f64,
    pub family: Family,
    pub epsilon: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        StudySpec {
            n_trios: 300,
            n_external: 0,
            layout: vec![(1, 1000, 1.0, 63_000_000)],
            design: MixingDesign::Homogeneous,
            fst: 0.1,
            ld_rate: 40.0,
            n_causal: 10,
            h2: 0.0,
            prevalence: 0.5,
            family: Family::BinaryLogistic,
            epsilon: HmmParams::default().epsilon,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Study {
    pub dataset: TrioDataset,
    pub external: Option<GwasDataset>,
    /// Sites with a nonzero effect, ascending.
    pub causal: Vec<usize>,
    pub trait_model: TraitModel,
    pub population: PopulationModel,
}

/// Simulates a study from `spec`; every random choice is keyed by `seed`.
///
/// Causal sites are drawn uniformly (redrawn when the target heritability
/// is out of their reach), except in the admixed design where a
/// single-site trait uses the site with the largest allele-frequency
/// difference between the subpopulations. The trait is calibrated on the
/// trio offspring.
pub fn simulate_study(spec: &StudySpec, seed: u64) -> Result<Study> {
    let map = GeneticMap::uniform(&spec.layout)?;
    let params = HmmParams::with_epsilon(spec.epsilon)?;
    let p = map.len();
    if spec.n_causal > p {
        return Err(Error::input(format!(
            "{} causal sites requested for {p} sites",
            spec.n_causal
        )));
    }
    if spec.n_trios == 0 {
        return Err(Error::input("a study needs at least one trio"));
    }
    let streams = Streams::new(seed);
    let mut design_rng = streams.stream(Domain::Design, [0, 0, 0, 0]);
    let subpops = match spec.design {
        MixingDesign::Homogeneous => 1,
        _ => 2,
    };
    let frequencies =
        PopulationModel::balding_nichols(map.clone(), subpops, spec.fst, &mut design_rng)?;
    let population = PopulationModel {
        frequencies,
        ld_rate: spec.ld_rate,
        design: spec.design,
        n_couples: spec.n_trios,
        map: map.clone(),
    };

    let couples = generate_founders(&population, &streams)?;
    let records = sample_cohort(&couples, &map, &params, &streams)?;
    let x = GenotypeMatrix::from_fn(records.len(), p, |i, j| records[i].genotype(j) as f64);

    let (causal, trait_model) = if spec.design == MixingDesign::AdmixedF2 && spec.n_causal == 1 {
        let f = &population.frequencies;
        let diff = |j: usize| (f[0][j] - f[1][j]).abs();
        let c = vec![(0..p)
            .max_by(|&a, &b| diff(a).total_cmp(&diff(b)).then(b.cmp(&a)))
            .unwrap()];
        let t = calibrate_trait(&x, &c, spec.h2, spec.prevalence, spec.family)?;
        (c, t)
    } else {
        // A draw whose causal sites cannot carry the target heritability
        // (rare alleles, ties in the risk score) is replaced.
        let mut attempt = 0;
        loop {
            let mut c = sample(&mut design_rng, p, spec.n_causal).into_vec();
            c.sort_unstable();
            match calibrate_trait(&x, &c, spec.h2, spec.prevalence, spec.family) {
                Ok(t) => break (c, t),
                Err(Error::Input(msg))
                    if msg.contains("not reachable") && attempt + 1 < MAX_CAUSAL_DRAWS =>
                {
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    };
    let phenotype = generate_phenotype(
        &x,
        &trait_model,
        &mut streams.stream(Domain::Phenotype, [0, 0, 0, 0]),
    )?;
    let dataset = TrioDataset::new(records, phenotype, map, params)?;

    let external = if spec.n_external > 0 {
        let rows = generate_unrelated(&population, spec.n_external, &streams)?;
        let xe = GenotypeMatrix::from_fn(rows.len(), p, |i, j| rows[i][j] as f64);
        let ye = generate_phenotype(
            &xe,
            &trait_model,
            &mut streams.stream(Domain::Phenotype, [1, 0, 0, 0]),
        )?;
        Some(GwasDataset::from_rows(&rows, ye)?)
    } else {
        None
    };

    Ok(Study {
        dataset,
        external,
        causal,
        trait_model,
        population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> StudySpec {
        StudySpec {
            n_trios: 60,
            n_external: 40,
            layout: vec![(1, 80, 0.8, 8_000_000), (2, 40, 0.4, 4_000_000)],
            n_causal: 3,
            h2: 0.2,
            prevalence: 0.3,
            ..StudySpec::default()
        }
    }

    #[test]
    fn reproducible() {
        let a = simulate_study(&small(), 5).unwrap();
        let b = simulate_study(&small(), 5).unwrap();
        assert_eq!(a.dataset.records, b.dataset.records);
        assert_eq!(a.dataset.phenotype, b.dataset.phenotype);
        assert_eq!(a.external, b.external);
        assert_eq!(a.causal, b.causal);
        let c = simulate_study(&small(), 6).unwrap();
        assert_ne!(a.dataset.records, c.dataset.records);
    }

    #[test]
    fn shapes_and_causal_sites() {
        let s = simulate_study(&small(), 1).unwrap();
        assert_eq!((s.dataset.n(), s.dataset.p()), (60, 120));
        assert_eq!(s.external.as_ref().unwrap().n(), 40);
        assert_eq!(s.causal.len(), 3);
        assert_eq!(s.trait_model.support(), s.causal);

        let admixed = StudySpec {
            design: MixingDesign::AdmixedF2,
            n_causal: 1,
            n_external: 0,
            fst: 0.3,
            ..small()
        };
        let s = simulate_study(&admixed, 2).unwrap();
        let f = &s.population.frequencies;
        let best = (0..120)
            .map(|j| (f[0][j] - f[1][j]).abs())
            .fold(0.0, f64::max);
        assert_eq!((f[0][s.causal[0]] - f[1][s.causal[0]]).abs(), best);
        assert!(s.external.is_none());
    }
}
