//! Synthetic trio cohorts and phenotypes.
//!
//! Founder haplotypes come from a first-order Markov copying model: along
//! each chromosome an allele is copied from the previous site with
//! probability `exp(-ld_rate * d)` and otherwise drawn afresh from the
//! subpopulation allele frequency. Offspring are then produced by the
//! meiosis model of [`crate::hmm`].

mod confounded;
mod phenotype;
mod study;

pub use confounded::{exact_permutation_pvalue, make_confounded_example, permutation_test};
pub use phenotype::{
    calibrate_trait, generate_binary_phenotype, generate_continuous_phenotype, generate_phenotype,
    liability_heritability, TraitModel,
};
pub use study::{simulate_study, Study, StudySpec};

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use crate::data::TrioRecord;
use crate::error::{Error, Result};
use crate::hmm::{sample_global_twin, GeneticMap, HaplotypePair, HmmParams};
use crate::rng::{Domain, Streams};

const EXTERNAL_STREAM: u64 = 0x4757_4153;

/// How the parents of a cohort are drawn from the subpopulations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MixingDesign {
    /// All founders from the first subpopulation.
    Homogeneous,
    /// Each couple from one subpopulation, chosen uniformly.
    Structured,
    /// Each parent is the child of one founder from the first and one from
    /// the second subpopulation.
    AdmixedF2,
}

#[derive(Clone, Debug)]
pub struct PopulationModel {
    /// Allele frequency of every site, one vector per subpopulation.
    pub frequencies: Vec<Vec<f64>>,
    /// Founder LD decay rate per Morgan.
    pub ld_rate: f64,
    pub design: MixingDesign,
    pub n_couples: usize,
    pub map: GeneticMap,
}

impl PopulationModel {
    /// Subpopulation frequencies drawn around shared ancestral frequencies
    /// (uniform on `[0.05, 0.5]`) from the Balding-Nichols model with
    /// differentiation `fst`.
    pub fn balding_nichols<R: Rng + ?Sized>(
        map: GeneticMap,
        subpopulations: usize,
        fst: f64,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        if !(fst > 0.0 && fst < 1.0) {
            return Err(Error::input("fst must be in (0, 1)"));
        }
        let ancestral: Vec<f64> = (0..map.len()).map(|_| rng.gen_range(0.05..0.5)).collect();
        let scale = (1.0 - fst) / fst;
        (0..subpopulations)
            .map(|_| {
                ancestral
                    .iter()
                    .map(|&f| {
                        let beta = Beta::new(f * scale, (1.0 - f) * scale)
                            .map_err(|e| Error::input(format!("invalid Beta parameters: {e}")))?;
                        Ok(beta.sample(rng).clamp(0.01, 0.99))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::input("at least one subpopulation is needed"));
        }
        for f in &self.frequencies {
            if f.len() != self.map.len() {
                return Err(Error::input(format!(
                    "frequency vector has {} entries for {} sites",
                    f.len(),
                    self.map.len()
                )));
            }
            if let Some(v) = f.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Error::input(format!(
                    "allele frequency {v} is not in (0, 1)"
                )));
            }
        }
        if !(self.ld_rate >= 0.0) {
            return Err(Error::input("LD decay rate must be nonnegative"));
        }
        let needed = match self.design {
            MixingDesign::Homogeneous => 1,
            MixingDesign::Structured | MixingDesign::AdmixedF2 => 2,
        };
        if self.frequencies.len() < needed {
            return Err(Error::input(format!(
                "{:?} needs {needed} subpopulations",
                self.design
            )));
        }
        Ok(())
    }
}

/// The two parents of one offspring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Couple {
    pub mother: HaplotypePair,
    pub father: HaplotypePair,
    /// Source subpopulation for structured designs.
    pub subpopulation: Option<usize>,
}

/// One founder haplotype from a subpopulation's frequencies.
pub fn founder_haplotype<R: Rng + ?Sized>(
    frequencies: &[f64],
    map: &GeneticMap,
    ld_rate: f64,
    rng: &mut R,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.len());
    for (j, &f) in frequencies.iter().enumerate() {
        let keep = if j > 0 && map.same_chromosome(j - 1, j) {
            (-ld_rate * map.distance(j)).exp()
        } else {
            0.0
        };
        let a = if keep > 0.0 && rng.gen::<f64>() < keep {
            out[j - 1]
        } else {
            u8::from(rng.gen::<f64>() < f)
        };
        out.push(a);
    }
    out
}

fn founder_pair<R: Rng + ?Sized>(
    model: &PopulationModel,
    pop: usize,
    rng: &mut R,
) -> Result<HaplotypePair> {
    let f = &model.frequencies[pop];
    HaplotypePair::new(
        founder_haplotype(f, &model.map, model.ld_rate, rng),
        founder_haplotype(f, &model.map, model.ld_rate, rng),
    )
}

/// Parental haplotypes of `model.n_couples` couples.
pub fn generate_founders(model: &PopulationModel, streams: &Streams) -> Result<Vec<Couple>> {
    model.validate()?;
    let params = HmmParams::default();
    (0..model.n_couples)
        .into_par_iter()
        .map(|c| {
            let mut rng = streams.stream(Domain::Founders, [c as u64, 0, 0, 0]);
            let subpopulation = match model.design {
                MixingDesign::Structured => Some(rng.gen_range(0..model.frequencies.len())),
                _ => None,
            };
            let parent = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<HaplotypePair> {
                match model.design {
                    MixingDesign::Homogeneous => founder_pair(model, 0, rng),
                    MixingDesign::Structured => {
                        founder_pair(model, subpopulation.unwrap_or(0), rng)
                    }
                    MixingDesign::AdmixedF2 => {
                        let a = founder_pair(model, 0, rng)?;
                        let b = founder_pair(model, 1, rng)?;
                        let (ga, _) = sample_global_twin(&a, &model.map, &params, rng)?;
                        let (gb, _) = sample_global_twin(&b, &model.map, &params, rng)?;
                        HaplotypePair::new(ga, gb)
                    }
                }
            };
            let mother = parent(&mut rng)?;
            let father = parent(&mut rng)?;
            Ok(Couple {
                mother,
                father,
                subpopulation,
            })
        })
        .collect()
}

/// Unrelated individuals from the same population, as genotype rows, for
/// use as an external association study. Draws from a child stream family,
/// so the same `streams` can also generate the trio cohort.
pub fn generate_unrelated(
    model: &PopulationModel,
    n: usize,
    streams: &Streams,
) -> Result<Vec<Vec<u8>>> {
    let couples = generate_founders(
        &PopulationModel {
            n_couples: n,
            ..model.clone()
        },
        &streams.child(EXTERNAL_STREAM),
    )?;
    Ok(couples
        .into_iter()
        .map(|c| {
            c.mother
                .strand_a
                .iter()
                .zip(&c.mother.strand_b)
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect())
}

/// One offspring of `mother` and `father`.
pub fn sample_offspring<R: Rng + ?Sized>(
    id: impl Into<String>,
    mother: &HaplotypePair,
    father: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    rng: &mut R,
) -> Result<TrioRecord> {
    let (x_m, _) = sample_global_twin(mother, map, params, rng)?;
    let (x_f, _) = sample_global_twin(father, map, params, rng)?;
    TrioRecord::new(id, x_m, x_f, Some(mother.clone()), Some(father.clone()))
}

/// One offspring per couple, drawn in parallel from keyed streams.
pub fn sample_cohort(
    couples: &[Couple],
    map: &GeneticMap,
    params: &HmmParams,
    streams: &Streams,
) -> Result<Vec<TrioRecord>> {
    couples
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = streams.stream(Domain::Offspring, [i as u64, 0, 0, 0]);
            sample_offspring(
                format!("child{}", i + 1),
                &c.mother,
                &c.father,
                map,
                params,
                &mut rng,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(design: MixingDesign, ld_rate: f64) -> PopulationModel {
        let map = GeneticMap::uniform(&[(1, 200, 1.0, 100_000_000)]).unwrap();
        PopulationModel {
            frequencies: vec![vec![0.3; 200], vec![0.7; 200]],
            ld_rate,
            design,
            n_couples: 200,
            map,
        }
    }

    #[test]
    fn homogeneous_frequency_matches() {
        let m = model(MixingDesign::Homogeneous, 50.0);
        let couples = generate_founders(&m, &Streams::new(1)).unwrap();
        let (mut ones, mut total) = (0usize, 0usize);
        for c in &couples {
            for hap in [
                &c.mother.strand_a,
                &c.mother.strand_b,
                &c.father.strand_a,
                &c.father.strand_b,
            ] {
                ones += hap.iter().map(|&a| a as usize).sum::<usize>();
                total += hap.len();
            }
        }
        let f = ones as f64 / total as f64;
        // haplotypes are correlated along the chromosome, so allow a wide band
        assert!((f - 0.3).abs() < 0.03, "{f}");
    }

    #[test]
    fn ld_vanishes_with_fast_decay() {
        let map = GeneticMap::uniform(&[(1, 2, 0.01, 1000)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<Vec<u8>> = (0..20_000)
            .map(|_| founder_haplotype(&[0.5, 0.5], &map, 1e6, &mut rng))
            .collect();
        let same = draws.iter().filter(|h| h[0] == h[1]).count() as f64 / 20_000.0;
        assert!((same - 0.5).abs() < 0.02);
        let draws: Vec<Vec<u8>> = (0..20_000)
            .map(|_| founder_haplotype(&[0.5, 0.5], &map, 1.0, &mut rng))
            .collect();
        let same = draws.iter().filter(|h| h[0] == h[1]).count() as f64 / 20_000.0;
        assert!(same > 0.95);
    }

    #[test]
    fn cohorts_are_reproducible_and_consistent() {
        let m = model(MixingDesign::AdmixedF2, 20.0);
        let streams = Streams::new(4);
        let couples = generate_founders(&m, &streams).unwrap();
        assert_eq!(couples, generate_founders(&m, &streams).unwrap());
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let kids = sample_cohort(&couples, &m.map, &params, &streams).unwrap();
        assert_eq!(
            kids,
            sample_cohort(&couples, &m.map, &params, &streams).unwrap()
        );
        for (k, c) in kids.iter().zip(&couples) {
            for j in 0..m.map.len() {
                assert!(k.x_m[j] == c.mother.strand_a[j] || k.x_m[j] == c.mother.strand_b[j]);
                assert!(k.x_f[j] == c.father.strand_a[j] || k.x_f[j] == c.father.strand_b[j]);
            }
        }
    }

    #[test]
    fn crossover_rate_in_small_window() {
        // P(at least one crossover in 0.01 Morgan) = 1 - exp(-0.01)
        let map = GeneticMap::uniform(&[(1, 2, 0.01, 1_000_000)]).unwrap();
        let parents = HaplotypePair::new(vec![0, 0], vec![1, 1]).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 200_000;
        let switched = (0..trials)
            .filter(|_| {
                let (h, _) = sample_global_twin(&parents, &map, &params, &mut rng).unwrap();
                h[0] != h[1]
            })
            .count() as f64
            / trials as f64;
        let expected = 0.5 * (1.0 - (-0.02f64).exp());
        let sd = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!(
            (switched - expected).abs() < 4.0 * sd,
            "{switched} vs {expected}"
        );
    }
}
