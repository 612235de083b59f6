//! Calibrating a binary trait to a liability-scale heritability and
//! prevalence, then checking the simulated case rate.
//!
//! Run with `cargo run --release --example heritability`.

use digital_twins::data::GenotypeMatrix;
use digital_twins::hmm::{GeneticMap, HmmParams};
use digital_twins::rng::{Domain, Streams};
use digital_twins::simulator::{
    calibrate_trait, generate_founders, generate_phenotype, liability_heritability, sample_cohort,
    MixingDesign, PopulationModel,
};
use digital_twins::statistics::Family;

fn main() -> digital_twins::Result<()> {
    let map = GeneticMap::uniform(&[(1, 300, 1.0, 63_000_000)])?;
    let streams = Streams::new(8);
    let frequencies = PopulationModel::balding_nichols(
        map.clone(),
        1,
        0.1,
        &mut streams.stream(Domain::Design, [0; 4]),
    )?;
    let model = PopulationModel {
        frequencies,
        ld_rate: 40.0,
        design: MixingDesign::Homogeneous,
        n_couples: 2000,
        map: map.clone(),
    };
    let records = sample_cohort(
        &generate_founders(&model, &streams)?,
        &map,
        &HmmParams::default(),
        &streams,
    )?;
    let x = GenotypeMatrix::from_fn(records.len(), map.len(), |i, j| {
        records[i].genotype(j) as f64
    });
    let causal = [10, 80, 150, 220, 290];
    for (h2, prevalence) in [(0.1, 0.5), (0.3, 0.2), (0.7, 0.5)] {
        let t = match calibrate_trait(&x, &causal, h2, prevalence, Family::BinaryLogistic) {
            Ok(t) => t,
            Err(e) => {
                println!("target h2 {h2} prevalence {prevalence}: {e}");
                continue;
            }
        };
        let y = generate_phenotype(&x, &t, &mut streams.stream(Domain::Phenotype, [0; 4]))?;
        let rate = y.values().iter().sum::<f64>() / y.len() as f64;
        println!(
            "target h2 {h2} prevalence {prevalence}: effect {:.3}, intercept {:.3}, h2 {:.3}, case rate {rate:.3}",
            t.coefficients[causal[0]],
            t.intercept,
            liability_heritability(&x, &t)?
        );
    }
    Ok(())
}
