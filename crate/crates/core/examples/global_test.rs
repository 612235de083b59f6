//! Global digital twin test of one chromosome with the TDT statistic, under
//! the null and with a heritable trait.
//!
//! Run with `cargo run --release --example global_test`.

use digital_twins::simulator::{simulate_study, StudySpec};
use digital_twins::statistics::TdtStatistic;
use digital_twins::twin_tests::{digital_twin_test, TwinTestConfig};

fn main() -> digital_twins::Result<()> {
    for h2 in [0.0, 0.3] {
        let spec = StudySpec {
            n_trios: 300,
            layout: vec![(1, 500, 1.0, 63_000_000), (2, 500, 1.0, 63_000_000)],
            n_causal: 5,
            h2,
            ..StudySpec::default()
        };
        let study = simulate_study(&spec, 3)?;
        let chroms: Vec<u32> = study
            .causal
            .iter()
            .map(|&j| study.dataset.map.site(j).chromosome)
            .collect();
        println!("h2 = {h2}: causal sites on chromosomes {chroms:?}");
        for chrom in [1, 2] {
            let out = digital_twin_test(
                &study.dataset,
                chrom,
                &TdtStatistic,
                &TwinTestConfig::new(99, 3),
            )?;
            println!(
                "  chromosome {chrom}: T = {:.1}, p = {:.2}",
                out.t_star, out.p_value
            );
        }
    }
    Ok(())
}
