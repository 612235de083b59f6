//! Simulate a cohort, save it as text and packed files, load it back and
//! check the round trip.
//!
//! Run with `cargo run --example dataset_io [dir]`.

use digital_twins::hmm::HmmParams;
use digital_twins::io::{load_dataset, save_dataset, DatasetPaths};
use digital_twins::simulator::{simulate_study, StudySpec};

fn main() -> digital_twins::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/dataset_io".into());
    let spec = StudySpec {
        n_trios: 50,
        layout: vec![(1, 120, 1.2, 12_000_000), (2, 80, 0.8, 8_000_000)],
        n_causal: 3,
        h2: 0.2,
        ..StudySpec::default()
    };
    let data = simulate_study(&spec, 4)?.dataset;
    for paths in [
        DatasetPaths::in_dir(&dir),
        DatasetPaths::in_dir(&dir).packed(),
    ] {
        save_dataset(&paths, &data)?;
        let back = load_dataset(&paths, HmmParams::default())?;
        // positions are stored in cM, so the last bit of a Morgan value may move
        let same_map = back.map.sites().iter().zip(data.map.sites()).all(|(a, b)| {
            a.id == b.id
                && a.chromosome == b.chromosome
                && a.physical_pos == b.physical_pos
                && (a.genetic_pos - b.genetic_pos).abs() <= 1e-15 * b.genetic_pos.abs().max(1.0)
        });
        let same = back.records == data.records && back.phenotype == data.phenotype && same_map;
        let size = std::fs::metadata(&paths.haplotypes)
            .map(|m| m.len())
            .unwrap_or(0);
        println!(
            "{}: {size} bytes, round trip {}",
            paths.haplotypes.display(),
            if same { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
