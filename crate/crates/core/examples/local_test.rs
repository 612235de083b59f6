//! Local digital twin tests over 5 Mb windows of one chromosome.
//!
//! Run with `cargo run --release --example local_test`.

use digital_twins::data::GroupPartition;
use digital_twins::simulator::{simulate_study, StudySpec};
use digital_twins::statistics::TdtStatistic;
use digital_twins::twin_tests::{local_dtt_groups, TwinTestConfig};

fn main() -> digital_twins::Result<()> {
    let spec = StudySpec {
        n_trios: 500,
        layout: vec![(1, 600, 1.0, 63_000_000)],
        n_causal: 2,
        h2: 0.4,
        ..StudySpec::default()
    };
    let study = simulate_study(&spec, 5)?;
    let data = &study.dataset;
    let partition = GroupPartition::by_physical_width(&data.map, 5_000_000)?;
    let table = local_dtt_groups(data, &partition, &TdtStatistic, &TwinTestConfig::new(99, 5))?;
    for e in &table.entries {
        let causal = study.causal.iter().any(|&j| e.group.contains(j));
        println!(
            "group {:>2}  sites {:>3}..={:<3}  p = {:.2}{}",
            e.group_index + 1,
            e.group.first,
            e.group.last,
            e.p_value,
            if causal { "  causal" } else { "" }
        );
    }
    Ok(())
}
