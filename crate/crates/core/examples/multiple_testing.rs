//! The four combiners on one set of group p-values.
//!
//! Run with `cargo run --example multiple_testing`.

use digital_twins::multiple_testing::{
    accumulation_test, benjamini_hochberg, bonferroni, selective_seqstep, Procedure,
};

fn main() -> digital_twins::Result<()> {
    // p-values already sorted by decreasing group weight
    let p = [0.001, 0.004, 0.02, 0.3, 0.01, 0.6, 0.04, 0.9, 0.75, 0.45];
    let alpha = 0.2;
    let sets = [
        bonferroni(&p, alpha)?,
        benjamini_hochberg(&p, alpha)?,
        accumulation_test(&p, alpha, 2.0)?,
        selective_seqstep(&p, alpha, 0.5)?,
    ];
    for set in sets {
        let guarantee = match set.procedure {
            Procedure::Bonferroni => "family-wise error",
            Procedure::AccumulationTest => "modified FDR",
            _ => "FDR",
        };
        println!(
            "{:<13} ({guarantee:>17}): {:?}",
            set.procedure.name(),
            set.rejected
        );
    }
    Ok(())
}
