//! Cross-validated lasso on an external association study and the loss
//! statistic it induces on the trios.
//!
//! Run with `cargo run --release --example lasso_fit`.

use digital_twins::experiments::{fit_external, LassoSettings};
use digital_twins::simulator::{simulate_study, StudySpec};
use digital_twins::statistics::{evaluate, support, LambdaPath, LossStatistic};

fn main() -> digital_twins::Result<()> {
    let spec = StudySpec {
        n_trios: 300,
        n_external: 2000,
        layout: vec![(1, 1000, 1.0, 63_000_000)],
        n_causal: 10,
        h2: 0.4,
        ..StudySpec::default()
    };
    let study = simulate_study(&spec, 2)?;
    let settings = LassoSettings {
        path: LambdaPath::Auto {
            count: 30,
            min_ratio: 0.01,
        },
        folds: 5,
    };
    let model = fit_external(study.external.as_ref().unwrap(), &settings, 2)?;
    let selected = support(&model);
    let hits = selected.iter().filter(|j| study.causal.contains(j)).count();
    println!(
        "lambda {:.4}, cross-validated deviance {:.4}",
        model.lambda, model.cv_score
    );
    println!(
        "{} sites selected, {hits} of {} causal sites among them",
        selected.len(),
        study.causal.len()
    );
    let stat = LossStatistic::new(model);
    let t = evaluate(
        &stat,
        &study.dataset.genotype_matrix(),
        &study.dataset.phenotype,
    )?;
    println!("loss statistic on the trio offspring: {t:.2}");
    Ok(())
}
