//! Stratified 10-fold cross-validation of one learner, fold by fold.

use ami_mortality::evaluate::cross_validate;
use ami_mortality::features::{build_dataset, DatasetKind};
use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::learners::{Family, LearnerSpec};
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_cv_example");
    let config = SynthConfig {
        n_admissions: 1000,
        ..SynthConfig::bundled_default()
    };
    generate(&config, &dir)?;
    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let (cases, _) = assemble_cohort(&tables, &CleanConfig::from_items(&tables.event_items))?;
    let data = build_dataset(&cases, DatasetKind::Demographics)?;

    let report = cross_validate(&LearnerSpec::new(Family::Logistic, 0), &data, 10, 42)?;
    println!("fold  n_test  positives  accuracy  auc     model");
    for f in &report.folds {
        println!(
            "{:>4}  {:>6}  {:>9}  {:>8.4}  {:<6}  {}",
            f.fold,
            f.n_test,
            f.test_positives,
            f.metrics.accuracy,
            f.auc.map(|a| format!("{a:.4}")).unwrap_or("-".into()),
            &f.model_digest[..12]
        );
    }
    let s = &report.fold_summary;
    println!(
        "pooled accuracy {:.4}, AUC {:.4}; per-fold accuracy {:.4} ± {:.4}",
        report.metrics.accuracy, report.auc, s.accuracy_mean, s.accuracy_sd
    );
    Ok(())
}
