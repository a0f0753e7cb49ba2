//! A reduced compare grid: a few learners on every dataset kind.

use ami_mortality::cli::{best_by_dataset, compare, write_best_csv, CompareRow};
use ami_mortality::features::DatasetKind;
use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::learners::Family;
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_compare_example");
    let config = SynthConfig {
        n_admissions: 1000,
        ..SynthConfig::bundled_high_signal()
    };
    generate(&config, &dir)?;
    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let (cases, _) = assemble_cohort(&tables, &CleanConfig::from_items(&tables.event_items))?;

    let families = [Family::Logistic, Family::NaiveBayes, Family::Tree, Family::Adaboost];
    let results = compare(&cases, &DatasetKind::ALL, &families, 10, 1)?;
    let rows: Vec<CompareRow> = results.into_iter().map(|(row, _)| row).collect();
    for r in &rows {
        println!(
            "{:<13} {:<28} accuracy {:.4}  AUC {:.4}",
            r.dataset.name(),
            r.learner.name(),
            r.metrics.accuracy,
            r.auc
        );
    }
    println!();
    write_best_csv(&best_by_dataset(&rows), std::io::stdout())?;
    Ok(())
}
