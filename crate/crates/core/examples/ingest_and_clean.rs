//! Select the cohort from raw tables and show what each cleaning rule did.

use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_ingest_example");
    let config = SynthConfig {
        n_admissions: 800,
        ..SynthConfig::bundled_default()
    };
    generate(&config, &dir)?;

    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let counts = tables.row_counts();
    println!("raw rows: {counts:?}");

    let clean = CleanConfig::from_items(&tables.event_items).with_outlier_removal(true);
    let (cases, report) = assemble_cohort(&tables, &clean)?;
    println!("cohort admissions: {}", cases.len());
    println!("{:<24} {:>8} {:>10}", "rule", "removed", "corrected");
    for (rule, removed, corrected) in report.rows() {
        println!("{rule:<24} {removed:>8} {corrected:>10}");
    }

    let case = &cases[0];
    println!("\nfirst case {}: age {:.1}, label {:?}", case.admission_id(), case.age_at_admission, case.label);
    for (name, value) in case.event_means.iter().take(5) {
        println!("  {name} = {value:.2}");
    }
    Ok(())
}
