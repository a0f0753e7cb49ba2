//! The six dataset kinds and the columns each one contributes.

use ami_mortality::features::{build_dataset, DatasetKind};
use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_features_example");
    let config = SynthConfig {
        n_admissions: 500,
        ..SynthConfig::bundled_default()
    };
    generate(&config, &dir)?;
    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let (cases, _) = assemble_cohort(&tables, &CleanConfig::from_items(&tables.event_items))?;

    for kind in DatasetKind::ALL {
        let data = build_dataset(&cases, kind)?;
        let missing = data.missing.iter().filter(|&&m| m).count();
        let names: Vec<&str> = data.schema.names().take(6).collect();
        println!(
            "{:<13} {:>3} columns, {:>5} missing cells, first: {}",
            kind.name(),
            data.n_features(),
            missing,
            names.join(", ")
        );
    }
    Ok(())
}
