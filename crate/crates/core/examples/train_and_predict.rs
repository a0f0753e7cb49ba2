//! Fit one learner, save it as JSON, reload it and score new rows.

use ami_mortality::features::{build_dataset, DatasetKind};
use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::learners::{train, Family, LearnerSpec, Model};
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_train_example");
    let config = SynthConfig {
        n_admissions: 800,
        ..SynthConfig::bundled_high_signal()
    };
    generate(&config, &dir)?;
    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let (cases, _) = assemble_cohort(&tables, &CleanConfig::from_items(&tables.event_items))?;
    let (fit, held_out) = cases.split_at(600);
    let train_data = build_dataset(fit, DatasetKind::Combined)?;
    let spec = LearnerSpec::new(Family::RandomForest, 1).with("n_trees", 50.0)?;
    let model = train(&spec, &train_data)?;

    let json = model.to_json()?;
    let reloaded = Model::from_json(&json)?;
    println!("model JSON: {} bytes, {} features", json.len(), reloaded.n_features());

    // Held-out cases are encoded with the training schema (NaN = missing).
    for case in held_out.iter().take(5) {
        let (row, _) = train_data.schema.encode_case(case);
        let p = reloaded.predict_proba(&row)?;
        println!("{}: P(death within a year) = {p:.3}, actual {:?}", case.admission_id(), case.label);
    }
    Ok(())
}
