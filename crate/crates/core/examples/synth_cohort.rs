//! Generate a small synthetic cohort in the seven-table layout.
//!
//! `cargo run --example synth_cohort -- [out_dir]`

use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/synth_example".into());
    let config = SynthConfig {
        n_admissions: 1000,
        non_cohort_admissions: 80,
        ..SynthConfig::bundled_default()
    };
    let manifest = generate(&config, out.as_ref())?;
    println!(
        "{} cohort admissions ({} positive), {} non-cohort admissions, {} patients → {out}",
        manifest.cohort_admissions, manifest.positives, manifest.non_cohort_admissions, manifest.patients
    );
    println!("config:\n{}", config.to_toml());
    Ok(())
}
