//! ROC curves of two learners overlaid in one SVG.
//!
//! `cargo run --example roc_plot -- [out.svg]`

use ami_mortality::evaluate::{cross_validate, write_roc_svg};
use ami_mortality::learners::{Family, LearnerSpec};
use ami_mortality::synth::separable_matrix;

fn main() -> ami_mortality::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "roc_example.svg".into());
    // A small margin plus label noise keeps the curves off the corner.
    let mut data = separable_matrix(400, 5, 0.0, 4)?;
    for i in (0..data.labels.len()).step_by(7) {
        data.labels[i] = !data.labels[i];
    }
    let mut curves = Vec::new();
    for family in [Family::NaiveBayes, Family::Stump] {
        let r = cross_validate(&LearnerSpec::new(family, 0), &data, 10, 0)?;
        println!("{family}: AUC {:.4}, {} ROC points", r.auc, r.roc.len());
        curves.push((family.name().to_string(), r.auc, r.roc));
    }
    let file = std::fs::File::create(&out).map_err(|e| ami_mortality::Error::Config(e.to_string()))?;
    write_roc_svg("Noisy separable data", &curves, file)?;
    println!("wrote {out}");
    Ok(())
}
