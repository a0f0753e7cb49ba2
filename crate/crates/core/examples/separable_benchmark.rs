//! Every learner on a linearly separable cohort with a guaranteed margin.

use ami_mortality::evaluate::cross_validate;
use ami_mortality::learners::{Family, LearnerSpec};
use ami_mortality::synth::separable_matrix;

fn main() -> ami_mortality::Result<()> {
    let data = separable_matrix(400, 6, 0.3, 11)?;
    println!("{:<28} {:>9} {:>7}", "learner", "accuracy", "AUC");
    for family in Family::ALL {
        let r = cross_validate(&LearnerSpec::new(family, 11), &data, 10, 11)?;
        println!("{:<28} {:>9.4} {:>7.4}", family.name(), r.metrics.accuracy, r.auc);
    }
    Ok(())
}
