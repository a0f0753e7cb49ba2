use ami_mortality::features::FeatureMatrix;
use ami_mortality::learners::{train, Family, LearnerSpec, Model};
use ami_mortality::synth::separable_matrix;
use ami_mortality::Error;
use ndarray::Array2;

fn quick(family: Family) -> LearnerSpec {
    let spec = LearnerSpec::new(family, 9);
    match family {
        Family::DeepFnn => spec.with("epochs", 30.0).unwrap(),
        _ => spec,
    }
}

#[test]
fn every_family_outputs_a_distribution() {
    let data = separable_matrix(120, 3, 0.2, 1).unwrap();
    for family in Family::ALL {
        let model = train(&quick(family), &data).unwrap();
        for row in data.rows.rows() {
            let [p0, p1] = model.predict_distribution(row.as_slice().unwrap()).unwrap();
            assert!((0.0..=1.0).contains(&p1), "{family}: {p1}");
            assert!((p0 + p1 - 1.0).abs() < 1e-12, "{family}");
        }
    }
}

#[test]
fn model_json_round_trip_predicts_identically() {
    let data = separable_matrix(120, 3, 0.2, 2).unwrap();
    for family in Family::ALL {
        let model = train(&quick(family), &data).unwrap();
        let back = Model::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back, "{family}");
        assert_eq!(
            model.predict_matrix(&data).unwrap(),
            back.predict_matrix(&data).unwrap(),
            "{family}"
        );
    }
}

#[test]
fn wrong_width_is_rejected() {
    let data = separable_matrix(60, 3, 0.2, 3).unwrap();
    for family in Family::ALL {
        let model = train(&quick(family), &data).unwrap();
        assert!(model.predict_proba(&[0.0, 1.0]).is_err(), "{family}");
        assert!(model.predict_proba(&[0.0; 4]).is_err(), "{family}");
    }
}

#[test]
fn gradient_learners_refuse_one_class() {
    let x = Array2::from_shape_fn((30, 2), |(i, j)| (i * (j + 1)) as f64);
    let data = FeatureMatrix::from_numeric(x, vec![true; 30]).unwrap();
    for family in Family::ALL.into_iter().filter(|f| f.needs_both_classes()) {
        match train(&quick(family), &data) {
            Err(Error::Degenerate(_)) => {}
            other => panic!("{family}: {other:?}"),
        }
    }
}

#[test]
fn unknown_hyperparameters_are_rejected() {
    assert!(LearnerSpec::new(Family::Tree, 0).with("learning_rate", 0.1).is_err());
    assert!(LearnerSpec::new(Family::DeepFnn, 0).with("epochs", 0.0).is_err());
}
