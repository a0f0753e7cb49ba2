//! One-year mortality prediction for acute myocardial infarction admissions:
//! table ingestion, cleaning, feature sets, ten learner families, stratified
//! cross-validation, cohort statistics and a synthetic cohort generator.

pub mod cli;
pub mod cohort;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod learners;
pub mod preprocess;
pub mod stats;
pub mod synth;
pub mod variables;

pub use error::{Error, Result};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a value's JSON form; stamped into every artifact.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("value serializes");
    hex::encode(Sha256::digest(&json))
}
