//! Synthetic cohorts in the seven-table layout read by [`crate::ingest`].
//!
//! Each admission draws one standard-normal latent factor per feature group
//! (demographics per patient, the rest per admission). The group's columns
//! are noisy functions of its factor, and the label is
//! `Bernoulli(sigmoid(Σ strength_g · z_g + logit(rate)))`, followed by an exact-count
//! adjustment. Timelines are then laid out so the patient's date of death
//! reproduces every planted label. The tables also carry the data quirks
//! the cleaning rules exist for: masked ages, duplicate code rows, zero and
//! implausible lab values, reversed blood-pressure pairs, and admissions
//! outside the cohort.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cohort::MASKED_AGE_OFFSET;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::{
    ADMISSIONS_FILE, CHART_EVENTS_FILE, DIAGNOSES_FILE, DRG_FILE, ITEMS_FILE, LAB_EVENTS_FILE, PATIENTS_FILE,
};
use crate::variables::{EventSource, COMORBIDITY_GROUPS, DIASTOLIC_BP, EVENT_VARIABLES, SYSTOLIC_BP, TREATMENTS};

/// Bundled configuration files.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");
pub const HIGH_SIGNAL_CONFIG: &str = include_str!("../configs/high_signal.toml");

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalStrength {
    pub admission: f64,
    pub demographics: f64,
    pub treatment: f64,
    pub diagnostic: f64,
    pub lab_chart: f64,
}

impl SignalStrength {
    fn as_array(&self) -> [f64; 5] {
        [self.admission, self.demographics, self.treatment, self.diagnostic, self.lab_chart]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Cohort admissions (the non-cohort extras come on top).
    pub n_admissions: usize,
    pub positive_rate: f64,
    pub seed: u64,
    pub signal_strength: SignalStrength,
    /// Share of cohort patients aged over 90 whose recorded age is masked.
    pub masked_age_fraction: f64,
    /// Probability that a lab/chart variable is never measured in an admission.
    pub missingness_rate: f64,
    /// Share of blood-pressure pairs written in reverse order.
    pub reversed_bp_fraction: f64,
    /// Share of diagnosis and DRG rows written twice.
    pub duplicate_fraction: f64,
    /// Per-measurement probability of an extra zero-valued lab row.
    pub zero_lab_fraction: f64,
    /// Per-measurement probability of an extra out-of-range row.
    pub implausible_fraction: f64,
    /// Share of patients with two or three cohort admissions.
    pub readmission_fraction: f64,
    /// Admissions without an AMI/PMS code, for cohort selection to drop.
    pub non_cohort_admissions: usize,
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SynthConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile {
                    path: path.to_path_buf(),
                }
            } else {
                Error::io(path, e)
            }
        })?;
        Self::from_toml(&text)
    }

    pub fn bundled_default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("bundled default config is valid")
    }

    pub fn bundled_high_signal() -> Self {
        Self::from_toml(HIGH_SIGNAL_CONFIG).expect("bundled high-signal config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Number of positive cohort admissions the generator will plant.
    pub fn target_positives(&self) -> usize {
        (self.n_admissions as f64 * self.positive_rate).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_admissions < 10 {
            return Err(Error::Config(format!("n_admissions must be at least 10, got {}", self.n_admissions)));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(Error::Config(format!("positive_rate must lie in (0, 1), got {}", self.positive_rate)));
        }
        for (name, v) in [
            ("masked_age_fraction", self.masked_age_fraction),
            ("missingness_rate", self.missingness_rate),
            ("reversed_bp_fraction", self.reversed_bp_fraction),
            ("duplicate_fraction", self.duplicate_fraction),
            ("zero_lab_fraction", self.zero_lab_fraction),
            ("implausible_fraction", self.implausible_fraction),
            ("readmission_fraction", self.readmission_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.signal_strength.as_array().iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("signal strengths must be finite".into()));
        }
        let target = self.target_positives();
        if target == 0 || target == self.n_admissions {
            return Err(Error::Config("positive_rate leaves a single class".into()));
        }
        Ok(())
    }
}

/// What was planted, for checking the pipeline against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub cohort_admissions: usize,
    pub positives: usize,
    pub non_cohort_admissions: usize,
    pub patients: usize,
    /// Admission id → planted label, cohort admissions only.
    pub labels: BTreeMap<String, bool>,
}

/// Row-level tables as written to disk.
#[derive(Debug, Clone, Default)]
pub struct SynthTables {
    pub patients: Vec<[String; 4]>,
    pub admissions: Vec<[String; 9]>,
    pub diagnoses: Vec<[String; 2]>,
    pub drg_codes: Vec<[String; 4]>,
    pub lab_events: Vec<[String; 5]>,
    pub chart_events: Vec<[String; 5]>,
    pub event_items: Vec<[String; 3]>,
}

const TS_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

const AMI_CODES: [&str; 11] = [
    "41001", "41011", "41021", "41031", "41041", "41051", "41061", "41071", "41081", "41091", "4110",
];
const OTHER_CODES: [&str; 10] = ["4280", "4019", "42731", "25000", "5849", "41401", "V4582", "2724", "E8790", "4240"];
/// Codes just outside the inclusion range, used for non-cohort admissions.
const NEAR_MISS_CODES: [&str; 4] = ["4111", "412", "41189", "4139"];

const ER_AMI_TEXTS: [&str; 4] = [
    "MYOCARDIAL INFARCTION",
    "ACUTE MYOCARDIAL INFARCTION",
    "R/O MI",
    "RULE OUT MYOCARDIAL INFARCTION",
];
const ER_OTHER_TEXTS: [&str; 6] = [
    "CHEST PAIN",
    "CONGESTIVE HEART FAILURE",
    "CORONARY ARTERY DISEASE",
    "SEPSIS",
    "PNEUMONIA",
    "ALTERED MENTAL STATUS",
];
/// (level, base log-odds, slope on the admission factor)
const DISCHARGE_LOCATIONS: [(&str, f64, f64); 6] = [
    ("HOME", 1.0, -1.0),
    ("HOME HEALTH CARE", 0.6, 0.0),
    ("SNF", 0.0, 0.8),
    ("REHAB/DISTINCT PART HOSP", -0.3, 0.4),
    ("LONG TERM CARE HOSPITAL", -1.5, 1.0),
    ("HOSPICE-HOME", -2.5, 1.5),
];
const ETHNICITIES: [(&str, f64); 9] = [
    ("WHITE", 0.66),
    ("WHITE - RUSSIAN", 0.03),
    ("BLACK/AFRICAN AMERICAN", 0.054),
    ("HISPANIC OR LATINO", 0.018),
    ("ASIAN", 0.012),
    ("ASIAN - CHINESE", 0.004),
    ("OTHER", 0.02),
    ("UNKNOWN/NOT SPECIFIED", 0.17),
    ("PATIENT DECLINED TO ANSWER", 0.032),
];
const RELIGIONS: [&str; 8] = [
    "CATHOLIC",
    "PROTESTANT QUAKER",
    "JEWISH",
    "NOT SPECIFIED",
    "UNOBTAINABLE",
    "OTHER",
    "EPISCOPALIAN",
    "GREEK ORTHODOX",
];
/// (level, base log-odds, slope on the demographic factor)
const MARITAL: [(&str, f64, f64); 6] = [
    ("MARRIED", 1.2, -0.3),
    ("SINGLE", 0.2, 0.0),
    ("WIDOWED", 0.0, 0.9),
    ("DIVORCED", -0.6, 0.1),
    ("SEPARATED", -2.0, 0.0),
    ("", -1.5, 0.0),
];

fn item_id(index: usize) -> String {
    match EVENT_VARIABLES[index].source {
        EventSource::Lab => format!("{}", 50800 + index),
        EventSource::Chart => format!("{}", 220000 + index),
    }
}

fn ts(t: NaiveDateTime) -> String {
    t.format(TS_FORMAT).to_string()
}

fn value_text(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    format!("{r}")
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sigmoid(z: f64) -> f64 {
    crate::learners::sigmoid(z)
}

fn pick_weighted<'a, T>(rng: &mut ChaCha8Rng, options: &'a [(T, f64)]) -> &'a T {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.random::<f64>() * total;
    for (item, w) in options {
        if u < *w {
            return item;
        }
        u -= w;
    }
    &options[options.len() - 1].0
}

/// Softmax choice over `(level, base, slope)` at latent `z`.
fn pick_softmax<'a>(rng: &mut ChaCha8Rng, options: &[(&'a str, f64, f64)], z: f64) -> &'a str {
    let weighted: Vec<(&str, f64)> = options.iter().map(|(l, b, s)| (*l, (b + s * z).exp())).collect();
    pick_weighted(rng, &weighted)
}

fn days(d: f64) -> Duration {
    Duration::seconds((d * 86_400.0).round() as i64)
}

struct Admission {
    id: String,
    latent: [f64; 5],
    label: bool,
}

/// Generates all seven tables in memory.
pub fn synthesize(config: &SynthConfig) -> Result<(SynthTables, SynthManifest)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_admissions;
    let strength = config.signal_strength.as_array();

    // Patients and their cohort admission counts.
    let mut sizes = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let k = if rng.random_bool(config.readmission_fraction) {
            rng.random_range(2..=3usize)
        } else {
            1
        };
        let k = k.min(remaining);
        sizes.push(k);
        remaining -= k;
    }
    let masked: Vec<bool> = sizes.iter().map(|_| rng.random_bool(config.masked_age_fraction)).collect();
    let demo_latent: Vec<f64> = masked
        .iter()
        .map(|&m| {
            let z = normal(&mut rng);
            // The masked (over-90) patients sit at the high-risk end.
            if m {
                z.abs() + 0.5
            } else {
                z
            }
        })
        .collect();

    // Latent factors and planted labels.
    let intercept = (config.positive_rate / (1.0 - config.positive_rate)).ln();
    let mut admissions: Vec<Admission> = Vec::with_capacity(n);
    let mut owner = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for (p, &k) in sizes.iter().enumerate() {
        for _ in 0..k {
            let i = admissions.len();
            let latent = [
                normal(&mut rng),
                demo_latent[p],
                normal(&mut rng),
                normal(&mut rng),
                normal(&mut rng),
            ];
            let score = intercept + strength.iter().zip(&latent).map(|(s, z)| s * z).sum::<f64>();
            let label = rng.random_bool(sigmoid(score));
            admissions.push(Admission {
                id: format!("{}", 100_001 + i),
                latent,
                label,
            });
            owner.push(p);
            scores.push(score);
        }
    }
    adjust_to_exact_count(&mut admissions, &scores, config.target_positives());

    let mut tables = SynthTables::default();
    for (j, var) in EVENT_VARIABLES.iter().enumerate() {
        let source = match var.source {
            EventSource::Lab => "lab",
            EventSource::Chart => "chart",
        };
        tables.event_items.push([item_id(j), var.name.to_string(), source.to_string()]);
    }

    let epoch = NaiveDate::from_ymd_opt(2100, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid epoch");
    let mut next_admission = 0;
    for (p, &k) in sizes.iter().enumerate() {
        let mut mine: Vec<usize> = (next_admission..next_admission + k).collect();
        next_admission += k;
        // Negatives first, so a single date of death explains every label.
        mine.sort_by_key(|&i| admissions[i].label);
        let patient_id = format!("{}", 10_001 + p);
        let z_demo = demo_latent[p];
        let female = rng.random_bool(sigmoid(-0.45 + 0.3 * z_demo));
        let age = if masked[p] {
            rng.random_range(90.2..99.0)
        } else {
            (67.0 + 9.0 * z_demo + 7.0 * normal(&mut rng)).clamp(18.0, 89.5)
        };
        let ethnicity = *pick_weighted(&mut rng, &ETHNICITIES);
        let religion = RELIGIONS[rng.random_range(0..RELIGIONS.len())];
        let marital = pick_softmax(&mut rng, &MARITAL, z_demo);

        let mut t = epoch + days(rng.random_range(0.0..3650.0));
        let first_admit = t;
        let mut first_positive: Option<NaiveDateTime> = None;
        let mut last_discharge = t;
        for (r, &i) in mine.iter().enumerate() {
            let adm = &admissions[i];
            let z_adm = adm.latent[0];
            let stay = (1.4 + 0.45 * z_adm + 0.35 * normal(&mut rng)).exp().clamp(0.5, 45.0);
            let admit = t;
            let discharge = admit + days(stay);
            last_discharge = discharge;
            if adm.label && first_positive.is_none() {
                first_positive = Some(admit);
            }
            let next_is_positive = mine.get(r + 1).is_some_and(|&nx| admissions[nx].label);
            let gap = if adm.label {
                rng.random_range(5.0..40.0)
            } else if next_is_positive {
                rng.random_range(400.0..700.0)
            } else {
                rng.random_range(30.0..400.0)
            };
            t = discharge + days(gap);

            let er_text = if rng.random_bool(sigmoid(-0.2 - 0.7 * z_adm)) {
                ER_AMI_TEXTS[rng.random_range(0..ER_AMI_TEXTS.len())]
            } else {
                ER_OTHER_TEXTS[rng.random_range(0..ER_OTHER_TEXTS.len())]
            };
            tables.admissions.push([
                adm.id.clone(),
                patient_id.clone(),
                ts(admit),
                ts(discharge),
                pick_softmax(&mut rng, &DISCHARGE_LOCATIONS, z_adm).to_string(),
                religion.to_string(),
                ethnicity.to_string(),
                marital.to_string(),
                er_text.to_string(),
            ]);
            write_codes(&mut rng, config, &mut tables, &adm.id, true);
            write_drg(&mut rng, config, &mut tables, &adm.id, adm.latent[2], adm.latent[3]);
            write_events(&mut rng, config, &mut tables, &adm.id, adm.latent[4], admit, stay);
        }

        let dod = match first_positive {
            Some(first) => {
                let used = (last_discharge - first).num_seconds() as f64 / 86_400.0;
                Some(last_discharge + days(rng.random_range(0.0..(360.0 - used).max(0.5))))
            }
            None if rng.random_bool(0.3) => {
                let last_admit = last_discharge;
                Some(last_admit + days(rng.random_range(370.0..3000.0)))
            }
            None => None,
        };
        let recorded_years = if masked[p] { age + MASKED_AGE_OFFSET } else { age };
        let dob = first_admit - days(recorded_years * 365.25);
        tables.patients.push([
            patient_id,
            if female { "F" } else { "M" }.to_string(),
            ts(dob),
            dod.map(ts).unwrap_or_default(),
        ]);
    }

    // Admissions outside the cohort, one per extra patient.
    for e in 0..config.non_cohort_admissions {
        let patient_id = format!("{}", 10_001 + sizes.len() + e);
        let adm_id = format!("{}", 100_001 + n + e);
        let admit = epoch + days(rng.random_range(0.0..3650.0));
        let stay = rng.random_range(1.0..10.0);
        let age = rng.random_range(30.0..89.0);
        tables.patients.push([
            patient_id.clone(),
            if rng.random_bool(0.5) { "F" } else { "M" }.to_string(),
            ts(admit - days(age * 365.25)),
            String::new(),
        ]);
        tables.admissions.push([
            adm_id.clone(),
            patient_id,
            ts(admit),
            ts(admit + days(stay)),
            "HOME".into(),
            RELIGIONS[rng.random_range(0..RELIGIONS.len())].into(),
            "WHITE".into(),
            "MARRIED".into(),
            ER_OTHER_TEXTS[rng.random_range(0..ER_OTHER_TEXTS.len())].into(),
        ]);
        write_codes(&mut rng, config, &mut tables, &adm_id, false);
        write_events(&mut rng, config, &mut tables, &adm_id, 0.0, admit, stay);
    }

    let labels: BTreeMap<String, bool> = admissions.iter().map(|a| (a.id.clone(), a.label)).collect();
    let manifest = SynthManifest {
        cohort_admissions: n,
        positives: labels.values().filter(|&&l| l).count(),
        non_cohort_admissions: config.non_cohort_admissions,
        patients: tables.patients.len(),
        labels,
    };
    Ok((tables, manifest))
}

/// Flips the least-confident labels until exactly `target` are positive.
fn adjust_to_exact_count(admissions: &mut [Admission], scores: &[f64], target: usize) {
    let count = admissions.iter().filter(|a| a.label).count();
    let mut order: Vec<usize> = (0..admissions.len()).collect();
    if count > target {
        order.retain(|&i| admissions[i].label);
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        for &i in order.iter().take(count - target) {
            admissions[i].label = false;
        }
    } else if count < target {
        order.retain(|&i| !admissions[i].label);
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &i in order.iter().take(target - count) {
            admissions[i].label = true;
        }
    }
}

fn maybe_duplicate<const N: usize>(rng: &mut ChaCha8Rng, fraction: f64, rows: &mut Vec<[String; N]>, row: [String; N]) {
    if rng.random_bool(fraction) {
        rows.push(row.clone());
    }
    rows.push(row);
}

fn write_codes(rng: &mut ChaCha8Rng, config: &SynthConfig, tables: &mut SynthTables, adm_id: &str, cohort: bool) {
    let mut codes: Vec<&str> = Vec::new();
    if cohort {
        codes.push(AMI_CODES[rng.random_range(0..AMI_CODES.len())]);
    } else {
        codes.push(NEAR_MISS_CODES[rng.random_range(0..NEAR_MISS_CODES.len())]);
    }
    for _ in 0..rng.random_range(0..4) {
        codes.push(OTHER_CODES[rng.random_range(0..OTHER_CODES.len())]);
    }
    codes.shuffle(rng);
    for code in codes {
        maybe_duplicate(
            rng,
            config.duplicate_fraction,
            &mut tables.diagnoses,
            [adm_id.to_string(), code.to_string()],
        );
    }
}

fn write_drg(rng: &mut ChaCha8Rng, config: &SynthConfig, tables: &mut SynthTables, adm_id: &str, z_treat: f64, z_diag: f64) {
    for (k, slug) in TREATMENTS.iter().enumerate() {
        // Most procedures are protective; a few mark sicker patients.
        let (base, slope) = match k % 7 {
            0 => (-1.2, -1.4),
            1 | 2 => (-2.4, -1.2),
            3 => (-2.8, 1.0),
            _ => (-3.0, -0.8),
        };
        if rng.random_bool(sigmoid(base + slope * z_treat)) {
            maybe_duplicate(
                rng,
                config.duplicate_fraction,
                &mut tables.drg_codes,
                [adm_id.to_string(), format!("{}", 200 + k), "treatment".into(), slug.to_string()],
            );
        }
    }
    for (k, slug) in COMORBIDITY_GROUPS.iter().enumerate() {
        let base = -3.2 + 0.1 * (k % 4) as f64;
        if rng.random_bool(sigmoid(base + 1.3 * z_diag)) {
            maybe_duplicate(
                rng,
                config.duplicate_fraction,
                &mut tables.drg_codes,
                [adm_id.to_string(), format!("{}", 500 + k), "comorbidity".into(), slug.to_string()],
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn write_events(
    rng: &mut ChaCha8Rng,
    config: &SynthConfig,
    tables: &mut SynthTables,
    adm_id: &str,
    z_lab: f64,
    admit: NaiveDateTime,
    stay: f64,
) {
    let systolic = EVENT_VARIABLES.iter().position(|v| v.name == SYSTOLIC_BP);
    let diastolic = EVENT_VARIABLES.iter().position(|v| v.name == DIASTOLIC_BP);
    let when = |rng: &mut ChaCha8Rng| admit + days(rng.random_range(0.0..stay));
    for (j, var) in EVENT_VARIABLES.iter().enumerate() {
        if Some(j) == diastolic || rng.random_bool(config.missingness_rate) {
            continue;
        }
        let unique = (1.0 - var.loading * var.loading).sqrt();
        let level = var.median.ln() + var.log_sd * (var.loading * z_lab + unique * normal(rng));
        let measurements = rng.random_range(1..=3);
        for _ in 0..measurements {
            let value = (level + 0.1 * var.log_sd * normal(rng)).exp();
            let t = when(rng);
            if Some(j) == systolic {
                let d_idx = diastolic.expect("diastolic item in catalog");
                let dvar = &EVENT_VARIABLES[d_idx];
                let dia = value * (dvar.median / var.median) * (1.0 + 0.05 * normal(rng)).clamp(0.8, 1.2);
                let dia = dia.min(0.85 * value);
                let (s, d) = if rng.random_bool(config.reversed_bp_fraction) {
                    (dia, value)
                } else {
                    (value, dia)
                };
                for (idx, v) in [(j, s), (d_idx, d)] {
                    tables.chart_events.push([
                        adm_id.to_string(),
                        item_id(idx),
                        value_text(v),
                        EVENT_VARIABLES[idx].unit.to_string(),
                        ts(t),
                    ]);
                }
                continue;
            }
            let rows = match var.source {
                EventSource::Lab => &mut tables.lab_events,
                EventSource::Chart => &mut tables.chart_events,
            };
            let mut push = |v: f64, t: NaiveDateTime| {
                rows.push([adm_id.to_string(), item_id(j), value_text(v), var.unit.to_string(), ts(t)]);
            };
            push(value, t);
            if var.source == EventSource::Lab && rng.random_bool(config.zero_lab_fraction) {
                push(0.0, when(rng));
            }
            if rng.random_bool(config.implausible_fraction) {
                push(var.plausible.1 * 10.0, when(rng));
            }
        }
    }
}

fn write_table<const N: usize>(path: &Path, stamp: &str, header: [&str; N], rows: &[[String; N]]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "# config_hash={stamp}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

impl SynthTables {
    /// Writes the seven tables, each opening with a `# config_hash=` line.
    pub fn write(&self, dir: &Path, config_hash: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_table(&dir.join(PATIENTS_FILE), config_hash, ["patient_id", "gender", "dob", "dod"], &self.patients)?;
        write_table(&dir.join(ADMISSIONS_FILE), config_hash,
            [
                "admission_id",
                "patient_id",
                "admit_time",
                "discharge_time",
                "discharge_location",
                "religion",
                "ethnicity",
                "marital_status",
                "initial_diagnosis_text",
            ],
            &self.admissions,
        )?;
        write_table(&dir.join(DIAGNOSES_FILE), config_hash, ["admission_id", "icd9_code"], &self.diagnoses)?;
        write_table(&dir.join(DRG_FILE), config_hash,
            ["admission_id", "drg_code", "kind", "category"],
            &self.drg_codes,
        )?;
        let event_header = ["admission_id", "item_id", "value", "unit", "charttime"];
        write_table(&dir.join(LAB_EVENTS_FILE), config_hash, event_header, &self.lab_events)?;
        write_table(&dir.join(CHART_EVENTS_FILE), config_hash, event_header, &self.chart_events)?;
        write_table(&dir.join(ITEMS_FILE), config_hash, ["item_id", "name", "source"], &self.event_items)?;
        Ok(())
    }
}

/// Generates a cohort and writes the seven tables into `dir`.
pub fn generate(config: &SynthConfig, dir: &Path) -> Result<SynthManifest> {
    let (tables, manifest) = synthesize(config)?;
    tables.write(dir, &crate::config_hash(config))?;
    Ok(manifest)
}

/// A linearly separable matrix: rows ~ N(0, I), label = `w·x > 0` for a
/// random unit `w`, and rows with `|w·x| < margin` are redrawn so a
/// perfect linear classifier with that margin exists.
pub fn separable_matrix(n: usize, p: usize, margin: f64, seed: u64) -> Result<FeatureMatrix> {
    if n < 2 || p == 0 {
        return Err(Error::Validation("separable_matrix needs n >= 2 and p >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..p).map(|_| normal(&mut rng)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    let mut rows = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        // Alternate the requested side so both classes are always present.
        let want_positive = i % 2 == 0;
        loop {
            let x: Vec<f64> = (0..p).map(|_| normal(&mut rng)).collect();
            let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            if s.abs() >= margin && (s > 0.0) == want_positive {
                rows.row_mut(i).assign(&ndarray::ArrayView1::from(&x[..]));
                labels.push(s > 0.0);
                break;
            }
        }
    }
    FeatureMatrix::from_numeric(rows, labels)
}
