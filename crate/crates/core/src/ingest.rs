//! Loading the seven relational tables and selecting the AMI/PMS cohort.
//!
//! Every table is a comma-separated file with a header line. Column order is
//! free; extra columns are ignored. Required columns:
//!
//! | file               | columns                                                         |
//! |--------------------|-----------------------------------------------------------------|
//! | `patients.csv`     | patient_id, gender, dob, dod                                    |
//! | `admissions.csv`   | admission_id, patient_id, admit_time, discharge_time, discharge_location, religion, ethnicity, marital_status, initial_diagnosis_text |
//! | `diagnoses.csv`    | admission_id, icd9_code                                         |
//! | `drg_codes.csv`    | admission_id, drg_code, kind, category                          |
//! | `lab_events.csv`   | admission_id, item_id, value, unit, charttime                   |
//! | `chart_events.csv` | admission_id, item_id, value, unit, charttime                   |
//! | `event_items.csv`  | item_id, name, source                                           |
//!
//! Timestamps are ISO-8601 (`2100-01-01`, `2100-01-01 08:30:00` or
//! `2100-01-01T08:30:00`). `dod` may be empty. In `drg_codes.csv`, `kind` is
//! `treatment` or `comorbidity` and `category` is one of the slugs in
//! [`crate::variables`].

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hash;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;

use crate::cohort::{
    assign_label, restore_masked_age, years_between, MASKED_AGE_THRESHOLD, AdmissionCase, AdmissionRecord, Gender,
    PatientRecord,
};
use crate::error::{Error, Result};
use crate::preprocess::{self, CleanConfig, CleaningReport};
use crate::variables::{ComorbidityGroup, EventSource, Treatment};

pub const PATIENTS_FILE: &str = "patients.csv";
pub const ADMISSIONS_FILE: &str = "admissions.csv";
pub const DIAGNOSES_FILE: &str = "diagnoses.csv";
pub const DRG_FILE: &str = "drg_codes.csv";
pub const LAB_EVENTS_FILE: &str = "lab_events.csv";
pub const CHART_EVENTS_FILE: &str = "chart_events.csv";
pub const ITEMS_FILE: &str = "event_items.csv";

/// Inclusive ICD-9 range defining the cohort (AMI family plus 411.0).
pub const COHORT_ICD9_RANGE: (f64, f64) = (410.0, 411.0);

#[derive(Debug, Clone)]
pub struct TablePaths {
    pub patients: PathBuf,
    pub admissions: PathBuf,
    pub diagnoses: PathBuf,
    pub drg_codes: PathBuf,
    pub lab_events: PathBuf,
    pub chart_events: PathBuf,
    pub event_items: PathBuf,
}

impl TablePaths {
    /// Standard file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        TablePaths {
            patients: dir.join(PATIENTS_FILE),
            admissions: dir.join(ADMISSIONS_FILE),
            diagnoses: dir.join(DIAGNOSES_FILE),
            drg_codes: dir.join(DRG_FILE),
            lab_events: dir.join(LAB_EVENTS_FILE),
            chart_events: dir.join(CHART_EVENTS_FILE),
            event_items: dir.join(ITEMS_FILE),
        }
    }

    fn all(&self) -> [&PathBuf; 7] {
        [
            &self.patients,
            &self.admissions,
            &self.diagnoses,
            &self.drg_codes,
            &self.lab_events,
            &self.chart_events,
            &self.event_items,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiagnosisRow {
    pub admission_id: String,
    pub icd9_code: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DrgCategory {
    Treatment(Treatment),
    Comorbidity(ComorbidityGroup),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DrgRow {
    pub admission_id: String,
    pub drg_code: String,
    pub category: DrgCategory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub admission_id: String,
    pub item_id: String,
    pub value: f64,
    pub unit: String,
    pub timestamp: NaiveDateTime,
    pub source: EventSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventItem {
    pub item_id: String,
    pub name: String,
    pub source: EventSource,
}

#[derive(Debug, Clone, Default)]
pub struct RawTables {
    pub patients: Vec<PatientRecord>,
    pub admissions: Vec<AdmissionRecord>,
    pub diagnoses: Vec<DiagnosisRow>,
    pub drg_codes: Vec<DrgRow>,
    pub lab_events: Vec<EventRow>,
    pub chart_events: Vec<EventRow>,
    pub event_items: Vec<EventItem>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RowCounts {
    pub patients: usize,
    pub admissions: usize,
    pub diagnoses: usize,
    pub drg_codes: usize,
    pub lab_events: usize,
    pub chart_events: usize,
    pub event_items: usize,
}

impl RawTables {
    pub fn row_counts(&self) -> RowCounts {
        RowCounts {
            patients: self.patients.len(),
            admissions: self.admissions.len(),
            diagnoses: self.diagnoses.len(),
            drg_codes: self.drg_codes.len(),
            lab_events: self.lab_events.len(),
            chart_events: self.chart_events.len(),
            event_items: self.event_items.len(),
        }
    }

    /// Checks that every foreign key resolves and primary keys are unique.
    pub fn validate(&self) -> Result<()> {
        let mut patients = HashSet::new();
        for (i, p) in self.patients.iter().enumerate() {
            if !patients.insert(p.patient_id.as_str()) {
                return Err(Error::DataIntegrity(format!(
                    "{PATIENTS_FILE}: duplicate patient_id '{}' (row {})",
                    p.patient_id,
                    i + 1
                )));
            }
        }
        let mut admissions = HashSet::new();
        for (i, a) in self.admissions.iter().enumerate() {
            if !admissions.insert(a.admission_id.as_str()) {
                return Err(Error::DataIntegrity(format!(
                    "{ADMISSIONS_FILE}: duplicate admission_id '{}' (row {})",
                    a.admission_id,
                    i + 1
                )));
            }
            if !patients.contains(a.patient_id.as_str()) {
                return Err(dangling(ADMISSIONS_FILE, i, "patient_id", &a.patient_id));
            }
        }
        for (i, d) in self.diagnoses.iter().enumerate() {
            if !admissions.contains(d.admission_id.as_str()) {
                return Err(dangling(DIAGNOSES_FILE, i, "admission_id", &d.admission_id));
            }
        }
        for (i, d) in self.drg_codes.iter().enumerate() {
            if !admissions.contains(d.admission_id.as_str()) {
                return Err(dangling(DRG_FILE, i, "admission_id", &d.admission_id));
            }
        }
        let mut items = HashSet::new();
        let mut names = HashSet::new();
        for (i, it) in self.event_items.iter().enumerate() {
            if !items.insert(it.item_id.as_str()) || !names.insert(it.name.as_str()) {
                return Err(Error::DataIntegrity(format!(
                    "{ITEMS_FILE}: duplicate item '{}' / name '{}' (row {})",
                    it.item_id,
                    it.name,
                    i + 1
                )));
            }
        }
        for (table, rows) in [
            (LAB_EVENTS_FILE, &self.lab_events),
            (CHART_EVENTS_FILE, &self.chart_events),
        ] {
            for (i, e) in rows.iter().enumerate() {
                if !admissions.contains(e.admission_id.as_str()) {
                    return Err(dangling(table, i, "admission_id", &e.admission_id));
                }
                if !items.contains(e.item_id.as_str()) {
                    return Err(dangling(table, i, "item_id", &e.item_id));
                }
            }
        }
        Ok(())
    }
}

// Row index -> file line (header is line 1).
fn dangling(table: &str, row: usize, key_kind: &'static str, key: &str) -> Error {
    Error::DanglingKey {
        table: table.to_string(),
        line: row as u64 + 2,
        key_kind,
        key: key.to_string(),
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Numeric value of an ICD-9 diagnosis code, accepting both dotted
/// (`410.71`) and undotted (`41071`) forms. V and E codes yield `None`.
pub fn icd9_numeric(code: &str) -> Option<f64> {
    let code = code.trim();
    if code.is_empty() {
        return None;
    }
    if code.contains('.') {
        let (major, minor) = code.split_once('.')?;
        if major.is_empty()
            || !major.bytes().all(|b| b.is_ascii_digit())
            || !minor.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        return code.parse().ok();
    }
    if !code.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if code.len() <= 3 {
        code.parse().ok()
    } else {
        format!("{}.{}", &code[..3], &code[3..]).parse().ok()
    }
}

pub fn is_cohort_code(code: &str) -> bool {
    icd9_numeric(code)
        .is_some_and(|v| v >= COHORT_ICD9_RANGE.0 && v <= COHORT_ICD9_RANGE.1)
}

/// Collapses exact duplicates while keeping the first occurrence order.
pub fn dedup_codes<T: Clone + Eq + Hash>(rows: &[T]) -> Vec<T> {
    let mut seen = HashSet::with_capacity(rows.len());
    rows.iter().filter(|r| seen.insert(*r)).cloned().collect()
}

fn open_table(path: &Path, required: &[&str]) -> Result<(csv::Reader<std::fs::File>, csv::StringRecord)> {
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let headers = reader.headers()?.clone();
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::MalformedRow {
                table: table_name(path),
                line: 1,
                reason: format!("missing required column '{col}'"),
            });
        }
    }
    Ok((reader, headers))
}

fn table_name(path: &Path) -> String {
    path.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn read_rows<R, T>(
    path: &Path,
    required: &[&str],
    mut convert: impl FnMut(R) -> std::result::Result<T, String>,
) -> Result<Vec<T>>
where
    R: for<'de> Deserialize<'de>,
{
    let (mut reader, headers) = open_table(path, required)?;
    let table = table_name(path);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| Error::MalformedRow {
            table: table.clone(),
            line,
            reason,
        };
        let raw: R = record
            .deserialize(Some(&headers))
            .map_err(|e| malformed(e.to_string()))?;
        out.push(convert(raw).map_err(malformed)?);
    }
    Ok(out)
}

fn timestamp_field(name: &str, value: &str) -> std::result::Result<NaiveDateTime, String> {
    parse_timestamp(value).ok_or_else(|| format!("{name}: cannot parse timestamp '{value}'"))
}

fn nonempty(name: &str, value: String) -> std::result::Result<String, String> {
    if value.is_empty() {
        Err(format!("{name} is empty"))
    } else {
        Ok(value)
    }
}

#[derive(Deserialize)]
struct PatientCsv {
    patient_id: String,
    gender: String,
    dob: String,
    #[serde(default)]
    dod: String,
}

#[derive(Deserialize)]
struct AdmissionCsv {
    admission_id: String,
    patient_id: String,
    admit_time: String,
    discharge_time: String,
    discharge_location: String,
    religion: String,
    ethnicity: String,
    marital_status: String,
    initial_diagnosis_text: String,
}

#[derive(Deserialize)]
struct DiagnosisCsv {
    admission_id: String,
    icd9_code: String,
}

#[derive(Deserialize)]
struct DrgCsv {
    admission_id: String,
    drg_code: String,
    kind: String,
    category: String,
}

#[derive(Deserialize)]
struct EventCsv {
    admission_id: String,
    item_id: String,
    value: String,
    #[serde(default)]
    unit: String,
    charttime: String,
}

#[derive(Deserialize)]
struct ItemCsv {
    item_id: String,
    name: String,
    source: String,
}

pub fn load_patients(path: &Path) -> Result<Vec<PatientRecord>> {
    read_rows(path, &["patient_id", "gender", "dob", "dod"], |r: PatientCsv| {
        let gender = Gender::parse(&r.gender).ok_or_else(|| format!("unknown gender '{}'", r.gender))?;
        let dob = timestamp_field("dob", &r.dob)?;
        let dod = if r.dod.is_empty() {
            None
        } else {
            Some(timestamp_field("dod", &r.dod)?)
        };
        PatientRecord::new(nonempty("patient_id", r.patient_id)?, gender, dob, dod)
            .map_err(|e| e.to_string())
    })
}

pub fn load_admissions(path: &Path) -> Result<Vec<AdmissionRecord>> {
    read_rows(
        path,
        &[
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
        |r: AdmissionCsv| {
            AdmissionRecord::new(
                nonempty("admission_id", r.admission_id)?,
                nonempty("patient_id", r.patient_id)?,
                timestamp_field("admit_time", &r.admit_time)?,
                timestamp_field("discharge_time", &r.discharge_time)?,
                r.discharge_location,
                &r.initial_diagnosis_text,
                r.religion,
                r.ethnicity,
                r.marital_status,
            )
            .map_err(|e| e.to_string())
        },
    )
}

pub fn load_diagnoses(path: &Path) -> Result<Vec<DiagnosisRow>> {
    read_rows(path, &["admission_id", "icd9_code"], |r: DiagnosisCsv| {
        Ok(DiagnosisRow {
            admission_id: nonempty("admission_id", r.admission_id)?,
            icd9_code: nonempty("icd9_code", r.icd9_code)?,
        })
    })
}

pub fn load_drg_codes(path: &Path) -> Result<Vec<DrgRow>> {
    read_rows(path, &["admission_id", "drg_code", "kind", "category"], |r: DrgCsv| {
        let category = match r.kind.as_str() {
            "treatment" => Treatment::from_slug(&r.category).map(DrgCategory::Treatment),
            "comorbidity" => ComorbidityGroup::from_slug(&r.category).map(DrgCategory::Comorbidity),
            other => return Err(format!("unknown DRG kind '{other}'")),
        }
        .ok_or_else(|| format!("unknown {} category '{}'", r.kind, r.category))?;
        Ok(DrgRow {
            admission_id: nonempty("admission_id", r.admission_id)?,
            drg_code: r.drg_code,
            category,
        })
    })
}

pub fn load_events(path: &Path, source: EventSource) -> Result<Vec<EventRow>> {
    read_rows(
        path,
        &["admission_id", "item_id", "value", "unit", "charttime"],
        |r: EventCsv| {
            let value: f64 = r
                .value
                .parse()
                .map_err(|_| format!("value '{}' is not a number", r.value))?;
            if !value.is_finite() {
                return Err(format!("value '{}' is not finite", r.value));
            }
            Ok(EventRow {
                admission_id: nonempty("admission_id", r.admission_id)?,
                item_id: nonempty("item_id", r.item_id)?,
                value,
                unit: r.unit,
                timestamp: timestamp_field("charttime", &r.charttime)?,
                source,
            })
        },
    )
}

pub fn load_event_items(path: &Path) -> Result<Vec<EventItem>> {
    read_rows(path, &["item_id", "name", "source"], |r: ItemCsv| {
        let source = EventSource::parse(&r.source).ok_or_else(|| format!("unknown source '{}'", r.source))?;
        Ok(EventItem {
            item_id: nonempty("item_id", r.item_id)?,
            name: nonempty("name", r.name)?,
            source,
        })
    })
}

/// Reads and validates all seven tables.
pub fn load_tables(paths: &TablePaths) -> Result<RawTables> {
    if let Some(missing) = paths.all().into_iter().find(|p| !p.exists()) {
        return Err(Error::MissingFile {
            path: missing.clone(),
        });
    }
    let ((patients, admissions), (diagnoses, drg_codes)) = rayon::join(
        || rayon::join(|| load_patients(&paths.patients), || load_admissions(&paths.admissions)),
        || rayon::join(|| load_diagnoses(&paths.diagnoses), || load_drg_codes(&paths.drg_codes)),
    );
    let ((lab_events, chart_events), event_items) = rayon::join(
        || {
            rayon::join(
                || load_events(&paths.lab_events, EventSource::Lab),
                || load_events(&paths.chart_events, EventSource::Chart),
            )
        },
        || load_event_items(&paths.event_items),
    );
    let tables = RawTables {
        patients: patients?,
        admissions: admissions?,
        diagnoses: diagnoses?,
        drg_codes: drg_codes?,
        lab_events: lab_events?,
        chart_events: chart_events?,
        event_items: event_items?,
    };
    tables.validate()?;
    Ok(tables)
}

/// One case per admission carrying at least one ICD-9 code in
/// 410.0–411.0, in admissions-table order. Event means are left empty; see
/// [`assemble_cohort`] for the full pipeline.
pub fn select_cohort(tables: &RawTables) -> Result<Vec<AdmissionCase>> {
    let diagnoses = dedup_codes(&tables.diagnoses);
    let mut codes: HashMap<&str, BTreeSet<String>> = HashMap::new();
    for d in &diagnoses {
        codes
            .entry(d.admission_id.as_str())
            .or_default()
            .insert(d.icd9_code.clone());
    }
    let drg_rows = dedup_codes(&tables.drg_codes);
    let mut drg: HashMap<&str, Vec<DrgCategory>> = HashMap::new();
    for d in &drg_rows {
        drg.entry(d.admission_id.as_str()).or_default().push(d.category);
    }
    let patients: HashMap<&str, &PatientRecord> = tables
        .patients
        .iter()
        .map(|p| (p.patient_id.as_str(), p))
        .collect();

    let mut cases = Vec::new();
    for adm in &tables.admissions {
        let Some(adm_codes) = codes.get(adm.admission_id.as_str()) else {
            continue;
        };
        if !adm_codes.iter().any(|c| is_cohort_code(c)) {
            continue;
        }
        let patient = patients.get(adm.patient_id.as_str()).ok_or_else(|| Error::DanglingKey {
            table: ADMISSIONS_FILE.into(),
            line: 0,
            key_kind: "patient_id",
            key: adm.patient_id.clone(),
        })?;
        let recorded_age = years_between(patient.date_of_birth, adm.admit_time);
        let age_at_admission = restore_masked_age(recorded_age).map_err(|e| {
            Error::DataIntegrity(format!("admission {}: {e}", adm.admission_id))
        })?;
        let label = assign_label(adm.admit_time, patient.date_of_death)
            .map_err(|e| Error::DataIntegrity(format!("admission {}: {e}", adm.admission_id)))?;
        let mut treatments = BTreeSet::new();
        let mut comorbidity_groups = BTreeSet::new();
        for cat in drg.get(adm.admission_id.as_str()).into_iter().flatten() {
            match *cat {
                DrgCategory::Treatment(t) => {
                    treatments.insert(t);
                }
                DrgCategory::Comorbidity(c) => {
                    comorbidity_groups.insert(c);
                }
            }
        }
        cases.push(AdmissionCase {
            admission: adm.clone(),
            patient: (*patient).clone(),
            age_at_admission,
            diagnoses: adm_codes.clone(),
            treatments,
            comorbidity_groups,
            event_means: BTreeMap::new(),
            label,
        });
    }
    Ok(cases)
}

/// Cohort selection followed by event cleaning and per-admission averaging.
pub fn assemble_cohort(
    tables: &RawTables,
    config: &CleanConfig,
) -> Result<(Vec<AdmissionCase>, CleaningReport)> {
    let mut cases = select_cohort(tables)?;
    let in_cohort: HashSet<&str> = cases.iter().map(|c| c.admission_id()).collect();
    let events: Vec<EventRow> = tables
        .lab_events
        .iter()
        .chain(&tables.chart_events)
        .filter(|e| in_cohort.contains(e.admission_id.as_str()))
        .cloned()
        .collect();
    let (means, mut report) = preprocess::clean_and_average(events, &tables.event_items, config)?;
    report.duplicate_code_rows = tables.diagnoses.len() - dedup_codes(&tables.diagnoses).len()
        + tables.drg_codes.len()
        - dedup_codes(&tables.drg_codes).len();
    report.masked_ages_restored = cases
        .iter()
        .filter(|c| years_between(c.patient.date_of_birth, c.admission.admit_time) > MASKED_AGE_THRESHOLD)
        .count();
    let names: HashMap<&str, &str> = tables
        .event_items
        .iter()
        .map(|i| (i.item_id.as_str(), i.name.as_str()))
        .collect();
    let mut by_admission: HashMap<&str, BTreeMap<String, f64>> = HashMap::new();
    for ((adm, item), mean) in &means {
        let name = names[item.as_str()];
        by_admission
            .entry(adm.as_str())
            .or_default()
            .insert(name.to_string(), *mean);
    }
    for case in &mut cases {
        if let Some(m) = by_admission.remove(case.admission.admission_id.as_str()) {
            case.event_means = m;
        }
    }
    Ok((cases, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icd9_normalization() {
        assert_eq!(icd9_numeric("41071"), Some(410.71));
        assert_eq!(icd9_numeric("410.71"), Some(410.71));
        assert_eq!(icd9_numeric("4110"), Some(411.0));
        assert_eq!(icd9_numeric("412"), Some(412.0));
        assert_eq!(icd9_numeric("V4582"), None);
        assert_eq!(icd9_numeric("E8790"), None);
        assert_eq!(icd9_numeric(""), None);
    }

    #[test]
    fn cohort_code_range() {
        for code in ["410.71", "41071", "410", "4100", "41091", "411", "4110", "411.0", "41100"] {
            assert!(is_cohort_code(code), "{code}");
        }
        for code in ["412", "4111", "411.1", "4109x", "409.9", "V4581", "428.0"] {
            assert!(!is_cohort_code(code), "{code}");
        }
    }

    #[test]
    fn dedup_examples() {
        let a = |c: &str| ("A".to_string(), c.to_string());
        assert_eq!(dedup_codes(&[a("410.71"), a("410.71")]), vec![a("410.71")]);
        assert_eq!(
            dedup_codes(&[a("410.71"), a("411.0")]),
            vec![a("410.71"), a("411.0")]
        );
        assert!(dedup_codes::<(String, String)>(&[]).is_empty());
    }

    #[test]
    fn timestamps() {
        assert!(parse_timestamp("2100-01-01").is_some());
        assert!(parse_timestamp("2100-01-01 08:30:00").is_some());
        assert!(parse_timestamp("2100-01-01T08:30:00").is_some());
        assert!(parse_timestamp("01/01/2100").is_none());
    }

    proptest::proptest! {
        #[test]
        fn dedup_idempotent_and_first_occurrence_ordered(
            rows in proptest::collection::vec((0u8..4, 0u8..4), 0..40)
        ) {
            let once = dedup_codes(&rows);
            proptest::prop_assert_eq!(dedup_codes(&once), once.clone());
            let mut seen = HashSet::new();
            let expected: Vec<_> = rows.iter().filter(|r| seen.insert(**r)).cloned().collect();
            proptest::prop_assert_eq!(once, expected);
        }
    }
}
