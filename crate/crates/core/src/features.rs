//! The six dataset kinds as numeric matrices, with one-hot categoricals,
//! presence flags, missing-value masks and a train-only standardizer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::cohort::{AdmissionCase, Gender};
use crate::error::{Error, Result};
use crate::variables::{ComorbidityGroup, Treatment, COMORBIDITY_GROUPS, EVENT_VARIABLES, TREATMENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Admission,
    Demographics,
    Treatment,
    Diagnostic,
    LabChart,
    Combined,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 6] = [
        DatasetKind::Admission,
        DatasetKind::Demographics,
        DatasetKind::Treatment,
        DatasetKind::Diagnostic,
        DatasetKind::LabChart,
        DatasetKind::Combined,
    ];

    /// The five single-source groups, in combined-column order.
    pub const GROUPS: [DatasetKind; 5] = [
        DatasetKind::Admission,
        DatasetKind::Demographics,
        DatasetKind::Treatment,
        DatasetKind::Diagnostic,
        DatasetKind::LabChart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Admission => "admission",
            DatasetKind::Demographics => "demographics",
            DatasetKind::Treatment => "treatment",
            DatasetKind::Diagnostic => "diagnostic",
            DatasetKind::LabChart => "lab_chart",
            DatasetKind::Combined => "combined",
        }
    }

    pub fn groups(self) -> &'static [DatasetKind] {
        match self {
            DatasetKind::Combined => &Self::GROUPS,
            DatasetKind::Admission => &[DatasetKind::Admission],
            DatasetKind::Demographics => &[DatasetKind::Demographics],
            DatasetKind::Treatment => &[DatasetKind::Treatment],
            DatasetKind::Diagnostic => &[DatasetKind::Diagnostic],
            DatasetKind::LabChart => &[DatasetKind::LabChart],
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let norm: Vec<&str> = lower.split(|c: char| !c.is_ascii_alphanumeric()).filter(|t| !t.is_empty()).collect();
        match norm.join("_").as_str() {
            "admission" => Ok(DatasetKind::Admission),
            "demographics" => Ok(DatasetKind::Demographics),
            "treatment" => Ok(DatasetKind::Treatment),
            "diagnostic" | "comorbidities" => Ok(DatasetKind::Diagnostic),
            "lab_chart" | "labchart" | "lab_chart_values" => Ok(DatasetKind::LabChart),
            "combined" => Ok(DatasetKind::Combined),
            _ => Err(Error::Validation(format!("unknown dataset kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Encoding {
    Numeric,
    OneHot { field: String, level: String },
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub group: DatasetKind,
    pub encoding: Encoding,
}

impl FeatureDescriptor {
    pub fn is_numeric(&self) -> bool {
        self.encoding == Encoding::Numeric
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub kind: DatasetKind,
    pub features: Vec<FeatureDescriptor>,
    /// Levels per categorical field, in column order.
    pub levels: BTreeMap<String, Vec<String>>,
}

const BLANK_LEVEL: &str = "UNKNOWN";

fn level_of(raw: &str) -> String {
    let t = raw.trim();
    if t.is_empty() {
        BLANK_LEVEL.to_string()
    } else {
        t.to_string()
    }
}

fn categorical_value(case: &AdmissionCase, field: &str) -> Option<String> {
    let a = &case.admission;
    Some(match field {
        "admission_month" => format!("{:02}", a.admission_month),
        "discharge_location" => level_of(&a.discharge_location),
        "gender" => case.patient.gender.as_str().to_string(),
        "religion" => level_of(&a.religion),
        "ethnicity" => level_of(&a.ethnicity),
        "marital_status" => level_of(&a.marital_status),
        _ => return None,
    })
}

fn lab_column(name: &str) -> String {
    format!("event:{name}")
}

impl FeatureSchema {
    /// Derives the column layout for `kind` from the observed cases.
    pub fn fit(cases: &[AdmissionCase], kind: DatasetKind) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Validation("cannot build a dataset from zero cases".into()));
        }
        let mut schema = FeatureSchema {
            kind,
            features: Vec::new(),
            levels: BTreeMap::new(),
        };
        for &group in kind.groups() {
            match group {
                DatasetKind::Admission => {
                    schema.push_numeric("total_days", group);
                    schema.push_categorical(cases, "admission_month", group, None);
                    schema.push_categorical(cases, "discharge_location", group, None);
                    schema.push_flag("er_initial_ami", group);
                }
                DatasetKind::Demographics => {
                    schema.push_numeric("age", group);
                    schema.push_categorical(
                        cases,
                        "gender",
                        group,
                        Some(vec![Gender::M.as_str().into(), Gender::F.as_str().into()]),
                    );
                    schema.push_categorical(cases, "religion", group, None);
                    schema.push_categorical(cases, "ethnicity", group, None);
                    schema.push_categorical(cases, "marital_status", group, None);
                }
                DatasetKind::Treatment => {
                    for t in TREATMENTS {
                        schema.push_flag(&format!("treatment:{t}"), group);
                    }
                }
                DatasetKind::Diagnostic => {
                    for c in COMORBIDITY_GROUPS {
                        schema.push_flag(&format!("comorbidity:{c}"), group);
                    }
                }
                DatasetKind::LabChart => {
                    for var in &EVENT_VARIABLES {
                        if cases.iter().any(|c| c.event_means.contains_key(var.name)) {
                            schema.push_numeric(&lab_column(var.name), group);
                        }
                    }
                }
                DatasetKind::Combined => unreachable!("combined is not a group"),
            }
        }
        Ok(schema)
    }

    fn push_numeric(&mut self, name: &str, group: DatasetKind) {
        self.features.push(FeatureDescriptor {
            name: name.to_string(),
            group,
            encoding: Encoding::Numeric,
        });
    }

    fn push_flag(&mut self, name: &str, group: DatasetKind) {
        self.features.push(FeatureDescriptor {
            name: name.to_string(),
            group,
            encoding: Encoding::Flag,
        });
    }

    fn push_categorical(
        &mut self,
        cases: &[AdmissionCase],
        field: &str,
        group: DatasetKind,
        fixed: Option<Vec<String>>,
    ) {
        let levels = fixed.unwrap_or_else(|| {
            cases
                .iter()
                .filter_map(|c| categorical_value(c, field))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        });
        for level in &levels {
            self.features.push(FeatureDescriptor {
                name: format!("{field}={level}"),
                group,
                encoding: Encoding::OneHot {
                    field: field.to_string(),
                    level: level.clone(),
                },
            });
        }
        self.levels.insert(field.to_string(), levels);
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// Column indices belonging to one source group.
    pub fn group_columns(&self, group: DatasetKind) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.group == group)
            .map(|(i, _)| i)
            .collect()
    }

    /// Which columns are numeric (the ones gradient learners standardize).
    pub fn numeric_mask(&self) -> Vec<bool> {
        self.features.iter().map(|f| f.is_numeric()).collect()
    }

    /// Indicator vector for a categorical field; all zeros for a level not
    /// seen when the schema was fit.
    pub fn encode_categorical(&self, field: &str, value: &str) -> Result<Vec<f64>> {
        let levels = self
            .levels
            .get(field)
            .ok_or_else(|| Error::Contract(format!("'{field}' is not a categorical field of this schema")))?;
        Ok(levels.iter().map(|l| if l == value { 1.0 } else { 0.0 }).collect())
    }

    /// Encodes one case; missing numeric cells come back as NaN with the
    /// mask set.
    pub fn encode_case(&self, case: &AdmissionCase) -> (Vec<f64>, Vec<bool>) {
        let mut row = Vec::with_capacity(self.len());
        let mut missing = Vec::with_capacity(self.len());
        for f in &self.features {
            let value = match &f.encoding {
                Encoding::OneHot { field, level } => {
                    let v = categorical_value(case, field).unwrap_or_default();
                    Some(if &v == level { 1.0 } else { 0.0 })
                }
                Encoding::Flag => Some(if flag_value(case, &f.name) { 1.0 } else { 0.0 }),
                Encoding::Numeric => numeric_value(case, &f.name),
            };
            missing.push(value.is_none());
            row.push(value.unwrap_or(f64::NAN));
        }
        (row, missing)
    }
}

fn flag_value(case: &AdmissionCase, name: &str) -> bool {
    if name == "er_initial_ami" {
        return case.admission.er_initial_ami_flag;
    }
    if let Some(slug) = name.strip_prefix("treatment:") {
        return Treatment::from_slug(slug).is_some_and(|t| case.treatments.contains(&t));
    }
    if let Some(slug) = name.strip_prefix("comorbidity:") {
        return ComorbidityGroup::from_slug(slug).is_some_and(|g| case.comorbidity_groups.contains(&g));
    }
    false
}

fn numeric_value(case: &AdmissionCase, name: &str) -> Option<f64> {
    match name {
        "total_days" => Some(case.admission.total_days),
        "age" => Some(case.age_at_admission),
        _ => name
            .strip_prefix("event:")
            .and_then(|var| case.event_means.get(var).copied()),
    }
}

/// Feature rows plus binary labels (`true` = died within a year).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub rows: Array2<f64>,
    pub labels: Vec<bool>,
    pub missing: Array2<bool>,
}

impl FeatureMatrix {
    pub fn new(schema: FeatureSchema, rows: Array2<f64>, labels: Vec<bool>, missing: Array2<bool>) -> Result<Self> {
        if rows.nrows() != labels.len() || rows.dim() != missing.dim() || rows.ncols() != schema.len() {
            return Err(Error::Contract(format!(
                "feature matrix shape mismatch: rows {:?}, labels {}, mask {:?}, schema {}",
                rows.dim(),
                labels.len(),
                missing.dim(),
                schema.len()
            )));
        }
        Ok(FeatureMatrix {
            schema,
            rows,
            labels,
            missing,
        })
    }

    /// Fully observed matrix with an all-numeric schema; mostly for tests
    /// and synthetic benchmarks.
    pub fn from_numeric(rows: Array2<f64>, labels: Vec<bool>) -> Result<Self> {
        let features = (0..rows.ncols())
            .map(|j| FeatureDescriptor {
                name: format!("x{j}"),
                group: DatasetKind::Combined,
                encoding: Encoding::Numeric,
            })
            .collect();
        let missing = Array2::from_elem(rows.dim(), false);
        let schema = FeatureSchema {
            kind: DatasetKind::Combined,
            features,
            levels: BTreeMap::new(),
        };
        FeatureMatrix::new(schema, rows, labels, missing)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            schema: self.schema.clone(),
            rows: self.rows.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            missing: self.missing.select(Axis(0), idx),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut schema = self.schema.clone();
        schema.features = cols.iter().map(|&j| self.schema.features[j].clone()).collect();
        let kept: BTreeSet<&str> = schema
            .features
            .iter()
            .filter_map(|f| match &f.encoding {
                Encoding::OneHot { field, .. } => Some(field.as_str()),
                _ => None,
            })
            .collect();
        schema.levels.retain(|k, _| kept.contains(k.as_str()));
        FeatureMatrix {
            schema,
            rows: self.rows.select(Axis(1), cols),
            labels: self.labels.clone(),
            missing: self.missing.select(Axis(1), cols),
        }
    }

    /// Header = feature names then `label`; missing cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.schema.names().collect();
        header.push("label");
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = (0..self.n_features())
                .map(|j| {
                    if self.missing[[i, j]] {
                        String::new()
                    } else {
                        format_float(self.rows[[i, j]])
                    }
                })
                .collect();
            rec.push(if self.labels[i] { "1".into() } else { "0".into() });
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature matrix>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().last() != Some("label") {
            return Err(Error::MalformedRow {
                table: "feature matrix".into(),
                line: 1,
                reason: "final column must be 'label'".into(),
            });
        }
        let names: Vec<String> = header.iter().take(header.len() - 1).map(String::from).collect();
        let schema = schema_from_names(&names);
        let p = names.len();
        let mut values = Vec::new();
        let mut mask = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| Error::MalformedRow {
                table: "feature matrix".into(),
                line,
                reason,
            };
            for j in 0..p {
                let cell = rec.get(j).unwrap_or("");
                if cell.is_empty() {
                    values.push(f64::NAN);
                    mask.push(true);
                } else {
                    values.push(cell.parse::<f64>().map_err(|_| bad(format!("bad number '{cell}'")))?);
                    mask.push(false);
                }
            }
            labels.push(match rec.get(p) {
                Some("1") => true,
                Some("0") => false,
                other => return Err(bad(format!("bad label {other:?}"))),
            });
        }
        let n = labels.len();
        let rows = Array2::from_shape_vec((n, p), values).map_err(|e| Error::Contract(e.to_string()))?;
        let missing = Array2::from_shape_vec((n, p), mask).map_err(|e| Error::Contract(e.to_string()))?;
        FeatureMatrix::new(schema, rows, labels, missing)
    }
}

/// Shortest representation that parses back to the same f64.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn group_of_name(name: &str) -> DatasetKind {
    let field = name.split('=').next().unwrap_or(name);
    match field {
        "total_days" | "admission_month" | "discharge_location" | "er_initial_ami" => DatasetKind::Admission,
        "age" | "gender" | "religion" | "ethnicity" | "marital_status" => DatasetKind::Demographics,
        _ if name.starts_with("treatment:") => DatasetKind::Treatment,
        _ if name.starts_with("comorbidity:") => DatasetKind::Diagnostic,
        _ if name.starts_with("event:") => DatasetKind::LabChart,
        _ => DatasetKind::Combined,
    }
}

fn schema_from_names(names: &[String]) -> FeatureSchema {
    let mut features = Vec::with_capacity(names.len());
    let mut levels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in names {
        let group = group_of_name(name);
        let encoding = if let Some((field, level)) = name.split_once('=') {
            levels.entry(field.to_string()).or_default().push(level.to_string());
            Encoding::OneHot {
                field: field.to_string(),
                level: level.to_string(),
            }
        } else if name == "er_initial_ami" || name.starts_with("treatment:") || name.starts_with("comorbidity:") {
            Encoding::Flag
        } else {
            Encoding::Numeric
        };
        features.push(FeatureDescriptor {
            name: name.clone(),
            group,
            encoding,
        });
    }
    let groups: BTreeSet<DatasetKind> = features.iter().map(|f| f.group).collect();
    let kind = match groups.iter().collect::<Vec<_>>().as_slice() {
        [single] => **single,
        _ => DatasetKind::Combined,
    };
    FeatureSchema { kind, features, levels }
}

/// Builds the matrix for one dataset kind from cohort cases.
pub fn build_dataset(cases: &[AdmissionCase], kind: DatasetKind) -> Result<FeatureMatrix> {
    let schema = FeatureSchema::fit(cases, kind)?;
    let p = schema.len();
    let mut values = Vec::with_capacity(cases.len() * p);
    let mut mask = Vec::with_capacity(cases.len() * p);
    for case in cases {
        let (row, miss) = schema.encode_case(case);
        values.extend(row);
        mask.extend(miss);
    }
    let n = cases.len();
    let rows = Array2::from_shape_vec((n, p), values).map_err(|e| Error::Contract(e.to_string()))?;
    let missing = Array2::from_shape_vec((n, p), mask).map_err(|e| Error::Contract(e.to_string()))?;
    let labels = cases.iter().map(|c| c.label.is_positive()).collect();
    FeatureMatrix::new(schema, rows, labels, missing)
}

/// Train-fold column statistics: mean imputation for every column and
/// z-scoring for the selected columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviation; 1.0 for unscaled or constant columns.
    pub scales: Vec<f64>,
    pub scaled: Vec<bool>,
}

impl Standardizer {
    /// Fits on training rows only. Missing cells are ignored for the
    /// statistics; a column with no observed value imputes 0.
    pub fn fit(rows: ArrayView2<f64>, missing: ArrayView2<bool>, scaled: &[bool]) -> Self {
        let p = rows.ncols();
        let mut means = vec![0.0; p];
        let mut scales = vec![1.0; p];
        for j in 0..p {
            let observed: Vec<f64> = rows
                .column(j)
                .iter()
                .zip(missing.column(j))
                .filter(|(_, m)| !**m)
                .map(|(v, _)| *v)
                .collect();
            if observed.is_empty() {
                continue;
            }
            let n = observed.len() as f64;
            let mean = observed.iter().sum::<f64>() / n;
            means[j] = mean;
            if scaled[j] {
                let var = observed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-12 * mean.abs().max(1.0) {
                    scales[j] = sd;
                }
            }
        }
        Standardizer {
            means,
            scales,
            scaled: scaled.to_vec(),
        }
    }

    /// Every column scaled, nothing missing.
    pub fn fit_dense(rows: ArrayView2<f64>) -> Self {
        let missing = Array2::from_elem(rows.dim(), false);
        Self::fit(rows, missing.view(), &vec![true; rows.ncols()])
    }

    pub fn apply(&self, rows: ArrayView2<f64>, missing: ArrayView2<bool>) -> Array2<f64> {
        let mut out = rows.to_owned();
        for ((i, j), v) in out.indexed_iter_mut() {
            if missing[[i, j]] || !v.is_finite() {
                *v = self.means[j];
            }
            if self.scaled[j] {
                *v = (*v - self.means[j]) / self.scales[j];
            }
        }
        out
    }

    pub fn apply_row(&self, row: &[f64], missing: &[bool]) -> Vec<f64> {
        row.iter()
            .zip(missing)
            .enumerate()
            .map(|(j, (&v, &m))| {
                let v = if m || !v.is_finite() { self.means[j] } else { v };
                if self.scaled[j] {
                    (v - self.means[j]) / self.scales[j]
                } else {
                    v
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn standardizer_example_column() {
        let train = array![[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]];
        let s = Standardizer::fit_dense(train.view());
        let out = s.apply(train.view(), Array2::from_elem((3, 2), false).view());
        // mean 4, population sd sqrt(8/3)
        let sd = (8.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(sd, 1.63299, epsilon = 1e-5);
        assert_abs_diff_eq!(out[[0, 0]], -2.0 / sd, epsilon = 1e-12);
        assert_abs_diff_eq!(out[[0, 0]], -1.2247, epsilon = 1e-4);
        assert_abs_diff_eq!(out[[1, 0]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[[2, 0]], 1.2247, epsilon = 1e-4);
        assert_eq!(out.column(1).to_vec(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.apply_row(&[4.0, 5.0], &[false, false]), vec![0.0, 0.0]);
    }

    #[test]
    fn standardizer_imputes_with_train_mean() {
        let train = array![[1.0], [f64::NAN], [3.0]];
        let mask = array![[false], [true], [false]];
        let s = Standardizer::fit(train.view(), mask.view(), &[false]);
        assert_eq!(s.means, vec![2.0]);
        let out = s.apply(train.view(), mask.view());
        assert_eq!(out.column(0).to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn dataset_kind_parsing() {
        assert_eq!("lab_chart".parse::<DatasetKind>().unwrap(), DatasetKind::LabChart);
        assert_eq!("Lab & Chart".parse::<DatasetKind>().unwrap(), DatasetKind::LabChart);
        assert!(matches!("vitals".parse::<DatasetKind>(), Err(Error::Validation(_))));
    }

    #[test]
    fn schema_from_header_names() {
        let names: Vec<String> = ["age", "gender=M", "gender=F", "treatment:valve_with_cath", "event:sodium"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let s = schema_from_names(&names);
        assert_eq!(s.kind, DatasetKind::Combined);
        assert_eq!(s.levels["gender"], vec!["M".to_string(), "F".to_string()]);
        assert_eq!(s.features[3].encoding, Encoding::Flag);
        assert_eq!(s.features[4].group, DatasetKind::LabChart);
    }
}
