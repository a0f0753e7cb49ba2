//! Fixed variable catalog for the six dataset kinds: the treatment DRG
//! categories, the comorbidity groups, and the averaged lab and chart items.

use std::fmt;

use serde::{Deserialize, Serialize};

/// DRG procedure categories used as treatment flags.
pub const TREATMENTS: [&str; 21] = [
    "cardiac_catheterization",
    "defibrillator_heart_assist_anomaly",
    "defibrillator_implant_with_cath",
    "defibrillator_implant_without_cath",
    "valve_major_cardiothoracic_with_cath",
    "valve_major_cardiothoracic_without_cath",
    "valve_with_cath",
    "valve_without_cath",
    "bypass_with_cath",
    "bypass_with_cath_or_pci",
    "bypass_with_ptca",
    "bypass_without_cath",
    "bypass_without_cath_or_pci",
    "other_pacemaker_implantation",
    "other_major_cardiovascular",
    "pacemaker_or_ptca_with_stent",
    "pci_drug_eluting_stent",
    "pci_non_drug_eluting_stent",
    "pci_without_stent",
    "percutaneous_cardiovascular",
    "permanent_pacemaker_implant",
];

/// DRG diagnostic groups used as comorbidity flags.
pub const COMORBIDITY_GROUPS: [&str; 13] = [
    "cancer",
    "endocrinology",
    "gastroenterology",
    "genitourinary",
    "hematological",
    "infection",
    "liver_kidney",
    "neurological",
    "orthopaedic",
    "other_cardiovascular",
    "other_comorbidities",
    "respiratory",
    "toxicity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Treatment(usize);

impl Treatment {
    pub fn from_slug(slug: &str) -> Option<Self> {
        TREATMENTS.iter().position(|t| *t == slug).map(Treatment)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn name(self) -> &'static str {
        TREATMENTS[self.0]
    }

    pub fn all() -> impl Iterator<Item = Treatment> {
        (0..TREATMENTS.len()).map(Treatment)
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ComorbidityGroup(usize);

impl ComorbidityGroup {
    pub fn from_slug(slug: &str) -> Option<Self> {
        COMORBIDITY_GROUPS
            .iter()
            .position(|t| *t == slug)
            .map(ComorbidityGroup)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn name(self) -> &'static str {
        COMORBIDITY_GROUPS[self.0]
    }

    pub fn all() -> impl Iterator<Item = ComorbidityGroup> {
        (0..COMORBIDITY_GROUPS.len()).map(ComorbidityGroup)
    }
}

impl fmt::Display for ComorbidityGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventSource {
    Lab,
    Chart,
}

impl EventSource {
    pub fn as_str(self) -> &'static str {
        match self {
            EventSource::Lab => "lab",
            EventSource::Chart => "chart",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lab" => Some(EventSource::Lab),
            "chart" => Some(EventSource::Chart),
            _ => None,
        }
    }
}

/// One averaged lab or chart variable.
#[derive(Debug, Clone, Copy)]
pub struct EventVariable {
    pub name: &'static str,
    pub source: EventSource,
    pub unit: &'static str,
    /// Default plausibility bounds in `unit`.
    pub plausible: (f64, f64),
    /// Median of the synthetic log-normal distribution.
    pub median: f64,
    /// Log-scale spread of the synthetic distribution.
    pub log_sd: f64,
    /// Correlation of the log value with the lab/chart latent risk factor.
    pub loading: f64,
}

const fn lab(
    name: &'static str,
    unit: &'static str,
    lo: f64,
    hi: f64,
    median: f64,
    log_sd: f64,
    loading: f64,
) -> EventVariable {
    EventVariable {
        name,
        source: EventSource::Lab,
        unit,
        plausible: (lo, hi),
        median,
        log_sd,
        loading,
    }
}

const fn chart(
    name: &'static str,
    unit: &'static str,
    lo: f64,
    hi: f64,
    median: f64,
    log_sd: f64,
    loading: f64,
) -> EventVariable {
    EventVariable {
        name,
        source: EventSource::Chart,
        unit,
        plausible: (lo, hi),
        median,
        log_sd,
        loading,
    }
}

pub const SYSTOLIC_BP: &str = "systolic_bp";
pub const DIASTOLIC_BP: &str = "diastolic_bp";

pub const EVENT_VARIABLES: [EventVariable; 36] = [
    // lipid profile
    lab("cholesterol_ratio", "ratio", 0.5, 20.0, 4.0, 0.25, 0.0),
    lab("ldl_cholesterol", "mg/dL", 5.0, 500.0, 100.0, 0.3, -0.1),
    lab("hdl_cholesterol", "mg/dL", 5.0, 200.0, 42.0, 0.25, -0.2),
    lab("total_cholesterol", "mg/dL", 30.0, 800.0, 170.0, 0.2, -0.2),
    lab("triglycerides", "mg/dL", 10.0, 5000.0, 140.0, 0.4, 0.0),
    // liver and kidney function
    lab("alanine_transaminase", "IU/L", 1.0, 10000.0, 35.0, 0.5, 0.2),
    lab("aspartate_transaminase", "IU/L", 1.0, 20000.0, 40.0, 0.5, 0.3),
    lab("alkaline_phosphatase", "IU/L", 5.0, 3000.0, 80.0, 0.35, 0.3),
    lab("albumin", "g/dL", 0.5, 7.0, 3.5, 0.15, -0.6),
    lab("bilirubin", "mg/dL", 0.05, 60.0, 0.8, 0.45, 0.3),
    lab("blood_urea_nitrogen", "mg/dL", 1.0, 300.0, 22.0, 0.45, 0.6),
    lab("creatinine", "mg/dL", 0.1, 25.0, 1.1, 0.4, 0.55),
    lab("gamma_glutamyltransferase", "IU/L", 1.0, 5000.0, 40.0, 0.5, 0.2),
    lab("lactate_dehydrogenase", "IU/L", 20.0, 10000.0, 250.0, 0.4, 0.4),
    lab("total_protein", "g/dL", 2.0, 12.0, 6.5, 0.12, -0.3),
    // cardiac function
    lab("nt_probnp", "pg/mL", 5.0, 70000.0, 1500.0, 0.8, 0.6),
    lab("c_reactive_protein", "mg/L", 0.1, 500.0, 12.0, 0.7, 0.4),
    lab("creatine_kinase", "IU/L", 5.0, 50000.0, 250.0, 0.7, 0.1),
    lab("ck_mb", "ng/mL", 0.5, 1000.0, 12.0, 0.7, 0.1),
    lab("cortisol", "ug/dL", 0.5, 100.0, 15.0, 0.35, 0.3),
    lab("homocysteine", "umol/L", 1.0, 100.0, 12.0, 0.3, 0.3),
    lab("troponin_i", "ng/mL", 0.001, 500.0, 2.0, 0.9, 0.3),
    lab("troponin_t", "ng/mL", 0.001, 50.0, 0.5, 0.9, 0.3),
    // electrolytes
    lab("bicarbonate", "mEq/L", 5.0, 50.0, 24.0, 0.12, -0.3),
    lab("calcium", "mg/dL", 4.0, 16.0, 8.8, 0.07, -0.2),
    lab("chloride", "mEq/L", 70.0, 140.0, 103.0, 0.04, 0.0),
    lab("potassium", "mEq/L", 1.5, 9.0, 4.2, 0.12, 0.2),
    lab("sodium", "mEq/L", 110.0, 170.0, 138.0, 0.025, -0.2),
    // general
    lab("glucose", "mg/dL", 20.0, 1500.0, 130.0, 0.3, 0.3),
    lab("hematocrit", "%", 10.0, 65.0, 36.0, 0.15, -0.45),
    lab("hemoglobin", "g/dL", 3.0, 22.0, 12.0, 0.15, -0.45),
    lab("white_blood_count", "K/uL", 0.1, 200.0, 9.5, 0.35, 0.35),
    // chart values
    chart(DIASTOLIC_BP, "mmHg", 10.0, 200.0, 62.0, 0.15, -0.3),
    chart(SYSTOLIC_BP, "mmHg", 40.0, 300.0, 118.0, 0.13, -0.4),
    chart("heart_rate", "bpm", 20.0, 300.0, 82.0, 0.17, 0.4),
    chart("respiratory_rate", "insp/min", 2.0, 80.0, 18.0, 0.2, 0.4),
];

pub fn event_variable(name: &str) -> Option<&'static EventVariable> {
    EVENT_VARIABLES.iter().find(|v| v.name == name)
}


impl From<Treatment> for String {
    fn from(v: Treatment) -> String {
        v.name().to_string()
    }
}

impl TryFrom<String> for Treatment {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        Treatment::from_slug(&s).ok_or_else(|| format!("unknown treatment `{s}`"))
    }
}

impl From<ComorbidityGroup> for String {
    fn from(v: ComorbidityGroup) -> String {
        v.name().to_string()
    }
}

impl TryFrom<String> for ComorbidityGroup {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        ComorbidityGroup::from_slug(&s).ok_or_else(|| format!("unknown comorbidity group `{s}`"))
    }
}
