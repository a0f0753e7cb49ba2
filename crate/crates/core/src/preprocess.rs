//! Event-value cleaning: zero removal, plausibility screening, blood-pressure
//! swap correction, optional IQR outlier removal and per-admission averaging.
//!
//! The order is fixed: [`clean_events`], then (when enabled) the IQR fences
//! per lab item over the whole cohort, then [`aggregate_mean`].

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EventItem, EventRow};
use crate::variables::{event_variable, EventSource, DIASTOLIC_BP, SYSTOLIC_BP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityRange {
    pub item_id: String,
    pub min: f64,
    pub max: f64,
}

impl PlausibilityRange {
    pub fn new(item_id: impl Into<String>, min: f64, max: f64) -> Result<Self> {
        let item_id = item_id.into();
        if !(min < max) {
            return Err(Error::Config(format!(
                "plausibility range for item {item_id}: min {min} must be below max {max}"
            )));
        }
        Ok(PlausibilityRange { item_id, min, max })
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }
}

/// Quartile estimator used for the IQR fences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QuartileMethod {
    /// Linear interpolation between order statistics at q·(n−1).
    #[default]
    LinearInterpolation,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleanConfig {
    pub ranges: Vec<PlausibilityRange>,
    pub remove_outliers: bool,
    pub quartile_method: QuartileMethod,
    pub systolic_item: Option<String>,
    pub diastolic_item: Option<String>,
}

impl CleanConfig {
    /// Default plausibility bounds from the variable catalog, resolved to the
    /// item ids of this dictionary.
    pub fn from_items(items: &[EventItem]) -> Self {
        let mut config = CleanConfig::default();
        for item in items {
            if let Some(var) = event_variable(&item.name) {
                config.ranges.push(PlausibilityRange {
                    item_id: item.item_id.clone(),
                    min: var.plausible.0,
                    max: var.plausible.1,
                });
            }
            if item.name == SYSTOLIC_BP {
                config.systolic_item = Some(item.item_id.clone());
            } else if item.name == DIASTOLIC_BP {
                config.diastolic_item = Some(item.item_id.clone());
            }
        }
        config
    }

    pub fn with_outlier_removal(mut self, on: bool) -> Self {
        self.remove_outliers = on;
        self
    }

    /// Replaces the plausibility ranges with those from a `item_id,min,max`
    /// file.
    pub fn with_ranges_file(mut self, path: &Path) -> Result<Self> {
        self.ranges = read_ranges(path)?;
        Ok(self)
    }
}

pub fn read_ranges(path: &Path) -> Result<Vec<PlausibilityRange>> {
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<PlausibilityRange>() {
        let r = row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        out.push(PlausibilityRange::new(r.item_id, r.min, r.max)?);
    }
    Ok(out)
}

pub fn write_ranges(path: &Path, ranges: &[PlausibilityRange]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in ranges {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Row counts touched by each cleaning rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningReport {
    pub zero_lab_values: usize,
    pub implausible_values: usize,
    pub bp_pairs_swapped: usize,
    pub iqr_outliers: usize,
    /// Repeated diagnosis and DRG rows dropped before cohort selection.
    pub duplicate_code_rows: usize,
    /// Cohort admissions whose recorded age was masked and restored.
    pub masked_ages_restored: usize,
}

impl CleaningReport {
    pub fn rows(&self) -> [(&'static str, usize, usize); 6] {
        [
            ("duplicate_code_row", self.duplicate_code_rows, 0),
            ("masked_age", 0, self.masked_ages_restored),
            ("zero_lab_value", self.zero_lab_values, 0),
            ("implausible_value", self.implausible_values, 0),
            ("reversed_blood_pressure", 0, self.bp_pairs_swapped),
            ("iqr_outlier", self.iqr_outliers, 0),
        ]
    }

    /// Delimited summary: `rule,rows_removed,rows_corrected`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rule", "rows_removed", "rows_corrected"])?;
        for (rule, removed, corrected) in self.rows() {
            w.write_record([rule.to_string(), removed.to_string(), corrected.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<cleaning report>", e))?;
        Ok(())
    }
}

/// Applies the row-level rules in order: zero lab values, plausibility
/// ranges, reversed blood-pressure pairs.
pub fn clean_events(events: Vec<EventRow>, config: &CleanConfig) -> (Vec<EventRow>, CleaningReport) {
    let mut report = CleaningReport::default();
    let ranges: HashMap<&str, &PlausibilityRange> =
        config.ranges.iter().map(|r| (r.item_id.as_str(), r)).collect();

    let mut kept = Vec::with_capacity(events.len());
    for e in events {
        if e.source == EventSource::Lab && e.value == 0.0 {
            report.zero_lab_values += 1;
            continue;
        }
        if let Some(r) = ranges.get(e.item_id.as_str()) {
            if !r.contains(e.value) {
                report.implausible_values += 1;
                continue;
            }
        }
        kept.push(e);
    }

    if let (Some(sys), Some(dia)) = (&config.systolic_item, &config.diastolic_item) {
        report.bp_pairs_swapped = swap_reversed_pressures(&mut kept, sys, dia);
    }
    (kept, report)
}

// Pairs systolic/diastolic rows sharing (admission, timestamp) in order of
// appearance and swaps values where diastolic exceeds systolic.
fn swap_reversed_pressures(events: &mut [EventRow], systolic: &str, diastolic: &str) -> usize {
    let mut slots: BTreeMap<(&str, chrono::NaiveDateTime), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        let key = (e.admission_id.as_str(), e.timestamp);
        if e.item_id == systolic {
            slots.entry(key).or_default().0.push(i);
        } else if e.item_id == diastolic {
            slots.entry(key).or_default().1.push(i);
        }
    }
    let pairs: Vec<(usize, usize)> = slots
        .into_values()
        .flat_map(|(s, d)| s.into_iter().zip(d))
        .collect();
    let mut swapped = 0;
    for (s, d) in pairs {
        if events[d].value > events[s].value {
            let tmp = events[s].value;
            events[s].value = events[d].value;
            events[d].value = tmp;
            swapped += 1;
        }
    }
    swapped
}

/// Quartile of an ascending-sorted, nonempty sample.
pub fn quartile(sorted: &[f64], q: f64, method: QuartileMethod) -> f64 {
    match method {
        QuartileMethod::LinearInterpolation => {
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

/// Tukey fences `(Q1 − 1.5·IQR, Q3 + 1.5·IQR)`.
pub fn iqr_fences(values: &[f64], method: QuartileMethod) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Validation("IQR filter needs at least one value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quartile(&sorted, 0.25, method);
    let q3 = quartile(&sorted, 0.75, method);
    let iqr = q3 - q1;
    Ok((q1 - 1.5 * iqr, q3 + 1.5 * iqr))
}

/// Keeps the values inside the Tukey fences, preserving input order.
pub fn iqr_filter(values: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = iqr_fences(values, QuartileMethod::LinearInterpolation)?;
    Ok(values.iter().copied().filter(|v| lo <= *v && *v <= hi).collect())
}

/// Arithmetic mean per (admission_id, item_id).
pub fn aggregate_mean(events: &[EventRow]) -> BTreeMap<(String, String), f64> {
    let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for e in events {
        let slot = acc
            .entry((e.admission_id.clone(), e.item_id.clone()))
            .or_insert((0.0, 0));
        slot.0 += e.value;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / n as f64))
        .collect()
}

/// The full fixed pipeline over a cohort's events.
pub fn clean_and_average(
    events: Vec<EventRow>,
    items: &[EventItem],
    config: &CleanConfig,
) -> Result<(BTreeMap<(String, String), f64>, CleaningReport)> {
    let (mut events, mut report) = clean_events(events, config);
    if config.remove_outliers {
        let lab_items: Vec<&str> = items
            .iter()
            .filter(|i| i.source == EventSource::Lab)
            .map(|i| i.item_id.as_str())
            .collect();
        let mut fences: HashMap<&str, (f64, f64)> = HashMap::new();
        for item in lab_items {
            let values: Vec<f64> = events
                .iter()
                .filter(|e| e.item_id == item)
                .map(|e| e.value)
                .collect();
            if !values.is_empty() {
                fences.insert(item, iqr_fences(&values, config.quartile_method)?);
            }
        }
        let before = events.len();
        events.retain(|e| match fences.get(e.item_id.as_str()) {
            Some((lo, hi)) => *lo <= e.value && e.value <= *hi,
            None => true,
        });
        report.iqr_outliers = before - events.len();
    }
    Ok((aggregate_mean(&events), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use proptest::prelude::*;

    fn ev(adm: &str, item: &str, value: f64, ts: &str, source: EventSource) -> EventRow {
        EventRow {
            admission_id: adm.into(),
            item_id: item.into(),
            value,
            unit: String::new(),
            timestamp: parse_timestamp(ts).unwrap(),
            source,
        }
    }

    fn bp_config() -> CleanConfig {
        CleanConfig {
            ranges: vec![PlausibilityRange::new("hr", 20.0, 300.0).unwrap()],
            systolic_item: Some("sbp".into()),
            diastolic_item: Some("dbp".into()),
            ..Default::default()
        }
    }

    // Brute-force fence check: each value is compared against fences computed
    // from explicitly enumerated order statistics.
    fn fence_oracle(values: &[f64]) -> (f64, f64) {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let lo = p.floor() as usize;
            if lo + 1 >= s.len() {
                s[s.len() - 1]
            } else {
                s[lo] * (1.0 - (p - lo as f64)) + s[lo + 1] * (p - lo as f64)
            }
        };
        let n1 = (s.len() - 1) as f64;
        let (q1, q3) = (at(0.25 * n1), at(0.75 * n1));
        (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1))
    }

    #[test]
    fn iqr_examples() {
        assert_eq!(iqr_fences(&[1.0, 2.0, 3.0, 4.0, 100.0], QuartileMethod::default()).unwrap(), (-1.0, 7.0));
        assert_eq!(iqr_filter(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(iqr_filter(&[5.0; 4]).unwrap(), vec![5.0; 4]);
        assert_eq!(iqr_filter(&[10.0]).unwrap(), vec![10.0]);
        assert!(matches!(iqr_filter(&[]), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_lab_values_removed_but_not_chart() {
        let events = vec![
            ev("A", "trop", 0.0, "2100-01-01", EventSource::Lab),
            ev("A", "trop", 0.4, "2100-01-01", EventSource::Lab),
            ev("A", "rr", 0.0, "2100-01-01", EventSource::Chart),
        ];
        let (kept, report) = clean_events(events, &CleanConfig::default());
        assert_eq!(report.zero_lab_values, 1);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn reversed_pressure_pair_swapped() {
        let events = vec![
            ev("A", "sbp", 80.0, "2100-01-01 10:00:00", EventSource::Chart),
            ev("A", "dbp", 120.0, "2100-01-01 10:00:00", EventSource::Chart),
            ev("A", "sbp", 130.0, "2100-01-01 11:00:00", EventSource::Chart),
            ev("A", "dbp", 70.0, "2100-01-01 11:00:00", EventSource::Chart),
            // different timestamp: not a pair
            ev("A", "dbp", 140.0, "2100-01-01 12:00:00", EventSource::Chart),
        ];
        let (kept, report) = clean_events(events, &bp_config());
        assert_eq!(report.bp_pairs_swapped, 1);
        let vals: Vec<f64> = kept.iter().map(|e| e.value).collect();
        assert_eq!(vals, vec![120.0, 80.0, 130.0, 70.0, 140.0]);
    }

    #[test]
    fn implausible_heart_rate_removed() {
        let events = vec![
            ev("A", "hr", 600.0, "2100-01-01", EventSource::Chart),
            ev("A", "hr", 88.0, "2100-01-01", EventSource::Chart),
        ];
        let (kept, report) = clean_events(events, &bp_config());
        assert_eq!(report.implausible_values, 1);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].value, 88.0);
    }

    #[test]
    fn mean_examples() {
        let events = vec![
            ev("A", "x", 2.0, "2100-01-01", EventSource::Lab),
            ev("A", "x", 4.0, "2100-01-01", EventSource::Lab),
            ev("A", "x", 6.0, "2100-01-01", EventSource::Lab),
            ev("B", "x", 7.3, "2100-01-01", EventSource::Lab),
            ev("C", "x", 0.0, "2100-01-01", EventSource::Lab),
        ];
        let (kept, _) = clean_events(events, &CleanConfig::default());
        let means = aggregate_mean(&kept);
        assert_eq!(means[&("A".into(), "x".into())], 4.0);
        assert_eq!(means[&("B".into(), "x".into())], 7.3);
        assert!(!means.contains_key(&("C".to_string(), "x".to_string())));
    }

    #[test]
    fn bad_range_rejected() {
        assert!(PlausibilityRange::new("x", 5.0, 5.0).is_err());
    }

    #[test]
    fn ranges_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranges.csv");
        let ranges = vec![
            PlausibilityRange::new("220045", 20.0, 300.0).unwrap(),
            PlausibilityRange::new("50912", 0.1, 25.0).unwrap(),
        ];
        write_ranges(&path, &ranges).unwrap();
        assert_eq!(read_ranges(&path).unwrap(), ranges);
    }

    #[test]
    fn report_csv_layout() {
        let mut buf = Vec::new();
        CleaningReport {
            zero_lab_values: 3,
            implausible_values: 2,
            bp_pairs_swapped: 1,
            iqr_outliers: 0,
            duplicate_code_rows: 5,
            masked_ages_restored: 4,
        }
        .write_csv(&mut buf)
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "rule,rows_removed,rows_corrected\nduplicate_code_row,5,0\nmasked_age,0,4\nzero_lab_value,3,0\nimplausible_value,2,0\nreversed_blood_pressure,0,1\niqr_outlier,0,0\n"
        );
    }

    proptest! {
        #[test]
        fn iqr_filter_matches_fence_oracle(values in prop::collection::vec(-1e3f64..1e3, 1..60)) {
            let kept = iqr_filter(&values).unwrap();
            let (lo, hi) = fence_oracle(&values);
            let expected: Vec<f64> = values.iter().copied().filter(|v| lo - 1e-9 <= *v && *v <= hi + 1e-9).collect();
            prop_assert_eq!(&kept, &expected);
            for v in &values {
                prop_assert_eq!(kept.contains(v), lo <= *v && *v <= hi);
            }
        }

        #[test]
        fn cleaning_only_removes_or_swaps(
            raw in prop::collection::vec((0usize..3, 0usize..3, 0u8..4, 0.0f64..400.0), 0..50)
        ) {
            let items = ["sbp", "dbp", "hr"];
            let events: Vec<EventRow> = raw
                .iter()
                .map(|(a, it, t, v)| {
                    let src = if *it == 2 { EventSource::Lab } else { EventSource::Chart };
                    ev(&format!("A{a}"), items[*it], if *t == 3 { 0.0 } else { v.round() },
                       &format!("2100-01-01 0{t}:00:00"), src)
                })
                .collect();
            let (kept, _) = clean_events(events.clone(), &bp_config());
            // multiset of values per (admission, timestamp) slot is preserved by swaps
            let mut pool: Vec<(String, chrono::NaiveDateTime, u64)> =
                events.iter().map(|e| (e.admission_id.clone(), e.timestamp, e.value.to_bits())).collect();
            for e in &kept {
                let pos = pool.iter().position(|p| p.0 == e.admission_id && p.1 == e.timestamp && p.2 == e.value.to_bits());
                prop_assert!(pos.is_some());
                pool.swap_remove(pos.unwrap());
            }
            let (again, _) = clean_events(events, &bp_config());
            prop_assert_eq!(kept, again);
        }
    }
}
