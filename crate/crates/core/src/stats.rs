//! Cohort summary table: positive/negative counts per subgroup, each tested
//! against its complement with a 2×2 Pearson chi-square (no continuity
//! correction, one degree of freedom).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cohort::{AdmissionCase, Gender, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution with one degree of freedom:
/// `P(X > x) = erfc(sqrt(x / 2))`.
pub fn chisq_sf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Validation(format!("chi-square statistic must be >= 0, got {x}")));
    }
    Ok(libm::erfc((x / 2.0).sqrt()))
}

/// Table `[[a, b], [c, d]]`: rows are subgroup / complement, columns are
/// positive / negative.
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<ChiSquareResult> {
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0) {
        return Err(Error::Degenerate(format!(
            "chi-square undefined for table [[{a}, {b}], [{c}, {d}]]: a marginal total is zero"
        )));
    }
    let n = (a + b + c + d) as f64;
    let cross = a as f64 * d as f64 - b as f64 * c as f64;
    let statistic = n * cross * cross / margins.iter().map(|&m| m as f64).product::<f64>();
    Ok(ChiSquareResult {
        statistic,
        df: 1,
        p_value: chisq_sf(statistic)?,
    })
}

/// Journal-style p-value text: six decimals without a leading zero, or
/// `<.00001` below that.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-5 {
        "<.00001".to_string()
    } else {
        let s = format!("{p:.6}");
        s.strip_prefix('0').map(String::from).unwrap_or(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub characteristic: String,
    pub subgroup: String,
    pub n: u64,
    pub positives: u64,
    pub positive_pct: f64,
    pub negatives: u64,
    pub negative_pct: f64,
    /// None for the overall row and for subgroups whose test is undefined.
    pub chi_square: Option<ChiSquareResult>,
}

/// Age bands on age at the admission itself.
pub const AGE_BANDS: [(&str, f64, f64); 7] = [
    ("Under 30", f64::NEG_INFINITY, 30.0),
    ("30 to 49.9", 30.0, 50.0),
    ("50 to 59.9", 50.0, 60.0),
    ("60 to 69.9", 60.0, 70.0),
    ("70 to 79.9", 70.0, 80.0),
    ("80 to 90", 80.0, 90.0),
    ("Over 90", 90.0, f64::INFINITY),
];

pub fn age_band(age: f64) -> &'static str {
    // [lo, hi) except "80 to 90", which is closed at 90.
    for (name, lo, hi) in AGE_BANDS {
        let upper_ok = if name == "80 to 90" { age <= hi } else { age < hi };
        if age >= lo && upper_ok {
            return name;
        }
    }
    "Over 90"
}

pub const ETHNICITY_GROUPS: [&str; 5] = ["Asian", "Black", "Hispanic/Latino", "Other", "White"];

/// Maps a free-text ethnicity to a reporting group; unknown, declined or
/// blank values map to None (they still count towards every complement).
pub fn ethnicity_group(raw: &str) -> Option<&'static str> {
    let s = raw.trim().to_ascii_uppercase();
    let unknown = ["UNKNOWN", "UNABLE TO OBTAIN", "PATIENT DECLINED", "DECLINED"];
    if s.is_empty() || unknown.iter().any(|u| s.starts_with(u)) {
        None
    } else if s.starts_with("WHITE") {
        Some("White")
    } else if s.contains("BLACK") || s.contains("AFRICAN") {
        Some("Black")
    } else if s.contains("HISPANIC") || s.contains("LATINO") {
        Some("Hispanic/Latino")
    } else if s.starts_with("ASIAN") {
        Some("Asian")
    } else {
        Some("Other")
    }
}

fn row(
    characteristic: &str,
    subgroup: &str,
    cases: &[AdmissionCase],
    member: impl Fn(&AdmissionCase) -> bool,
) -> SummaryRow {
    let (mut a, mut b, mut c, mut d) = (0u64, 0u64, 0u64, 0u64);
    for case in cases {
        let positive = case.label == Label::Positive;
        match (member(case), positive) {
            (true, true) => a += 1,
            (true, false) => b += 1,
            (false, true) => c += 1,
            (false, false) => d += 1,
        }
    }
    let n = a + b;
    let pct = |k: u64| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
    SummaryRow {
        characteristic: characteristic.to_string(),
        subgroup: subgroup.to_string(),
        n,
        positives: a,
        positive_pct: pct(a),
        negatives: b,
        negative_pct: pct(b),
        chi_square: chi_square_2x2(a, b, c, d).ok(),
    }
}

/// Overall row, then gender, age bands, ethnicity, initial ER diagnosis,
/// and the with-comorbidities row.
pub fn summary_table(cases: &[AdmissionCase]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut overall = row("Overall", "All", cases, |_| true);
    overall.chi_square = None;
    rows.push(overall);
    for (name, g) in [("Male", Gender::M), ("Female", Gender::F)] {
        rows.push(row("Gender", name, cases, |c| c.patient.gender == g));
    }
    for (name, _, _) in AGE_BANDS {
        rows.push(row("Age", name, cases, |c| age_band(c.age_at_admission) == name));
    }
    for name in ETHNICITY_GROUPS {
        rows.push(row("Ethnicity", name, cases, |c| {
            ethnicity_group(&c.admission.ethnicity) == Some(name)
        }));
    }
    for (name, flag) in [("Yes", true), ("No", false)] {
        rows.push(row("Initial ER Diagnosis MI", name, cases, |c| {
            c.admission.er_initial_ami_flag == flag
        }));
    }
    rows.push(row("With Comorbidities", "Total", cases, |c| {
        c.has_comorbidity()
    }));
    rows
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "characteristic",
        "subgroup",
        "n",
        "positives",
        "positive_pct",
        "negatives",
        "negative_pct",
        "chi_square",
        "p_value",
    ])?;
    for r in rows {
        let (stat, p) = match &r.chi_square {
            Some(t) => (format!("{:.4}", t.statistic), format_p_value(t.p_value)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.characteristic.clone(),
            r.subgroup.clone(),
            r.n.to_string(),
            r.positives.to_string(),
            format!("{:.1}", r.positive_pct),
            r.negatives.to_string(),
            format!("{:.1}", r.negative_pct),
            stat,
            p,
        ])?;
    }
    w.flush().map_err(|e| Error::io("summary csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Upper tail by composite Simpson on the substituted integrand
    /// `sqrt(2/π)·exp(−u²/2)` over `[sqrt(x), sqrt(x) + 40]`.
    fn sf_quadrature(x: f64) -> f64 {
        let (a, b, m) = (x.sqrt(), x.sqrt() + 40.0, 400_000);
        let h = (b - a) / m as f64;
        let f = |u: f64| (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * u * u).exp();
        let mut s = f(a) + f(b);
        for i in 1..m {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    // Tail probabilities evaluated to 25+ significant digits by an
    // arbitrary-precision integrator.
    const REFERENCE: [(f64, f64); 6] = [
        (0.0, 1.0),
        (0.004, 0.949_570_971_151_105_088_340_524_9),
        (3.841459, 0.049_999_994_653_195_765_111_153_03),
        (6.22, 0.012_631_511_282_259_587_704_961_78),
        (11.211, 0.000_813_138_899_963_461_976_533_753_5),
        (48.0, 4.262_191_597_843_645_605_067_542e-12),
    ];

    #[test]
    fn sf_matches_reference_values() {
        for (x, p) in REFERENCE {
            assert!((chisq_sf(x).unwrap() - p).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn sf_matches_quadrature() {
        for x in [0.0, 0.004, 0.5, 3.841459, 6.22, 11.211, 25.0, 48.0] {
            assert!((chisq_sf(x).unwrap() - sf_quadrature(x)).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn sf_rejects_negative() {
        assert!(chisq_sf(-1.0).is_err());
        assert!(chisq_sf(f64::NAN).is_err());
    }

    #[test]
    fn null_table() {
        let r = chi_square_2x2(10, 10, 10, 10).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zero_marginal_is_undefined() {
        assert!(chi_square_2x2(0, 0, 5, 6).is_err());
        assert!(chi_square_2x2(0, 4, 0, 6).is_err());
    }

    #[test]
    fn hand_computed_statistic() {
        // n(ad − bc)² / (row and column totals) = 20·(48 − 4)² / (6·14·6·14).
        let r = chi_square_2x2(4, 2, 2, 12).unwrap();
        assert!((r.statistic - 20.0 * 1936.0 / (6.0 * 14.0 * 6.0 * 14.0)).abs() < 1e-12);
    }

    #[test]
    fn p_value_text() {
        assert_eq!(format_p_value(0.9495884), ".949588");
        assert_eq!(format_p_value(0.0008132), ".000813");
        assert_eq!(format_p_value(3e-7), "<.00001");
        assert_eq!(format_p_value(1.0), "1.000000");
    }

    #[test]
    fn age_band_edges() {
        assert_eq!(age_band(29.99), "Under 30");
        assert_eq!(age_band(30.0), "30 to 49.9");
        assert_eq!(age_band(79.99), "70 to 79.9");
        assert_eq!(age_band(90.0), "80 to 90");
        assert_eq!(age_band(90.01), "Over 90");
    }

    #[test]
    fn ethnicity_mapping() {
        assert_eq!(ethnicity_group("WHITE - RUSSIAN"), Some("White"));
        assert_eq!(ethnicity_group("BLACK/AFRICAN AMERICAN"), Some("Black"));
        assert_eq!(ethnicity_group("HISPANIC OR LATINO"), Some("Hispanic/Latino"));
        assert_eq!(ethnicity_group("ASIAN - CHINESE"), Some("Asian"));
        assert_eq!(ethnicity_group("MULTI RACE ETHNICITY"), Some("Other"));
        assert_eq!(ethnicity_group("UNKNOWN/NOT SPECIFIED"), None);
        assert_eq!(ethnicity_group(""), None);
    }

    proptest! {
        #[test]
        fn symmetric_under_transpose_and_row_swap(a in 0u64..500, b in 0u64..500, c in 0u64..500, d in 0u64..500) {
            if let Ok(r) = chi_square_2x2(a, b, c, d) {
                let t = chi_square_2x2(a, c, b, d).unwrap();
                let s = chi_square_2x2(c, d, a, b).unwrap();
                prop_assert!((r.statistic - t.statistic).abs() <= 1e-9 * r.statistic.max(1.0));
                prop_assert!((r.statistic - s.statistic).abs() <= 1e-9 * r.statistic.max(1.0));
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
        }

        #[test]
        fn sf_strictly_decreasing(x in 0.0f64..60.0, dx in 1e-3f64..5.0) {
            prop_assert!(chisq_sf(x + dx).unwrap() < chisq_sf(x).unwrap());
        }
    }
}
