use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are called positive; `+inf` for the origin.
    pub threshold: f64,
}

/// Cumulative (fp, tp) counts at each distinct threshold, descending.
fn staircase(y: &[bool], scores: &[f64]) -> Result<(Vec<(u64, u64, f64)>, u64, u64)> {
    if y.len() != scores.len() {
        return Err(Error::Contract(format!("{} labels but {} scores", y.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Contract("scores contain NaN".into()));
    }
    let p = y.iter().filter(|&&l| l).count() as u64;
    let n = y.len() as u64 - p;
    if p == 0 || n == 0 {
        return Err(Error::Degenerate("ROC needs both classes in the truth labels".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut steps = vec![(0, 0, f64::INFINITY)];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if y[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        steps.push((fp, tp, threshold));
    }
    Ok((steps, p, n))
}

/// One point per distinct score (descending), starting at (0,0); the last
/// threshold admits every instance, so the curve ends at (1,1).
pub fn roc_curve(y_true: &[bool], scores: &[f64]) -> Result<Vec<RocPoint>> {
    let (steps, p, n) = staircase(y_true, scores)?;
    Ok(steps
        .into_iter()
        .map(|(fp, tp, threshold)| RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
            threshold,
        })
        .collect())
}

/// Trapezoidal area under the ROC curve, accumulated in integer counts so it
/// equals the tie-aware pair-count statistic exactly.
pub fn auc(y_true: &[bool], scores: &[f64]) -> Result<f64> {
    let (steps, p, n) = staircase(y_true, scores)?;
    let twice_area: u128 = steps
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as u128 * (w[1].1 + w[0].1) as u128)
        .sum();
    Ok(twice_area as f64 / (2 * p as u128 * n as u128) as f64)
}

/// P(score_pos > score_neg) + ½·P(tie) by direct enumeration of all pairs.
pub fn auc_pair_count(y_true: &[bool], scores: &[f64]) -> Result<f64> {
    let pos: Vec<f64> = scores.iter().zip(y_true).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(y_true).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate("AUC needs both classes".into()));
    }
    let mut twice = 0u64;
    for a in &pos {
        for b in &neg {
            twice += if a > b { 2 } else if a == b { 1 } else { 0 };
        }
    }
    Ok(twice as f64 / (2 * pos.len() * neg.len()) as f64)
}

pub fn write_roc_csv<W: Write>(points: &[RocPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"])?;
    for p in points {
        w.write_record([format!("{:?}", p.fpr), format!("{:?}", p.tpr), format!("{:?}", p.threshold)])?;
    }
    w.flush().map_err(|e| Error::io("roc csv", e))?;
    Ok(())
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Overlaid ROC curves as a standalone SVG document. Each curve is
/// labelled `name (AUC = x.xxx)` in the legend.
pub fn write_roc_svg<W: Write>(title: &str, curves: &[(String, f64, Vec<RocPoint>)], mut out: W) -> Result<()> {
    let (size, margin) = (420.0, 50.0);
    let plot = size - 2.0 * margin;
    let px = |fpr: f64| margin + fpr * plot;
    let py = |tpr: f64| size - margin - tpr * plot;
    let legend_h = 18.0 * curves.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#,
        w = size + 220.0,
        h = size.max(margin + legend_h + 20.0)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="13">{}</text>"#, margin, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{p}" height="{p}" fill="none" stroke="black"/>"#,
        m = margin,
        p = plot
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{v:.1}</text>"#, px(v), size - margin + 15.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, margin - 5.0, py(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        margin + plot / 2.0,
        size - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">True positive rate</text>"#,
        y = margin + plot / 2.0
    );
    for (i, (name, area, points)) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points.iter().map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = margin + 18.0 * i as f64 + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x1}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            x1 = size + 5.0,
            x2 = size + 25.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{} (AUC = {area:.3})</text>"#,
            size + 30.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes()).map_err(|e| Error::io("roc svg", e))?;
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_separation() {
        let y = [true, false];
        let pts = roc_curve(&y, &[0.9, 0.1]).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&y, &[0.9, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores_give_the_diagonal() {
        let y = [true, false, false, true];
        let pts = roc_curve(&y, &[0.3; 4]).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[1].fpr, pts[1].tpr), (1.0, 1.0));
        assert_eq!(auc(&y, &[0.3; 4]).unwrap(), 0.5);
    }

    #[test]
    fn staircase_example() {
        let y = [true, true, false, false];
        let s = [0.9, 0.4, 0.5, 0.1];
        assert_eq!(auc(&y, &s).unwrap(), 0.75);
        assert_eq!(auc_pair_count(&y, &s).unwrap(), 0.75);
        let pts = roc_curve(&y, &s).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(xy, vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(roc_curve(&[true, true], &[0.1, 0.2]).is_err());
        assert!(auc(&[false], &[0.1]).is_err());
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let pts = roc_curve(&[true, false], &[0.9, 0.1]).unwrap();
        let mut buf = Vec::new();
        write_roc_svg("t", &[("a<b".into(), 1.0, pts)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(text.contains("a&lt;b (AUC = 1.000)"));
    }

    proptest! {
        #[test]
        fn curve_is_monotone_and_area_matches_pairs(
            data in prop::collection::vec((0u8..10, any::<bool>()), 2..200)
        ) {
            let y: Vec<bool> = data.iter().map(|d| d.1).collect();
            prop_assume!(y.iter().any(|&l| l) && y.iter().any(|&l| !l));
            let s: Vec<f64> = data.iter().map(|d| d.0 as f64 / 10.0).collect();
            let pts = roc_curve(&y, &s).unwrap();
            prop_assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
            prop_assert_eq!((pts.last().unwrap().fpr, pts.last().unwrap().tpr), (1.0, 1.0));
            for w in pts.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
                prop_assert!(w[1].threshold < w[0].threshold);
            }
            let a = auc(&y, &s).unwrap();
            prop_assert!((a - auc_pair_count(&y, &s).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
