//! Subgroup-versus-rest chi-square tests straight from published counts.

use ami_mortality::stats::{chi_square_2x2, format_p_value};

fn main() -> ami_mortality::Result<()> {
    // (subgroup, died within a year, survived)
    let rows = [
        ("Under 30", 4, 9),
        ("70 to 79.9", 465, 963),
        ("Over 90", 29, 29),
        ("Asian", 23, 64),
        ("Black", 103, 188),
        ("Hispanic/Latino", 19, 78),
        ("Other", 25, 83),
        ("White", 1144, 2630),
        ("Male", 877, 2431),
    ];
    let (pos, neg) = (1629, 3807);
    for (name, a, b) in rows {
        let r = chi_square_2x2(a, b, pos - a, neg - b)?;
        println!("{name:<16} chi2 = {:>8.4}  p {}", r.statistic, format_p_value(r.p_value));
    }
    Ok(())
}
