//! Cohort characteristics with a chi-square test per subgroup.

use ami_mortality::ingest::{assemble_cohort, load_tables, TablePaths};
use ami_mortality::preprocess::CleanConfig;
use ami_mortality::stats::{format_p_value, summary_table};
use ami_mortality::synth::{generate, SynthConfig};

fn main() -> ami_mortality::Result<()> {
    let dir = std::env::temp_dir().join("ami_summary_example");
    generate(&SynthConfig::bundled_default(), &dir)?;
    let tables = load_tables(&TablePaths::in_dir(&dir))?;
    let (cases, _) = assemble_cohort(&tables, &CleanConfig::from_items(&tables.event_items))?;

    println!("{:<28} {:>6} {:>14} {:>14} {:>10}", "subgroup", "n", "died ≤ 1y", "survived", "p");
    for row in summary_table(&cases) {
        let p = row.chi_square.map(|c| format_p_value(c.p_value)).unwrap_or_default();
        println!(
            "{:<28} {:>6} {:>6} ({:>4.1}%) {:>6} ({:>4.1}%) {:>10}",
            format!("{} {}", row.characteristic, row.subgroup),
            row.n,
            row.positives,
            row.positive_pct,
            row.negatives,
            row.negative_pct,
            p
        );
    }
    Ok(())
}
