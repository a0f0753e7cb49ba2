//! Command-line driver. Every artifact carries the hash of the run
//! configuration that produced it: a `# config_hash=` first line in CSV,
//! a `config_hash` field in JSON, an XML comment in SVG.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cohort::{AdmissionCase, CohortFile};
use crate::error::{Error, Result};
use crate::evaluate::{cross_validate, write_roc_csv, write_roc_svg, EvalReport, Metrics};
use crate::features::{build_dataset, DatasetKind};
use crate::ingest::{assemble_cohort, load_tables, TablePaths};
use crate::learners::{train, Family, LearnerSpec, Model};
use crate::preprocess::{CleanConfig, CleaningReport};
use crate::stats::{summary_table, write_summary_csv, SummaryRow};
use crate::synth::{generate, SynthConfig, SynthManifest};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AMI_MORTALITY_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "ami-mortality",
    version,
    about = "One-year mortality prediction for AMI admissions",
    propagate_version = true
)]
pub struct Cli {
    /// Worker threads for cross-validation and compare jobs (default: one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort in the seven-table layout.
    Synth(SynthArgs),
    /// Select the cohort, clean events and write the cohort file.
    Ingest(IngestArgs),
    /// Cohort summary table with chi-square tests per subgroup.
    Stats(StatsArgs),
    /// Fit one learner on one dataset and save the model.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation of one learner on one dataset.
    Evaluate(EvaluateArgs),
    /// Cross-validate every learner on every dataset kind and rank them.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory (created if absent).
    #[arg(long, short, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML generator config; defaults to the bundled cohort-sized config.
    #[arg(long, conflicts_with = "high_signal")]
    pub config: Option<PathBuf>,
    /// Use the bundled high-signal config.
    #[arg(long)]
    pub high_signal: bool,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's cohort size.
    #[arg(long)]
    pub n_admissions: Option<usize>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Drop per-variable IQR outliers before averaging.
    #[arg(long)]
    pub remove_outliers: bool,
    /// CSV of plausibility ranges (item_id,min,max) replacing the catalog ranges.
    #[arg(long)]
    pub ranges: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding the seven input tables.
    #[arg(long)]
    pub tables: PathBuf,
    #[command(flatten)]
    pub clean: CleanArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputSource {
    /// Cohort file written by `ingest`.
    #[arg(long)]
    pub cohort: Option<PathBuf>,
    /// Directory of raw tables, ingested on the fly.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: InputSource,
    #[command(flatten)]
    pub clean: CleanArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// Learner family, e.g. logistic, tree, random_forest, deep_fnn.
    #[arg(long, default_value = "logistic")]
    pub learner: String,
    /// Hyperparameter override, repeatable: `--param epochs=100`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Dataset kind: admission, demographics, treatment, diagnostic, lab_chart, combined.
    #[arg(long, default_value = "combined")]
    pub dataset: String,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "combined")]
    pub dataset: String,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Number of folds.
    #[arg(long, short, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    /// Also draw the ROC curve as SVG.
    #[arg(long)]
    pub roc_plot: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated dataset kinds, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub datasets: Vec<String>,
    /// Comma-separated learner families, or `all`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub learners: Vec<String>,
    #[arg(long, short, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    /// Overlay the best model per dataset in one ROC plot.
    #[arg(long)]
    pub roc_plot: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Everything that determines a run's outputs; its hash stamps each artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// SHA-256 over the input files' bytes.
    pub input_hash: String,
    pub datasets: Vec<DatasetKind>,
    pub learners: Vec<LearnerSpec>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub remove_outliers: bool,
    pub emit_roc_plot: bool,
}

impl RunConfig {
    fn new(command: &str, input_hash: String) -> Self {
        RunConfig {
            command: command.into(),
            input_hash,
            datasets: Vec::new(),
            learners: Vec::new(),
            k: None,
            seed: None,
            remove_outliers: false,
            emit_roc_plot: false,
        }
    }

    pub fn hash(&self) -> String {
        crate::config_hash(self)
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    run: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

/// A model file as written by `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub config_hash: String,
    pub dataset: DatasetKind,
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One row of the compare table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub dataset: DatasetKind,
    pub learner: Family,
    pub metrics: Metrics,
    pub auc: f64,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => synth_cmd(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
    })
}

fn out_dir(out: &OutArgs) -> Result<&Path> {
    fs::create_dir_all(&out.out).map_err(|e| Error::io(&out.out, e))?;
    Ok(&out.out)
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes a CSV artifact: the hash line, then whatever `body` emits.
fn write_stamped_csv(path: &Path, hash: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_stamped_json<T: Serialize>(path: &Path, run: &RunConfig, body: T) -> Result<()> {
    let hash = run.hash();
    let doc = Stamped {
        config_hash: &hash,
        run,
        body,
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_stamped_svg(path: &Path, hash: &str, title: &str, curves: &[(String, f64, Vec<crate::evaluate::RocPoint>)]) -> Result<()> {
    let mut buf = format!("<!-- config_hash={hash} -->\n").into_bytes();
    write_roc_svg(title, curves, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn sha256_files(paths: &[&Path]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingFile { path: p.to_path_buf() }
            } else {
                Error::io(*p, e)
            }
        })?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn table_files(paths: &TablePaths) -> [&Path; 7] {
    [
        &paths.patients,
        &paths.admissions,
        &paths.diagnoses,
        &paths.drg_codes,
        &paths.lab_events,
        &paths.chart_events,
        &paths.event_items,
    ]
}

fn ingest_tables(dir: &Path, clean: &CleanArgs) -> Result<(Vec<AdmissionCase>, CleaningReport, String)> {
    let paths = TablePaths::in_dir(dir);
    let mut files: Vec<&Path> = table_files(&paths).to_vec();
    if let Some(r) = &clean.ranges {
        files.push(r);
    }
    let mut input_hash = sha256_files(&files)?;
    if clean.remove_outliers {
        input_hash.push_str("+iqr");
    }
    let tables = load_tables(&paths)?;
    let mut config = CleanConfig::from_items(&tables.event_items).with_outlier_removal(clean.remove_outliers);
    if let Some(r) = &clean.ranges {
        config = config.with_ranges_file(r)?;
    }
    let (cases, report) = assemble_cohort(&tables, &config)?;
    Ok((cases, report, input_hash))
}

fn load_input(input: &InputArgs) -> Result<(Vec<AdmissionCase>, String)> {
    match (&input.source.cohort, &input.source.tables) {
        (Some(path), None) => {
            let hash = sha256_files(&[path])?;
            Ok((CohortFile::read(path)?.cases, hash))
        }
        (None, Some(dir)) => {
            let (cases, _, hash) = ingest_tables(dir, &input.clean)?;
            Ok((cases, hash))
        }
        _ => Err(Error::Config("give exactly one of --cohort or --tables".into())),
    }
}

fn learner_spec(args: &LearnerArgs, seed: u64) -> Result<LearnerSpec> {
    let family: Family = args.learner.parse().map_err(config_err)?;
    let mut spec = LearnerSpec::new(family, seed);
    for kv in &args.params {
        let (name, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--param expects NAME=VALUE, got '{kv}'")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("--param {name}: '{value}' is not a number")))?;
        spec = spec.with(name.trim(), value).map_err(config_err)?;
    }
    Ok(spec)
}

/// Command-line mistakes are configuration errors, whatever layer caught them.
fn config_err(e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Config(m),
        other => other,
    }
}

fn parse_datasets(names: &[String]) -> Result<Vec<DatasetKind>> {
    if names.iter().any(|n| n == "all") {
        return Ok(DatasetKind::ALL.to_vec());
    }
    names.iter().map(|n| n.parse().map_err(config_err)).collect()
}

fn parse_families(names: &[String]) -> Result<Vec<Family>> {
    if names.iter().any(|n| n == "all") {
        return Ok(Family::ALL.to_vec());
    }
    names.iter().map(|n| n.parse().map_err(config_err)).collect()
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let mut config = match (&a.config, a.high_signal) {
        (Some(path), _) => SynthConfig::from_file(path)?,
        (None, true) => SynthConfig::bundled_high_signal(),
        (None, false) => SynthConfig::bundled_default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(n) = a.n_admissions {
        config.n_admissions = n;
    }
    config.validate()?;
    let dir = out_dir(&a.out)?;
    let manifest: SynthManifest = generate(&config, dir)?;
    let mut run = RunConfig::new("synth", crate::config_hash(&config));
    run.seed = Some(config.seed);
    #[derive(Serialize)]
    struct Body<'a> {
        config: &'a SynthConfig,
        manifest: &'a SynthManifest,
    }
    write_stamped_json(
        &dir.join("synth_manifest.json"),
        &run,
        Body {
            config: &config,
            manifest: &manifest,
        },
    )?;
    println!(
        "wrote {} cohort admissions ({} positive) and {} extra admissions to {}",
        manifest.cohort_admissions,
        manifest.positives,
        manifest.non_cohort_admissions,
        dir.display()
    );
    Ok(())
}

fn ingest_cmd(a: IngestArgs) -> Result<()> {
    let (cases, report, input_hash) = ingest_tables(&a.tables, &a.clean)?;
    let mut run = RunConfig::new("ingest", input_hash);
    run.remove_outliers = a.clean.remove_outliers;
    let hash = run.hash();
    let dir = out_dir(&a.out)?;
    CohortFile {
        config_hash: hash.clone(),
        cases: cases.clone(),
    }
    .write(&dir.join("cohort.json"))?;
    write_stamped_csv(&dir.join("cleaning_report.csv"), &hash, |buf| report.write_csv(buf))?;
    let positives = cases.iter().filter(|c| c.label.is_positive()).count();
    println!(
        "cohort: {} admissions, {} positive; removed {} zero, {} implausible, {} IQR outliers; swapped {} BP pairs",
        cases.len(),
        positives,
        report.zero_lab_values,
        report.implausible_values,
        report.iqr_outliers,
        report.bp_pairs_swapped
    );
    Ok(())
}

fn stats_cmd(a: StatsArgs) -> Result<()> {
    let (cases, input_hash) = load_input(&a.input)?;
    let mut run = RunConfig::new("stats", input_hash);
    run.remove_outliers = a.input.clean.remove_outliers;
    let hash = run.hash();
    let rows: Vec<SummaryRow> = summary_table(&cases);
    let dir = out_dir(&a.out)?;
    write_stamped_csv(&dir.join("summary.csv"), &hash, |buf| write_summary_csv(&rows, buf))?;
    write_stamped_json(&dir.join("summary.json"), &run, serde_json::json!({ "rows": rows }))?;
    if let Some(overall) = rows.first() {
        println!(
            "{} admissions, {} positive ({:.1}%)",
            overall.n, overall.positives, overall.positive_pct
        );
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let kind: DatasetKind = a.dataset.parse().map_err(config_err)?;
    let spec = learner_spec(&a.learner, a.seed)?;
    let (cases, input_hash) = load_input(&a.input)?;
    let data = build_dataset(&cases, kind)?;
    let model = train(&spec, &data)?;
    let mut run = RunConfig::new("train", input_hash);
    run.datasets = vec![kind];
    run.learners = vec![spec];
    run.seed = Some(a.seed);
    run.remove_outliers = a.input.clean.remove_outliers;
    let file = ModelFile {
        config_hash: run.hash(),
        dataset: kind,
        feature_names: data.schema.names().map(String::from).collect(),
        model,
    };
    let dir = out_dir(&a.out)?;
    let path = dir.join("model.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &file)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!("trained {} on {} ({} rows) → {}", file.model.family(), kind, data.n_rows(), path.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let kind: DatasetKind = a.dataset.parse().map_err(config_err)?;
    let spec = learner_spec(&a.learner, a.seed)?;
    let (cases, input_hash) = load_input(&a.input)?;
    let data = build_dataset(&cases, kind)?;
    let report = cross_validate(&spec, &data, a.k, a.seed)?;
    let mut run = RunConfig::new("evaluate", input_hash);
    run.datasets = vec![kind];
    run.learners = vec![spec];
    run.k = Some(a.k);
    run.seed = Some(a.seed);
    run.remove_outliers = a.input.clean.remove_outliers;
    run.emit_roc_plot = a.roc_plot;
    let hash = run.hash();
    let dir = out_dir(&a.out)?;
    write_stamped_json(&dir.join("eval_report.json"), &run, &report)?;
    write_stamped_csv(&dir.join("roc.csv"), &hash, |buf| write_roc_csv(&report.roc, buf))?;
    if a.roc_plot {
        let title = format!("ROC: {} on {}", report.spec.family, kind);
        let curves = vec![(kind.name().to_string(), report.auc, report.roc.clone())];
        write_stamped_svg(&dir.join("roc.svg"), &hash, &title, &curves)?;
    }
    let m = &report.metrics;
    println!(
        "{} on {}: accuracy {:.4}, AUC {:.4}, precision {:.4}, recall {:.4}, F {:.4}",
        report.spec.family, kind, m.accuracy, report.auc, m.precision, m.recall, m.f_measure
    );
    Ok(())
}

/// Runs the full grid; results come back in (dataset, learner) order
/// however the jobs were scheduled.
pub fn compare(
    cases: &[AdmissionCase],
    datasets: &[DatasetKind],
    families: &[Family],
    k: usize,
    seed: u64,
) -> Result<Vec<(CompareRow, EvalReport)>> {
    let data: Vec<_> = datasets
        .iter()
        .map(|&d| build_dataset(cases, d))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Family)> = (0..datasets.len())
        .flat_map(|d| families.iter().map(move |&f| (d, f)))
        .collect();
    jobs.par_iter()
        .map(|&(d, f)| {
            let spec = LearnerSpec::new(f, seed);
            let report = cross_validate(&spec, &data[d], k, seed)?;
            let row = CompareRow {
                dataset: datasets[d],
                learner: f,
                metrics: report.metrics,
                auc: report.auc,
            };
            Ok((row, report))
        })
        .collect()
}

/// Best learner per dataset by pooled accuracy; exact ties are listed
/// together. Sorted by accuracy, highest first.
pub fn best_by_dataset(rows: &[CompareRow]) -> Vec<(DatasetKind, Vec<Family>, CompareRow)> {
    let mut out = Vec::new();
    for kind in DatasetKind::ALL {
        let of_kind: Vec<&CompareRow> = rows.iter().filter(|r| r.dataset == kind).collect();
        let Some(best) = of_kind
            .iter()
            .copied()
            .reduce(|a, b| if b.metrics.accuracy > a.metrics.accuracy { b } else { a })
        else {
            continue;
        };
        let tied = of_kind
            .iter()
            .filter(|r| r.metrics.accuracy == best.metrics.accuracy)
            .map(|r| r.learner)
            .collect();
        out.push((kind, tied, best.clone()));
    }
    out.sort_by(|a, b| b.2.metrics.accuracy.total_cmp(&a.2.metrics.accuracy));
    out
}

fn metric_cells(m: &Metrics, auc: f64) -> [String; 5] {
    let na = |v: f64, undefined: bool| if undefined { "NA".to_string() } else { format!("{v:.6}") };
    [
        format!("{:.6}", m.accuracy),
        format!("{auc:.6}"),
        na(m.precision, m.precision_undefined),
        na(m.recall, m.recall_undefined),
        format!("{:.6}", m.f_measure),
    ]
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "learner", "accuracy", "auc", "precision", "recall", "f_measure"])?;
    for r in rows {
        let mut rec = vec![r.dataset.name().to_string(), r.learner.name().to_string()];
        rec.extend(metric_cells(&r.metrics, r.auc));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("compare csv", e))?;
    Ok(())
}

/// Per-dataset winners, in the layout of a "best accuracy per dataset" table.
pub fn write_best_csv<W: Write>(best: &[(DatasetKind, Vec<Family>, CompareRow)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "best_learner",
        "accuracy_pct",
        "auc",
        "precision",
        "recall",
        "f_measure",
    ])?;
    for (kind, tied, r) in best {
        let names: Vec<&str> = tied.iter().map(|f| f.name()).collect();
        let m = &r.metrics;
        w.write_record([
            kind.name().to_string(),
            names.join(" and "),
            format!("{:.2}%", 100.0 * m.accuracy),
            format!("{:.3}", r.auc),
            format!("{:.3}", m.precision),
            format!("{:.3}", m.recall),
            format!("{:.3}", m.f_measure),
        ])?;
    }
    w.flush().map_err(|e| Error::io("best csv", e))?;
    Ok(())
}

/// All learners on one dataset, alphabetical, in a per-model comparison layout.
pub fn write_learner_table_csv<W: Write>(rows: &[CompareRow], kind: DatasetKind, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["learner", "accuracy_pct", "auc", "precision", "recall", "f_measure"])?;
    let mut of_kind: Vec<&CompareRow> = rows.iter().filter(|r| r.dataset == kind).collect();
    of_kind.sort_by_key(|r| r.learner.name());
    for r in of_kind {
        let m = &r.metrics;
        w.write_record([
            r.learner.name().to_string(),
            format!("{:.2}%", 100.0 * m.accuracy),
            format!("{:.3}", r.auc),
            format!("{:.3}", m.precision),
            format!("{:.3}", m.recall),
            format!("{:.3}", m.f_measure),
        ])?;
    }
    w.flush().map_err(|e| Error::io("learner csv", e))?;
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let datasets = parse_datasets(&a.datasets)?;
    let families = parse_families(&a.learners)?;
    let (cases, input_hash) = load_input(&a.input)?;
    let results = compare(&cases, &datasets, &families, a.k, a.seed)?;
    let mut run = RunConfig::new("compare", input_hash);
    run.datasets = datasets.clone();
    run.learners = families.iter().map(|&f| LearnerSpec::new(f, a.seed)).collect();
    run.k = Some(a.k);
    run.seed = Some(a.seed);
    run.remove_outliers = a.input.clean.remove_outliers;
    run.emit_roc_plot = a.roc_plot;
    let hash = run.hash();

    let rows: Vec<CompareRow> = results.iter().map(|(r, _)| r.clone()).collect();
    let best = best_by_dataset(&rows);
    let dir = out_dir(&a.out)?;
    write_stamped_csv(&dir.join("compare.csv"), &hash, |buf| write_compare_csv(&rows, buf))?;
    write_stamped_csv(&dir.join("best_by_dataset.csv"), &hash, |buf| write_best_csv(&best, buf))?;
    let table_kind = if datasets.contains(&DatasetKind::Combined) {
        DatasetKind::Combined
    } else {
        datasets[0]
    };
    write_stamped_csv(&dir.join(format!("learners_{}.csv", table_kind.name())), &hash, |buf| {
        write_learner_table_csv(&rows, table_kind, buf)
    })?;

    // ROC of the best model per dataset.
    let mut curves = Vec::new();
    for (kind, tied, _) in &best {
        let report = results
            .iter()
            .find(|(r, _)| r.dataset == *kind && r.learner == tied[0])
            .map(|(_, rep)| rep)
            .expect("best row comes from results");
        write_stamped_csv(&dir.join(format!("roc_{}.csv", kind.name())), &hash, |buf| {
            write_roc_csv(&report.roc, buf)
        })?;
        curves.push((format!("{} ({})", kind.name(), tied[0].name()), report.auc, report.roc.clone()));
    }
    if a.roc_plot {
        write_stamped_svg(&dir.join("roc.svg"), &hash, "ROC of the best model per dataset", &curves)?;
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        rows: &'a [CompareRow],
    }
    write_stamped_json(&dir.join("compare.json"), &run, Summary { rows: &rows })?;

    println!("{:<14} {:>9} {:>7}  best learner", "dataset", "accuracy", "AUC");
    for (kind, tied, r) in &best {
        let names: Vec<&str> = tied.iter().map(|f| f.name()).collect();
        println!(
            "{:<14} {:>8.2}% {:>7.3}  {}",
            kind.name(),
            100.0 * r.metrics.accuracy,
            r.auc,
            names.join(" and ")
        );
    }
    Ok(())
}
