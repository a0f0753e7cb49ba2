use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ami-mortality"))
        .args(args)
        .env_remove("AMI_MORTALITY_OUT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Checks the stamp of one artifact and returns the hash it carries.
fn stamp(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let hash = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => text.lines().next().unwrap().strip_prefix("# config_hash=").map(String::from),
        Some("svg") => text
            .lines()
            .next()
            .unwrap()
            .strip_prefix("<!-- config_hash=")
            .and_then(|r| r.strip_suffix(" -->"))
            .map(String::from),
        Some("json") => {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            v["config_hash"].as_str().map(String::from)
        }
        _ => None,
    };
    let hash = hash.unwrap_or_else(|| panic!("{} carries no config hash", path.display()));
    assert_eq!(hash.len(), 64, "{}", path.display());
    hash
}

fn artifacts(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn end_to_end_and_every_artifact_is_stamped() {
    let root = tempfile::tempdir().unwrap();
    let tables = root.path().join("tables");
    let ingested = root.path().join("ingested");
    let stats = root.path().join("stats");
    let model = root.path().join("model");
    let eval = root.path().join("eval");
    let cmp = root.path().join("cmp");

    let said = ok(&["synth", "--n-admissions", "300", "--seed", "3", "--out", s(&tables)]);
    assert!(said.contains("300 cohort admissions"), "{said}");
    stamp(&tables.join("synth_manifest.json"));

    ok(&["ingest", "--tables", s(&tables), "--remove-outliers", "--out", s(&ingested)]);
    let cohort = ingested.join("cohort.json");
    let said = ok(&["stats", "--cohort", s(&cohort), "--out", s(&stats)]);
    assert!(said.starts_with("300 admissions"), "{said}");
    ok(&["train", "--cohort", s(&cohort), "--learner", "tree", "--seed", "1", "--out", s(&model)]);
    ok(&[
        "evaluate", "--cohort", s(&cohort), "--dataset", "admission", "--learner", "naive_bayes", "-k", "5",
        "--seed", "1", "--roc-plot", "--out", s(&eval),
    ]);
    ok(&[
        "compare", "--cohort", s(&cohort), "--datasets", "admission,combined", "--learners", "naive_bayes,stump",
        "-k", "3", "--seed", "1", "--roc-plot", "--out", s(&cmp),
    ]);

    for dir in [&ingested, &stats, &model, &eval, &cmp] {
        for path in artifacts(dir) {
            stamp(&path);
        }
    }
    for name in ["compare.csv", "best_by_dataset.csv", "learners_combined.csv", "roc.svg", "compare.json"] {
        assert!(cmp.join(name).exists(), "{name}");
    }
    let compare = fs::read_to_string(cmp.join("compare.csv")).unwrap();
    let lines: Vec<_> = compare.lines().collect();
    assert_eq!(lines[1], "dataset,learner,accuracy,auc,precision,recall,f_measure");
    assert_eq!(lines.len(), 2 + 4);
}

#[test]
fn same_inputs_give_identical_outputs() {
    let root = tempfile::tempdir().unwrap();
    let tables = root.path().join("tables");
    ok(&["synth", "--n-admissions", "200", "--seed", "8", "--out", s(&tables)]);
    let run = |name: &str| {
        let out = root.path().join(name);
        ok(&[
            "compare", "--tables", s(&tables), "--datasets", "demographics", "--learners", "logistic,tree", "-k", "4",
            "--seed", "2", "--out", s(&out),
        ]);
        artifacts(&out)
            .into_iter()
            .map(|p| fs::read(p).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run("a"), run("b"));

    // A different seed is a different configuration.
    let other = root.path().join("c");
    ok(&[
        "compare", "--tables", s(&tables), "--datasets", "demographics", "--learners", "logistic,tree", "-k", "4",
        "--seed", "3", "--out", s(&other),
    ]);
    assert_ne!(stamp(&root.path().join("a/compare.csv")), stamp(&other.join("compare.csv")));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");

    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["stats"]).status.code(), Some(2));
    assert_eq!(
        bin(&["stats", "--cohort", "a.json", "--tables", "t", "--out", s(&out)]).status.code(),
        Some(2)
    );
    let missing = bin(&["ingest", "--tables", s(&root.path().join("nope")), "--out", s(&out)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));

    let tables = root.path().join("tables");
    ok(&["synth", "--n-admissions", "100", "--seed", "1", "--out", s(&tables)]);
    assert_eq!(
        bin(&["evaluate", "--tables", s(&tables), "--learner", "perceptron", "--seed", "1", "--out", s(&out)])
            .status
            .code(),
        Some(2)
    );
    let admissions = tables.join("admissions.csv");
    let mut text = fs::read_to_string(&admissions).unwrap();
    text.push_str("999999,not-a-patient,garbage\n");
    fs::write(&admissions, text).unwrap();
    let bad = bin(&["ingest", "--tables", s(&tables), "--out", s(&out)]);
    assert_eq!(bad.status.code(), Some(3), "{}", String::from_utf8_lossy(&bad.stderr));
}
