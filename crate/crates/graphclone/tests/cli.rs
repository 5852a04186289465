use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/fib");

fn graphclone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphclone"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = graphclone(args);
    assert!(
        out.status.success(),
        "graphclone {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run_fib(tmp: &TempDir, extra: &[&str]) -> PathBuf {
    let out = tmp.path().join("out");
    let mut args = vec!["run", "--root", FIXTURES, "--out-dir", s(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn run_on_fixtures_writes_a_consistent_report() {
    let tmp = TempDir::new().unwrap();
    let out = run_fib(&tmp, &[]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 5);
    let total = report["total_seconds"].as_f64().unwrap();
    let sum: f64 = report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["seconds"].as_f64().unwrap())
        .sum();
    assert!(
        (total - sum).abs() <= 0.05 * total,
        "stages {sum} vs total {total}"
    );

    let rows = csv_rows(&out.join("clones.csv"));
    assert_eq!(rows.len(), report["pairs"].as_u64().unwrap() as usize);
    let sim = |a: &str, b: &str| -> f64 {
        rows.iter()
            .find(|r| r[0].contains(a) && r[1].contains(b))
            .map(|r| r[2].parse().unwrap())
            .unwrap_or(0.0)
    };
    for (a, b) in [("func0", "func1"), ("func0", "func2"), ("func0", "func3")] {
        assert!(sim(a, b) >= 0.999, "{a}/{b}: {}", sim(a, b));
    }
    assert!(sim("func0", "func4") < sim("func0", "func3"));
}

#[test]
fn out_of_range_threshold_stops_before_any_stage() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let res = graphclone(&[
        "run",
        "--root",
        FIXTURES,
        "--out-dir",
        s(&out),
        "--threshold",
        "1.1",
    ]);
    assert!(!res.status.success());
    assert!(!out.exists(), "no output directory should be created");
}

#[test]
fn empty_corpus_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("empty");
    fs::create_dir(&root).unwrap();
    let res = graphclone(&[
        "run",
        "--root",
        s(&root),
        "--out-dir",
        s(&tmp.path().join("out")),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("no samples"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let res = graphclone(&[
        "run",
        "--root",
        FIXTURES,
        "--out-dir",
        s(&tmp.path().join("o")),
        "--set",
        "dimension=8",
    ]);
    assert!(!res.status.success());
}

#[test]
fn stages_compose_to_the_same_clones_as_run() {
    let tmp = TempDir::new().unwrap();
    let p = |n: &str| tmp.path().join(n);
    let whole = run_fib(&tmp, &[]);
    ok(&["ingest", "--root", FIXTURES, "--out", s(&p("m.jsonl"))]);
    ok(&[
        "graph",
        "--manifest",
        s(&p("m.jsonl")),
        "--out",
        s(&p("g.tsv")),
    ]);
    ok(&["embed", "--graph", s(&p("g.tsv")), "--out", s(&p("v.gemb"))]);
    ok(&[
        "detect",
        "--vectors",
        s(&p("v.gemb")),
        "--out",
        s(&p("c.csv")),
    ]);
    assert_eq!(
        fs::read(p("g.tsv")).unwrap(),
        fs::read(whole.join("graph.tsv")).unwrap()
    );
    assert_eq!(
        fs::read(p("c.csv")).unwrap(),
        fs::read(whole.join("clones.csv")).unwrap()
    );

    ok(&[
        "detect",
        "--vectors",
        s(&p("v.gemb")),
        "--topk",
        "1",
        "--out",
        s(&p("top.csv")),
    ]);
    let top = csv_rows(&p("top.csv"));
    assert!(!top.is_empty() && top.len() <= 5);

    ok(&[
        "embed",
        "--graph",
        s(&p("g.tsv")),
        "--dim",
        "4",
        "--text",
        "--out",
        s(&p("v.tsv")),
    ]);
    let first = fs::read_to_string(p("v.tsv")).unwrap();
    assert!(first.lines().next().unwrap().split('\t').count() >= 5);
}

#[test]
fn eval_and_audit_read_a_report() {
    let tmp = TempDir::new().unwrap();
    let out = run_fib(&tmp, &[]);
    let rows = csv_rows(&out.join("clones.csv"));
    let labels = tmp.path().join("labels.csv");
    fs::write(
        &labels,
        format!("id_a,id_b,type\n{},{},T1\n", rows[0][0], rows[0][1]),
    )
    .unwrap();
    let metrics = tmp.path().join("m.json");
    ok(&[
        "eval",
        "--report",
        s(&out.join("clones.csv")),
        "--labels",
        s(&labels),
        "--manifest",
        s(&out.join("manifest.jsonl")),
        "--out",
        s(&metrics),
    ]);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["recall"], 1.0);

    let audit = tmp.path().join("audit.csv");
    ok(&[
        "audit",
        "--report",
        s(&out.join("clones.csv")),
        "-k",
        "3",
        "--manifest",
        s(&out.join("manifest.jsonl")),
        "--out",
        s(&audit),
    ]);
    let text = fs::read_to_string(&audit).unwrap();
    assert!(text.starts_with("id_a,path_a,start_a,end_a,id_b,path_b,start_b,end_b,similarity"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn lexis_dump_prints_side_information() {
    let out = ok(&["lexis", "--dump", &format!("{FIXTURES}/func4.java")]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["keywords", "mndcb", "mnpcb", "lri", "fci", "ndi"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn two_methods_in_one_class_give_two_samples() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("src");
    fs::create_dir(&root).unwrap();
    let body = |n: usize| {
        let t = fs::read_to_string(format!("{FIXTURES}/func{n}.java")).unwrap();
        let open = t.find('{').unwrap();
        let close = t.rfind('}').unwrap();
        t[open + 1..close].to_string()
    };
    fs::write(
        root.join("Both.java"),
        format!("public class Both {{\n{}\n{}\n}}\n", body(0), body(4)),
    )
    .unwrap();
    let m = tmp.path().join("m.jsonl");
    ok(&["ingest", "--root", s(&root), "--out", s(&m)]);
    assert_eq!(fs::read_to_string(&m).unwrap().lines().count(), 2);
}

#[test]
fn sweep_table_has_a_block_per_feature_set() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "sweep",
        "--root",
        FIXTURES,
        "--out-dir",
        s(&out),
        "--set",
        "dims=4,8",
        "--set",
        "thresholds=0.6,0.8",
    ]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "features,threshold,metric,d4,d8");
    let blocks: std::collections::BTreeSet<(&str, &str)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    assert_eq!(blocks.len(), 3 * 2);
}
