use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use causal_ts::discovery::{Diagnostics, LinkDiagnostic, Stage};
use causal_ts::graph::{CausalGraph, LaggedVariable, Link};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-ts"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn sorted_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    sorted_files(dir)
        .into_iter()
        .map(|n| {
            let b = fs::read(dir.join(&n)).unwrap();
            (n, b)
        })
        .collect()
}

const PLANTED: &str = r#"{"d": 2, "variable_names": ["pm25", "br"], "links": [
    {"source_var": 0, "lag": 1, "target_var": 0, "mechanism": {"linear": 0.6}},
    {"source_var": 0, "lag": 3, "target_var": 1, "mechanism": {"linear": 0.6}}
], "t": 500}"#;

#[test]
fn simulate_emits_n_panels_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), PLANTED);
    let o = run(&["simulate", "--spec", "spec.json", "--n", "5", "--seed", "3", "--out", "a"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        sorted_files(&dir.path().join("a")),
        ["000.csv", "001.csv", "002.csv", "003.csv", "004.csv", "truth.json"]
    );
    let o = run(&["simulate", "--spec", "spec.json", "--n", "5", "--seed", "3", "--out", "b"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(dir_bytes(&dir.path().join("a")), dir_bytes(&dir.path().join("b")));
    let o = run(&["simulate", "--spec", "spec.json", "--n", "5", "--seed", "4", "--out", "c"], dir.path());
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(dir.path().join("a/000.csv")).unwrap(),
        fs::read(dir.path().join("c/000.csv")).unwrap()
    );
}

#[test]
fn simulate_worked_example_truth_parents() {
    // X1 ← X1@1, X2@1 and X3 ← X2@2, X3@1, X4@3 (zero-based below).
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("run.json"),
        r#"{"spec": {"d": 4, "links": [
            {"source_var": 0, "lag": 1, "target_var": 0, "mechanism": {"linear": 0.5}},
            {"source_var": 1, "lag": 1, "target_var": 0, "mechanism": {"linear": 0.6}},
            {"source_var": 1, "lag": 2, "target_var": 2, "mechanism": {"linear": 0.5}},
            {"source_var": 2, "lag": 1, "target_var": 2, "mechanism": {"linear": 0.4}},
            {"source_var": 3, "lag": 3, "target_var": 2, "mechanism": {"linear": 0.5}}
        ], "t": 200}, "n": 1, "out": "sim"}"#,
    );
    let o = run(&["simulate", "--config", "run.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let truth = CausalGraph::from_json(&fs::read_to_string(dir.path().join("sim/truth.json")).unwrap()).unwrap();
    let lv = LaggedVariable::new;
    assert_eq!(truth.tau_max(), 3);
    assert_eq!(truth.parents_of(0).unwrap().into_iter().collect::<Vec<_>>(), [lv(0, 1), lv(1, 1)]);
    assert!(truth.parents_of(1).unwrap().is_empty());
    assert_eq!(
        truth.parents_of(2).unwrap().into_iter().collect::<Vec<_>>(),
        [lv(1, 2), lv(2, 1), lv(3, 3)]
    );
    assert!(truth.parents_of(3).unwrap().is_empty());
}

#[test]
fn simulate_unstable_spec_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("spec.json"),
        r#"{"d": 1, "links": [{"source_var": 0, "lag": 1, "target_var": 0, "mechanism": {"linear": 1.1}}]}"#,
    );
    let o = run(&["simulate", "--spec", "spec.json", "--out", "a"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unstable"));
}

#[test]
fn simulate_without_spec_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["simulate", "--out", "a"], dir.path())), 2);
    write(&dir.path().join("bad.json"), r#"{"spec": "s.json", "count": 2}"#);
    assert_eq!(code(&run(&["simulate", "--config", "bad.json", "--out", "a"], dir.path())), 2);
}

fn simulate_planted(dir: &Path, n: usize) {
    write(&dir.join("spec.json"), PLANTED);
    let o = run(
        &["simulate", "--spec", "spec.json", "--n", &n.to_string(), "--seed", "11", "--out", "panels"],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::remove_file(dir.join("panels/truth.json")).unwrap();
}

#[test]
fn discover_one_subject() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 1);
    let o = run(&["discover", "--tau-max", "4", "--out", "g", "panels/000.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(sorted_files(&dir.path().join("g")), ["000.diagnostics.json", "000.graph.json"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("000\tok"));
    let g = CausalGraph::from_json(&fs::read_to_string(dir.path().join("g/000.graph.json")).unwrap()).unwrap();
    assert_eq!(g.tau_max(), 4);
    assert!(g.lag_link_indicator(0, 1)[3]);
    let diag =
        Diagnostics::from_json(&fs::read_to_string(dir.path().join("g/000.diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag.subject_id, "000");
}

#[test]
fn discover_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 3);
    for (out, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let o = run(
            &["discover", "--tau-max", "3", "--test", "cmi-knn", "--seed", "5", "--threads", threads, "--out", out, "panels"],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = dir_bytes(&dir.path().join("a"));
    assert_eq!(a.len(), 6);
    assert_eq!(a, dir_bytes(&dir.path().join("b")));
    assert_eq!(a, dir_bytes(&dir.path().join("c")));
}

#[test]
fn discover_long_lag_window() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), r#"{"d": 2, "links": [], "t": 1100}"#);
    let o = run(&["simulate", "--spec", "spec.json", "--out", "panels"], dir.path());
    assert_eq!(code(&o), 0);
    let o = run(
        &["discover", "--tau-max", "480", "--resolution", "60", "--out", "g", "panels/000.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = CausalGraph::from_json(&fs::read_to_string(dir.path().join("g/000.graph.json")).unwrap()).unwrap();
    assert_eq!(g.tau_max(), 480);
    assert_eq!(g.lag_link_indicator(0, 1).len(), 481);
}

#[test]
fn discover_resamples_to_coarser_resolution() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 1);
    let o = run(
        &["discover", "--tau-max", "2", "--resolution", "300", "--out", "g", "panels"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = CausalGraph::from_json(&fs::read_to_string(dir.path().join("g/000.graph.json")).unwrap()).unwrap();
    assert_eq!(g.resolution_seconds(), 300);
    assert_eq!(
        run(&["discover", "--tau-max", "2", "--resolution", "90", "--out", "g", "panels"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn discover_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 1);
    let cases: [&[&str]; 5] = [
        &["discover", "--out", "g", "panels"],
        &["discover", "--tau-max", "2", "--alpha", "1.5", "--out", "g", "panels"],
        &["discover", "--tau-max", "2", "--out", "g", "missing.csv"],
        &["discover", "--tau-max", "2", "--test", "kendall", "--out", "g", "panels"],
        &["discover", "--tau-max", "2", "--threads", "0", "--out", "g", "panels"],
    ];
    for args in cases {
        assert_eq!(code(&run(args, dir.path())), 2, "{args:?}");
    }
    write(&dir.path().join("c.json"), r#"{"tau_max": 2, "alhpa": 0.1}"#);
    assert_eq!(code(&run(&["discover", "--config", "c.json", "--out", "g", "panels"], dir.path())), 2);
}

#[test]
fn discover_failed_subject_is_logged() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 1);
    let mut flat = String::from("timestamp,pm25,br\n");
    for t in 0..300 {
        flat.push_str(&format!("1970-01-01T{:02}:{:02}:00Z,1.0,{}\n", t / 60, t % 60, t % 7));
    }
    write(&dir.path().join("panels/flat.csv"), &flat);
    let o = run(&["discover", "--tau-max", "2", "--out", "g", "panels"], dir.path());
    assert_eq!(code(&o), 1);
    let files = sorted_files(&dir.path().join("g"));
    assert_eq!(files, ["000.diagnostics.json", "000.graph.json", "flat.error.log"]);
    let log = fs::read_to_string(dir.path().join("g/flat.error.log")).unwrap();
    assert!(log.contains("pm25"), "{log}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("flat"));
}

fn cohort_member(id: &str, lag_of_link: usize) -> (CausalGraph, Diagnostics) {
    let names = vec!["pm25".to_string(), "br".to_string()];
    let link = Link::directed(LaggedVariable::new(0, lag_of_link), 1, 0.3, 0.001);
    let g = CausalGraph::new(id, names.clone(), 8, 60, vec![link]).unwrap();
    let links = (0..=8)
        .map(|lag| LinkDiagnostic {
            source_var: 0,
            lag,
            target_var: 1,
            statistic: Some(if lag == lag_of_link { 0.3 } else { 0.05 }),
            p_value: Some(if lag == lag_of_link { 0.001 } else { 0.4 }),
            cond_dim: 0,
            level: 0,
            stage: Stage::Mci,
            included: lag == lag_of_link,
            skipped: None,
        })
        .collect();
    let diag = Diagnostics {
        subject_id: id.into(),
        variable_names: names,
        tau_max: 8,
        resolution_seconds: 60,
        supersets: vec![],
        links,
    };
    (g, diag)
}

fn write_member(dir: &Path, g: &CausalGraph, d: &Diagnostics) {
    fs::create_dir_all(dir).unwrap();
    write(&dir.join(format!("{}.graph.json", g.subject_id())), &g.to_json().unwrap());
    write(&dir.join(format!("{}.diagnostics.json", g.subject_id())), &d.to_json().unwrap());
}

#[test]
fn cohort_identical_graphs() {
    let dir = tempfile::tempdir().unwrap();
    for id in ["s1", "s2", "s3"] {
        let (g, d) = cohort_member(id, 7);
        write_member(&dir.path().join("graphs"), &g, &d);
    }
    write(
        &dir.path().join("cohort.json"),
        r#"{"graphs": "graphs", "source": "pm25", "target": "br", "out": "out"}"#,
    );
    let o = run(&["cohort", "--config", "cohort.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        sorted_files(&dir.path().join("out")),
        ["correlations.csv", "histogram.csv", "lag_probability.csv", "trajectory.csv"]
    );
    let curve = fs::read_to_string(dir.path().join("out/lag_probability.csv")).unwrap();
    let rows: Vec<&str> = curve.lines().collect();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[8], "7,1");
    assert!(rows.iter().enumerate().all(|(i, r)| i == 0 || i == 8 || r.ends_with(",0")));
    let hist = fs::read_to_string(dir.path().join("out/histogram.csv")).unwrap();
    assert_eq!(hist, "subject_id,link_count\ns1,1\ns2,1\ns3,1\n");
}

#[test]
fn cohort_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("graphs")).unwrap();
    write(
        &dir.path().join("cohort.json"),
        r#"{"graphs": "graphs", "source": "pm25", "target": "br", "out": "out"}"#,
    );
    assert_eq!(code(&run(&["cohort", "--config", "cohort.json"], dir.path())), 1);
}

#[test]
fn cohort_shape_mismatch_lists_offenders() {
    let dir = tempfile::tempdir().unwrap();
    let (g, d) = cohort_member("s1", 2);
    write_member(&dir.path().join("graphs"), &g, &d);
    let (g, d) = cohort_member("s2", 2);
    let g = g.widened(9).unwrap();
    write_member(&dir.path().join("graphs"), &g, &d);
    write(
        &dir.path().join("cohort.json"),
        r#"{"graphs": "graphs", "source": "pm25", "target": "br", "out": "out"}"#,
    );
    let o = run(&["cohort", "--config", "cohort.json"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("s2"));
}

#[test]
fn simulate_discover_cohort_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    simulate_planted(dir.path(), 6);
    let o = run(&["discover", "--tau-max", "5", "--out", "graphs", "panels"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    write(
        &dir.path().join("cohort.json"),
        r#"{"graphs": "graphs", "source": "pm25", "target": "br", "out": "out",
            "panels": "panels",
            "correlations": [{"variable": "br", "reference": "pm25", "kind": "raw_series"}]}"#,
    );
    let o = run(&["cohort", "--config", "cohort.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve: Vec<f64> = fs::read_to_string(dir.path().join("out/lag_probability.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let peak = (0..curve.len()).max_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
    assert_eq!(peak, 3);
    let corr = fs::read_to_string(dir.path().join("out/correlations.csv")).unwrap();
    assert!(corr.lines().nth(1).unwrap().starts_with("br,"));
    assert!(corr.trim_end().ends_with(",raw_series"));
}

const NULL_BATTERY: &str = r#"{"name": "null", "spec": {"d": 3, "links": []}, "tests": ["parcorr"],
    "alphas": [0.05], "lengths": [300], "seeds": 100, "tau_max": 2}"#;

fn benchmark_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("out/benchmark.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn benchmark_null_battery_is_calibrated() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("b.json"), &format!(r#"{{"batteries": [{NULL_BATTERY}], "out": "out"}}"#));
    let o = run(&["benchmark", "--config", "b.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = benchmark_rows(dir.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..5], ["null", "parcorr", "0.05", "300", "100"]);
    let fpr: f64 = rows[0][7].parse().unwrap();
    assert!((0.01..=0.10).contains(&fpr), "fpr {fpr}");
}

#[test]
fn benchmark_detects_strong_links() {
    let dir = tempfile::tempdir().unwrap();
    write(
        &dir.path().join("b.json"),
        r#"{"batteries": [{"name": "chain", "tests": ["parcorr"], "alphas": [0.01, 0.05],
            "lengths": [2000], "seeds": 10, "tau_max": 2,
            "spec": {"d": 3, "links": [
                {"source_var": 0, "lag": 1, "target_var": 1, "mechanism": {"linear": 0.6}},
                {"source_var": 1, "lag": 2, "target_var": 2, "mechanism": {"linear": 0.6}},
                {"source_var": 2, "lag": 1, "target_var": 2, "mechanism": {"linear": 0.6}}
            ]}}], "out": "out"}"#,
    );
    let o = run(&["benchmark", "--config", "b.json", "--threads", "2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = benchmark_rows(dir.path());
    assert_eq!(rows.len(), 2);
    for r in rows {
        let recall: f64 = r[6].parse().unwrap();
        assert!(recall >= 0.9, "{r:?}");
    }
}

#[test]
fn benchmark_zero_seeds_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let battery = NULL_BATTERY.replace("\"seeds\": 100", "\"seeds\": 0");
    write(&dir.path().join("b.json"), &format!(r#"{{"batteries": [{battery}], "out": "out"}}"#));
    assert_eq!(code(&run(&["benchmark", "--config", "b.json"], dir.path())), 2);
}

#[test]
fn benchmark_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let battery = NULL_BATTERY.replace("\"seeds\": 100", "\"seeds\": 6");
    write(&dir.path().join("b.json"), &format!(r#"{{"batteries": [{battery}]}}"#));
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = run(&["benchmark", "--config", "b.json", "--threads", threads, "--out", out], dir.path());
        assert_eq!(code(&o), 0);
    }
    assert_eq!(dir_bytes(&dir.path().join("a")), dir_bytes(&dir.path().join("b")));
}
