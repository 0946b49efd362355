use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn softmodes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softmodes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = softmodes(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_cluster_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ccm.csv");
    ok(&["generate", "ccm", "--n", "300", "--d", "64", "--k", "3", "--eps", "0.1", "--seed", "4", p(&data)]);
    let text = fs::read_to_string(&data).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",label"));
    assert_eq!(text.lines().count(), 301);

    let assignments = dir.path().join("assign.txt");
    let trace = dir.path().join("trace.csv");
    let stdout = ok(&[
        "cluster", p(&data), "--k", "3", "--rounding", "soft", "--t", "3", "--label-col", "label",
        "--epochs", "2", "--seed", "1", "--assignments", p(&assignments), "--trace", p(&trace),
    ]);
    assert!(stdout.contains("epoch 1:"), "{stdout}");
    assert_eq!(fs::read_to_string(&assignments).unwrap().lines().count(), 300);
    let trace_text = fs::read_to_string(&trace).unwrap();
    assert_eq!(trace_text.lines().next(), Some("epoch,iteration,objective,accuracy"));
    assert!(trace_text.lines().skip(1).all(|l| l.split(',').count() == 4));

    let truth = dir.path().join("truth.txt");
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    fs::write(&truth, labels.join("\n")).unwrap();
    let report = ok(&["evaluate", "--pred", p(&assignments), "--truth", p(&truth)]);
    let mut lines = report.lines();
    let acc: f64 = lines.next().unwrap().strip_prefix("accuracy,").unwrap().parse().unwrap();
    assert!(acc > 0.9, "{report}");
    assert_eq!(lines.next(), Some("pred,t0,t1,t2"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn cluster_is_reproducible_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bbm.csv");
    ok(&["generate", "bbm", "--n", "400", "--d", "100", "--k", "2", "--p", "0.4", "--q", "0.05", "--seed", "9", p(&data)]);
    let mut files = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = dir.path().join(format!("a{}.txt", files.len()));
        ok(&[
            "cluster", p(&data), "--k", "2", "--rounding", "plurality", "--seeding", "random",
            "--label-col-index", "100", "--threads", threads, "--seed", "5", "--assignments", p(&out),
        ]);
        files.push(fs::read(out).unwrap());
    }
    assert!(files.iter().all(|f| *f == files[0]));
}

#[test]
fn lloyd_engine_and_headerless_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("raw.csv");
    fs::write(&data, "a,x\na,y\nb,z\nb,z\n").unwrap();
    let out = dir.path().join("a.txt");
    ok(&["cluster", p(&data), "--k", "2", "--engine", "lloyd", "--no-header", "--assignments", p(&out)]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 4);
}

#[test]
fn bbm_with_probability_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("p.csv");
    fs::write(&matrix, "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let data = dir.path().join("bbm.csv");
    ok(&["generate", "bbm", "--n", "9", "--d", "6", "--pmatrix", p(&matrix), p(&data)]);
    for line in fs::read_to_string(&data).unwrap().lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let label: usize = cells[6].parse().unwrap();
        let ones: Vec<usize> = (0..6).filter(|&j| cells[j] == "1").collect();
        assert_eq!(ones, vec![2 * label, 2 * label + 1]);
    }
}

#[test]
fn field_grid_size() {
    let csv = ok(&["field", "--rounding", "soft", "--t", "2", "--resolution", "10"]);
    assert_eq!(csv.lines().next(), Some("x1,x2,x3,dx1,dx2,dx3"));
    assert_eq!(csv.lines().count(), 1 + 11 * 12 / 2);
}

#[test]
fn experiment_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(
        &config,
        r#"{
            "source": { "ccm": { "n": 300, "d": 40, "k": 3, "epsilon": 0.1 } },
            "algorithms": [
                { "name": "k-modes", "engine": "softmodes", "rounding": { "kind": "plurality" } },
                { "name": "softmodes", "engine": "softmodes", "rounding": { "kind": "soft", "t": 2 } },
                { "name": "k-means", "engine": "lloyd" }
            ],
            "epochs": 2,
            "axis": "t",
            "values": [1, 2, 4],
            "seed": 3
        }"#,
    )
    .unwrap();
    let runs: Vec<_> = ["1", "3"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("out{threads}"));
            ok(&["experiment", "--config", p(&config), "--out", p(&out), "--threads", threads]);
            out
        })
        .collect();
    let results = fs::read(runs[0].join("results.csv")).unwrap();
    assert_eq!(results, fs::read(runs[1].join("results.csv")).unwrap());
    assert_eq!(String::from_utf8(results).unwrap().lines().count(), 1 + 3 * 3 * 2);
    let svg = fs::read_to_string(runs[0].join("plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}

#[test]
fn bad_input_fails_cleanly() {
    let out = softmodes(&["field", "--rounding", "soft", "--t", "0.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("t"));

    let out = softmodes(&["cluster", "/definitely/missing.csv", "--k", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let out = softmodes(&["cluster", "x.csv", "--k", "2", "--seeding", "farthest"]);
    assert!(!out.status.success());
}
