use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn vulnrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vulnrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn optimize_to(dir: &Path, name: &str, extra: &[&str]) -> (Output, PathBuf) {
    let out = dir.join(name);
    let manifest = fixture("manifest.json");
    let mut args = vec!["optimize", "--manifest", p(&manifest), "--out", p(&out)];
    args.extend_from_slice(extra);
    (vulnrank(&args), out)
}

#[test]
fn optimize_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (o1, f1) = optimize_to(dir.path(), "a.json", &[]);
    let (o2, f2) = optimize_to(dir.path(), "b.json", &[]);
    assert!(o1.status.success(), "{}", stderr(&o1));
    assert!(o2.status.success());
    let a = std::fs::read(&f1).unwrap();
    assert_eq!(a, std::fs::read(&f2).unwrap());
    let text = stdout(&o1);
    assert!(text.contains("front:"), "{text}");
    assert!(text.contains("cvss (spearman)"), "{text}");

    let (_, f3) = optimize_to(dir.path(), "c.json", &["--seed", "8"]);
    let front: serde_json::Value = serde_json::from_slice(&std::fs::read(f3).unwrap()).unwrap();
    assert_eq!(front["provenance"]["seed"], 8);
}

#[test]
fn optimize_from_flags_writes_json_to_stdout() {
    let input = fixture("vulns6.csv");
    let o = vulnrank(&[
        "optimize",
        "--input",
        p(&input),
        "--metric",
        "cvss:higher:0..10",
        "--metric",
        "age_days:higher",
        "--objective",
        "cvss:kendall",
        "--objective",
        "age_days:canberra",
        "--population",
        "20",
        "--generations",
        "10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let front: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(front["objectives"][1]["distance"], "canberra");
    assert!(stderr(&o).contains("front:"));
}

#[test]
fn optimize_input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("vulns6.csv");
    let out = dir.path().join("front.json");
    let undeclared_objective = vulnrank(&[
        "optimize",
        "--input",
        p(&input),
        "--metrics-file",
        p(&fixture("metrics.json")),
        "--objective",
        "epss:spearman",
        "--out",
        p(&out),
    ]);
    assert_eq!(undeclared_objective.status.code(), Some(2), "{}", stderr(&undeclared_objective));
    assert!(stderr(&undeclared_objective).contains("epss"));

    let undeclared_column = vulnrank(&["optimize", "--input", p(&input), "--metric", "cvss:higher"]);
    assert_eq!(undeclared_column.status.code(), Some(2));
    assert!(stderr(&undeclared_column).contains("age_days"));

    let manifest = dir.path().join("m.json");
    std::fs::write(
        &manifest,
        format!(
            r#"{{"input": "{}", "metrics_file": "{}", "objectives": [{{"metric": "patch_age", "distance": "spearman"}}]}}"#,
            p(&input),
            p(&fixture("metrics.json"))
        ),
    )
    .unwrap();
    let bad_manifest = vulnrank(&["optimize", "--manifest", p(&manifest), "--out", p(&out)]);
    assert_eq!(bad_manifest.status.code(), Some(2));

    let bad_config = vulnrank(&["optimize", "--manifest", p(&fixture("manifest.json")), "--population", "7"]);
    assert_eq!(bad_config.status.code(), Some(2));

    let missing = vulnrank(&["optimize", "--input", "/nonexistent.csv", "--metric", "x:higher"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("front.json");
    for args in [
        vec!["optimize", "--population", "many", "--out", p(&out)],
        vec!["optimize", "--out", p(&out)],
        vec!["optimize", "--input", "x.csv", "--metric", "cvss", "--out", p(&out)],
        vec!["optimize", "--input", "x.csv", "--objective", "cvss", "--out", p(&out)],
        vec!["frobnicate"],
        vec!["select", "--front", "f.json", "--out", p(&out)],
    ] {
        let o = vulnrank(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    assert!(!out.exists());
    assert_eq!(vulnrank(&["--help"]).status.code(), Some(0));
    assert_eq!(vulnrank(&["--version"]).status.code(), Some(0));
}

#[test]
fn single_record_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.csv");
    std::fs::write(&input, "vuln_id,asset_id,cvss,age\nCVE-1,h,7.0,3\n").unwrap();
    let o = vulnrank(&[
        "optimize",
        "--input",
        p(&input),
        "--metric",
        "cvss:higher",
        "--metric",
        "age:higher",
        "--population",
        "4",
        "--generations",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let front: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(front["members"].as_array().unwrap().len(), 1);
    assert_eq!(front["members"][0]["genome"], serde_json::json!([1]));
}

#[test]
fn aggregate_table2_reports_cycle() {
    let o = vulnrank(&["aggregate", "--ranks", p(&fixture("table2_ranks.json"))]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rank"], serde_json::json!([2, 2, 2]));
    assert_eq!(v["cycle_detected"], true);
    assert!(stderr(&o).contains("cycle"));
}

#[test]
fn aggregate_single_rank_and_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let ranks = dir.path().join("one.json");
    std::fs::write(&ranks, "[[3, 1, 4, 2]]").unwrap();
    let out = dir.path().join("agg.json");
    let o = vulnrank(&["aggregate", "--ranks", p(&ranks), "--stat", "median", "--out", p(&out)]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("cycle"));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["rank"], serde_json::json!([3, 1, 4, 2]));
    assert_eq!(v["cycle_detected"], false);

    let o = vulnrank(&[
        "aggregate",
        "--input",
        p(&fixture("vulns6.csv")),
        "--metrics-file",
        p(&fixture("metrics.json")),
        "--stat",
        "geometric-mean",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["items"][0]["vuln_id"], "CVE-2023-0001");
    assert_eq!(v["rank"].as_array().unwrap().len(), 6);
}

#[test]
fn aggregate_unknown_stat_exits_1() {
    let o = vulnrank(&["aggregate", "--ranks", p(&fixture("table2_ranks.json")), "--stat", "mode"]);
    assert_eq!(o.status.code(), Some(1));
    let ragged = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(ragged.path(), "[[1, 2], [1, 2, 3]]").unwrap();
    let o = vulnrank(&["aggregate", "--ranks", p(ragged.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn distance_examples() {
    let cases = [
        ("canberra", "[1,2,3]", "[3,2,1]", "1.0"),
        ("spearman", "[1,2,3]", "[1,3,2]", "0.5"),
        ("kendall", "[1,2,3]", "[3,2,1]", "3"),
        ("kendall-normalized", "[1,2,3]", "[1,2,3]", "1.0"),
        ("kendall-normalized", "[1,2,3]", "[3,2,1]", "-1.0"),
    ];
    for (metric, a, b, want) in cases {
        let o = vulnrank(&["distance", "--a", a, "--b", b, "--metric", metric]);
        assert!(o.status.success(), "{metric}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), want, "{metric}");
    }
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), "[3, 2, 1]").unwrap();
    let o = vulnrank(&["distance", "--a", "[1,2,3]", "--b", p(file.path()), "--metric", "kendall"]);
    assert_eq!(stdout(&o).trim(), "3");

    let mismatch = vulnrank(&["distance", "--a", "[1,2,3]", "--b", "[1,2]", "--metric", "canberra"]);
    assert_eq!(mismatch.status.code(), Some(2));
    let tied = vulnrank(&["distance", "--a", "[1.5,1.5,3]", "--b", "[1,2,3]", "--metric", "kendall-normalized"]);
    assert_eq!(tied.status.code(), Some(2));
}

fn ab_front_file(dir: &Path) -> PathBuf {
    let path = dir.join("front.json");
    std::fs::write(
        &path,
        r#"{
  "provenance": {"seed": null, "generations": null, "population_size": null},
  "objectives": [{"name": "cvss", "distance": "spearman"}, {"name": "age", "distance": "spearman"}],
  "members": [
    {"genome": [1, 2, 3], "fitness": [-1.0, 0.2]},
    {"genome": [2, 1, 3], "fitness": [-0.5, -0.5]}
  ]
}"#,
    )
    .unwrap();
    path
}

#[test]
fn select_by_weights() {
    let dir = tempfile::tempdir().unwrap();
    let front = ab_front_file(dir.path());
    let o = vulnrank(&["select", "--front", p(&front), "--weights", "0.5,0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["genome"], serde_json::json!([2, 1, 3]));
    let o = vulnrank(&["select", "--front", p(&front), "--weights", "1,0"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["genome"], serde_json::json!([1, 2, 3]));

    let out = dir.path().join("pick.json");
    let bad = vulnrank(&["select", "--front", p(&front), "--weights", "0.5,0.6", "--out", p(&out)]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("sum"));
    assert!(!out.exists());
}

#[test]
fn select_by_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let front = ab_front_file(dir.path());
    let o = vulnrank(&["select", "--front", p(&front), "--thresholds", "inf,inf", "--priority", "age,cvss"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["id"], 1);

    let o = vulnrank(&["select", "--front", p(&front), "--thresholds", "inf,inf"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["id"], 0);

    let out = dir.path().join("pick.json");
    let none = vulnrank(&["select", "--front", p(&front), "--thresholds", "-2,inf", "--out", p(&out)]);
    assert_eq!(none.status.code(), Some(0));
    assert!(stdout(&none).contains("no survivor"));
    assert!(!out.exists());

    let bad = vulnrank(&["select", "--front", p(&front), "--thresholds", "inf,inf", "--priority", "0,0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn select_joins_catalog_identifiers() {
    let dir = tempfile::tempdir().unwrap();
    let (o, front) = optimize_to(dir.path(), "front.json", &[]);
    assert!(o.status.success());
    let out = dir.path().join("pick.json");
    let o = vulnrank(&[
        "select",
        "--front",
        p(&front),
        "--weights",
        "1,0",
        "--input",
        p(&fixture("vulns6.csv")),
        "--metrics-file",
        p(&fixture("metrics.json")),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    // Unit weight on cvss picks its perfect rank: highest CVSS first.
    assert_eq!(v["fitness"][0], -1.0);
    assert_eq!(v["priority"][0]["vuln_id"], "CVE-2023-0001");
    assert_eq!(v["priority"][5]["vuln_id"], "CVE-2022-1004");

    let bad_front = dir.path().join("bad.json");
    std::fs::write(&bad_front, "{\"members\": 3}").unwrap();
    let o = vulnrank(&["select", "--front", p(&bad_front), "--weights", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serve_bind_conflict_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let front = ab_front_file(dir.path());
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = vulnrank(&["serve", "--front", p(&front), "--bind", &addr]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("bind"));
}

#[test]
fn serve_answers_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_vulnrank"))
        .args(["serve", "--manifest", p(&fixture("manifest.json")), "--bind", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server prints its address").unwrap();
        if let Some(rest) = line.strip_prefix("listening on http://") {
            break rest.to_string();
        }
    };
    let request = |req: String| {
        let mut s = TcpStream::connect(&addr).unwrap();
        s.write_all(req.as_bytes()).unwrap();
        let mut resp = String::new();
        s.read_to_string(&mut resp).unwrap();
        resp
    };
    let resp = request("GET /api/metrics HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n".into());
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("age_days"));
    let body = r#"{"weights":[1,0]}"#;
    let resp = request(format!(
        "POST /api/scalarize HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    ));
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"fitness\":[-1.0"), "{resp}");
    child.kill().unwrap();
    child.wait().unwrap();
    drop(dir);
}

#[test]
fn serve_rejects_missing_ui_dir() {
    let dir = tempfile::tempdir().unwrap();
    let front = ab_front_file(dir.path());
    let o = vulnrank(&["serve", "--front", p(&front), "--bind", "127.0.0.1:0", "--ui-dir", "/nonexistent/ui"]);
    assert_eq!(o.status.code(), Some(2));
}
