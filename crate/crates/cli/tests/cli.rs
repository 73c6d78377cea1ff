use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mdraw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdraw"))
        .args(args)
        .env_remove("MDRAW_SEED")
        .env_remove("MDRAW_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ndjson(bytes: &[u8]) -> Vec<Value> {
    std::str::from_utf8(bytes)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn records<'a>(lines: &'a [Value], kind: &str) -> Vec<&'a Value> {
    lines.iter().filter(|v| v["record"] == kind).collect()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn small_estimate_runs_without_gate() {
    let out = mdraw(&["estimate", "inv-drawdown-meander", "--paths", "10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = ndjson(&out.stdout);
    assert_eq!(lines[0]["record"], "header");
    assert_eq!(lines[0]["tool"], "mdraw");
    assert_eq!(lines[0]["seed"], 1);
    let reports = records(&lines, "report");
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["n_samples"], 10);
    assert!(f(reports[0], "ci_high") > f(reports[0], "ci_low"));
    assert_eq!(reports[0]["gate"], "");
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ndjson");
    let b = dir.path().join("b.ndjson");
    for (path, workers) in [(&a, "1"), (&b, "3")] {
        let out = mdraw(&[
            "estimate",
            "value-at-tau",
            "--paths",
            "300",
            "--steps",
            "4096",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&mdraw(&["estimate", "not-an-identity"])), 64);
    assert_eq!(code(&mdraw(&[])), 64);
    assert_eq!(code(&mdraw(&["lehoczky", "--b", "1"])), 64);
    assert_eq!(code(&mdraw(&["lehoczky", "--b", "0.5"])), 64);
    assert_eq!(code(&mdraw(&["estimate", "wald", "--paths", "1"])), 64);
    assert_eq!(
        code(&mdraw(&[
            "estimate",
            "wald",
            "--workers",
            "0",
            "--paths",
            "5"
        ])),
        64
    );
    assert_eq!(code(&mdraw(&["curve", "--levels", ""])), 64);
    assert_eq!(code(&mdraw(&["--help"])), 0);
    assert_eq!(code(&mdraw(&["--version"])), 0);
}

#[test]
fn unwritable_output_exits_74() {
    let file = tempfile::NamedTempFile::new().unwrap();
    let inside_file = file.path().join("report.ndjson");
    let out = mdraw(&["lehoczky", "--out", inside_file.to_str().unwrap()]);
    assert_eq!(code(&out), 74);
}

#[test]
fn lehoczky_table_converges_monotonically() {
    let out = mdraw(&["lehoczky", "--b", "2", "--n", "1024"]);
    assert_eq!(code(&out), 0);
    let lines = ndjson(&out.stdout);
    let rows = records(&lines, "lehoczky");
    let ns: Vec<u64> = rows.iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, (0..=10).map(|k| 1u64 << k).collect::<Vec<_>>());
    let diffs: Vec<f64> = rows.iter().map(|r| f(r, "abs_diff")).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
    assert!(*diffs.last().unwrap() < 1e-3);
    assert!((f(rows[0], "analytic") - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn lehoczky_near_boundary_is_one() {
    let out = mdraw(&["lehoczky", "--b", "1.000000001", "--n", "64"]);
    assert_eq!(code(&out), 0);
    for r in records(&ndjson(&out.stdout), "lehoczky") {
        assert!((f(r, "product") - 1.0).abs() < 1e-8);
    }
}

#[test]
fn curve_header_and_analytic_column() {
    let out = mdraw(&["curve", "--paths", "500", "--levels", "2,0,1,0.5,4"]);
    assert_eq!(code(&out), 0);
    let lines = ndjson(&out.stdout);
    let header = &lines[0];
    assert!(header["ks_distance"].as_f64().unwrap() >= 0.0);
    assert!(header["ks_critical_1pct"].as_f64().unwrap() > 0.0);
    let rows = records(&lines, "curve");
    let levels: Vec<f64> = rows.iter().map(|r| f(r, "level")).collect();
    assert_eq!(levels, vec![0.0, 0.5, 1.0, 2.0, 4.0]);
    let analytic: Vec<f64> = rows.iter().map(|r| f(r, "analytic")).collect();
    assert!(analytic.windows(2).all(|w| w[1] <= w[0]));
    assert!((analytic[2] - 0.7357588823).abs() < 1e-10);
}

/// Numbers from a `#`-commented CSV section, keyed by column.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .map(String::from)
                .zip(r.iter().map(String::from))
                .collect()
        })
        .collect()
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let args = ["curve", "--paths", "400", "--steps", "8192", "--seed", "9"];
    let json = mdraw(&[&args[..], &["--format", "json"]].concat());
    let csv_out = mdraw(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(code(&json), 0);
    assert_eq!(code(&csv_out), 0);

    let lines = ndjson(&json.stdout);
    let json_rows = records(&lines, "curve");
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let csv_rows = csv_rows(&text);
    assert_eq!(json_rows.len(), csv_rows.len());
    for (j, c) in json_rows.iter().zip(&csv_rows) {
        for (key, cell) in c {
            let parsed: f64 = cell.parse().unwrap();
            assert_eq!(parsed.to_bits(), f(j, key).to_bits(), "{key}");
        }
    }

    let ks_line = text
        .lines()
        .find(|l| l.starts_with("# ks_distance="))
        .unwrap();
    let ks: f64 = ks_line
        .trim_start_matches("# ks_distance=")
        .parse()
        .unwrap();
    assert_eq!(ks.to_bits(), f(&lines[0], "ks_distance").to_bits());
}

#[test]
fn underpowered_verify_reports_seven_rows() {
    let out = mdraw(&["verify", "--paths", "100"]);
    let status = code(&out);
    let rows_json = ndjson(&out.stdout);
    let rows = records(&rows_json, "identity");
    assert_eq!(rows.len(), 7);
    let all_pass = rows.iter().all(|r| r["pass"] == true);
    assert_eq!(status, if all_pass { 0 } else { 2 });
    for r in rows.iter().filter(|r| r["pass"] == false) {
        assert!(!r["reason"].as_str().unwrap().is_empty());
    }
}

#[test]
fn gated_estimate_adds_coarse_and_extrapolated_rows() {
    let out = mdraw(&[
        "estimate",
        "tau1-besq4",
        "--paths",
        "400",
        "--steps",
        "4096",
        "--gate",
    ]);
    assert!(matches!(code(&out), 0 | 2));
    let lines = ndjson(&out.stdout);
    let reports = records(&lines, "report");
    let roles: Vec<&str> = reports
        .iter()
        .map(|r| r["role"].as_str().unwrap())
        .collect();
    assert_eq!(roles, ["coarse", "raw", "extrapolated"]);
    assert_eq!(reports[0]["steps"], 1024);
    let gate = reports[2]["gate"].as_str().unwrap();
    assert_eq!(code(&out) == 0, gate == "pass");
}

#[test]
fn environment_supplies_seed_and_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed_env: &str, extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_mdraw"))
            .args(["estimate", "wald", "--paths", "50", "--steps", "4096"])
            .args(extra)
            .env("MDRAW_SEED", seed_env)
            .env("MDRAW_OUT", dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
        std::fs::read(dir.path().join("estimate-wald.ndjson")).unwrap()
    };
    let from_env = run("5", &[]);
    assert_eq!(ndjson(&from_env)[0]["seed"], 5);
    let flag_wins = run("5", &["--seed", "6"]);
    assert_eq!(ndjson(&flag_wins)[0]["seed"], 6);
    assert_ne!(from_env, flag_wins);

    let explicit = dir.path().join("x.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_mdraw"))
        .args(["lehoczky", "--format", "csv", "--out"])
        .arg(&explicit)
        .env("MDRAW_OUT", dir.path().join("unused"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(Path::new(&explicit).exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn sample_emits_long_format_paths() {
    let out = mdraw(&["sample", "bm", "--paths", "2", "--steps", "8"]);
    assert_eq!(code(&out), 0);
    let lines = ndjson(&out.stdout);
    let rows = records(&lines, "path");
    assert_eq!(rows.len(), 18);
    assert_eq!(f(rows[0], "value"), 0.0);
    assert_eq!(f(rows[8], "time"), 1.0);
    assert_eq!(rows[9]["path"], 1);

    let out = mdraw(&["sample", "meander-imhof", "--paths", "3", "--steps", "16"]);
    let lines = ndjson(&out.stdout);
    assert!(records(&lines, "path").iter().all(|r| f(r, "weight") > 0.0));
    assert_eq!(code(&mdraw(&["sample", "meander", "--horizon", "2"])), 64);
}
