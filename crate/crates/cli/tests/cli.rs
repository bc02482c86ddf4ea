use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gsa(args: &[&str]) -> Output {
    gsa_env(args, &[])
}

fn gsa_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gsa"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> Value {
    assert!(!o.status.success());
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

/// Rows of a CSV result as header-keyed maps.
fn rows(csv_text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let body: String = csv_text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            header
                .iter()
                .map(String::from)
                .zip(rec.unwrap().iter().map(String::from))
                .collect()
        })
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn saved_designs_reproduce_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, &str); 4] = [
        (
            &["toy", "--N", "120", "--method", "pf", "--u", "1"],
            "quantile",
            "toy_pf.csv",
        ),
        (
            &["toy", "--N", "80", "--n", "20", "--method", "ustat", "--u", "2"],
            "quantile",
            "toy_ustat.csv",
        ),
        (&["toy", "--N", "150", "--u", "3"], "quantile", "toy_rank.csv"),
        (
            &["gremaud", "--N", "400", "--method", "rank", "--u", "3"],
            "cvm",
            "gremaud_rank.csv",
        ),
    ];
    for (args, family, file) in cases {
        let design = dir.path().join(file);
        let mut run: Vec<&str> = args.to_vec();
        run.extend(["--save-design", path_str(&design), "--reproducible"]);
        let first = rows(&stdout(&gsa(&run)));
        let method = first[0]["method"].as_str();
        let again = rows(&stdout(&gsa(&[
            "estimate",
            "--design",
            path_str(&design),
            "--family",
            family,
            "--method",
            method,
            "--seed",
            &first[0]["seed"],
            "--reproducible",
        ])));
        assert_eq!(again[0]["estimate"], first[0]["estimate"], "{file}");
        assert_eq!(again[0]["denominator"], first[0]["denominator"], "{file}");
    }
}

#[test]
fn reproducible_output_is_byte_identical() {
    let args = ["toy", "--N", "200", "--R", "4", "--reproducible"];
    let a = gsa_env(&args, &[("GSA_WORKERS", "1")]);
    let b = gsa_env(&args, &[("GSA_WORKERS", "4")]);
    assert_eq!(stdout(&a), stdout(&b));
    let json = ["gremaud", "--N", "300", "--format", "json", "--reproducible"];
    assert_eq!(stdout(&gsa(&json)), stdout(&gsa(&json)));

    let stamped = stdout(&gsa(&["toy", "--N", "50"]));
    assert!(stamped.starts_with("# gsa toy generated at unix time "));
    assert!(!rows(&stamped)[0]["wall_time"].is_empty());
}

#[test]
fn replication_rows_and_summary() {
    let o = gsa(&[
        "toy",
        "--N",
        "100",
        "--R",
        "3",
        "--method",
        "pf",
        "--u",
        "1",
        "1,3",
        "--reproducible",
    ]);
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 6);
    assert_eq!(r[1]["u"], "{1,3}");
    assert_eq!(r[5]["replication"], "2");
    let analytic: f64 = r[0]["analytic"].parse().unwrap();
    assert!((analytic - 0.70504).abs() < 1e-5);
    let summary = String::from_utf8_lossy(&o.stderr);
    assert!(summary.contains("u={1,3}") && summary.contains("mse"), "{summary}");

    let rank = gsa(&["toy", "--N", "100", "--u", "1,3"]);
    assert_eq!(rank.status.code(), Some(2));
    assert_eq!(error_record(&rank)["error"]["field"], "u");
}

#[test]
fn json_rows_keep_column_order() {
    let text = stdout(&gsa(&[
        "calibrate",
        "--N",
        "100",
        "--regime",
        "uniform",
        "--width",
        "1",
        "--format",
        "json",
    ]));
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["generated_unix_time"].is_u64());
    let row = v["rows"][0].as_object().unwrap();
    assert_eq!(row.keys().collect::<Vec<_>>(), ["N", "regime", "n", "warning"]);
    assert!(row["n"].as_u64().unwrap() > 10_000);
}

#[test]
fn calibration_warns_on_the_generic_regime() {
    let o = gsa(&["calibrate", "--N", "100", "--reproducible"]);
    let r = rows(&stdout(&o));
    assert_eq!(r[0]["n"], "10000");
    assert!(!r[0]["warning"].is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("warning:"));

    let ceiling = gsa(&["calibrate", "--N", "100000", "--ceiling", "1000"]);
    assert_eq!(ceiling.status.code(), Some(1));
    assert_eq!(error_record(&ceiling)["error"]["kind"], "calibration_infeasible");
}

#[test]
fn ragged_design_row_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("ragged.csv");
    std::fs::write(&design, "z,z_pf\n0.1,0.2\n0.3,0.4\n0.5\n0.7,0.8\n").unwrap();
    let o = gsa(&["estimate", "--design", path_str(&design)]);
    assert_eq!(o.status.code(), Some(1));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "design");
    assert_eq!(rec["error"]["row"], 3);
    assert!(rec["error"]["message"].as_str().unwrap().contains("row 3"));

    std::fs::write(&design, "z,z_pf\n0.1,0.2\n0.3,abc\n").unwrap();
    let rec = error_record(&gsa(&["estimate", "--design", path_str(&design)]));
    assert_eq!(rec["error"]["row"], 2);
    assert_eq!(rec["error"]["column"], "z_pf");
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let o = gsa(&["toy", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"]["kind"], "usage");

    let o = gsa(&[]);
    assert_eq!(o.status.code(), Some(2));

    let o = gsa(&["toy", "--method", "magic"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"]["field"], "method");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"toy\"\n\n[toy]\nN = 10\nwidth = 3\n").unwrap();
    let o = gsa(&["--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "config");
    assert_eq!(rec["error"]["line"], 5);
    assert_eq!(rec["error"]["field"], "width");
}

#[test]
fn config_values_yield_to_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "command = \"gremaud\"\nreproducible = true\n\n[gremaud]\nN = 300\nR = 1\nu = [\"1\", \"2,3\"]\nseed = 9\n",
    )
    .unwrap();
    let base = rows(&stdout(&gsa(&["--config", path_str(&cfg)])));
    assert_eq!(base.len(), 2);
    assert_eq!(base[0]["N"], "300");
    assert_eq!(base[1]["u"], "{2,3}");
    let over = rows(&stdout(&gsa(&["--config", path_str(&cfg), "gremaud", "--R", "2"])));
    assert_eq!(over.len(), 4);
    assert_eq!(over[0]["estimate"], base[0]["estimate"]);

    let o = gsa(&["--config", path_str(&cfg), "toy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn second_level_with_an_external_inner_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("second.toml");
    let families = "[[second-level.families]]\ntype = \"uniform_interval\"\na_low = 0.0\na_high = 0.1\nb_low = 0.9\nb_high = 1.0\n";
    std::fs::write(
        &cfg,
        format!(
            "command = \"second-level\"\nreproducible = true\n\n[second-level]\nN = 6\nn = 4\nu = [\"1\"]\ninner_command = [\"sh\", \"-c\", \"read a b; echo $a\"]\n\n{families}\n{families}"
        ),
    )
    .unwrap();
    let r = rows(&stdout(&gsa(&["--config", path_str(&cfg)])));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["prior"], "custom");
    assert!(r[0]["reference"].is_empty());
    assert!(r[0]["estimate"].parse::<f64>().is_ok(), "{:?}", r[0]);

    let failing = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("read a b; echo $a", "exit 3");
    std::fs::write(&cfg, failing).unwrap();
    let o = gsa(&["--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "simulator");
    assert_eq!(rec["error"]["input"].as_array().unwrap().len(), 2);
}

#[test]
fn second_level_builtin_prior() {
    let o = gsa(&[
        "second-level",
        "--prior",
        "b3wide",
        "--N",
        "60",
        "--n",
        "30",
        "--reproducible",
    ]);
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 6);
    assert_eq!(r[2]["prior"], "b3wide");
    assert_eq!(r[2]["reference"].parse::<f64>().unwrap(), 0.56176);
    let layout = String::from_utf8_lossy(&o.stderr);
    assert!(layout.contains("reference") && layout.contains("{2,3}"), "{layout}");
}
