//! End-to-end checks of the compiled binary: argument handling, exit codes,
//! report formats, environment-variable precedence, and run reproducibility.

use std::process::Command;

fn run_with_env(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_altsum"));
    cmd.args(args);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    let out = cmd.output().expect("binary failed to spawn");
    (
        out.status.code().expect("binary was killed by a signal"),
        String::from_utf8(out.stdout).expect("stdout is not utf-8"),
        String::from_utf8(out.stderr).expect("stderr is not utf-8"),
    )
}

fn run(args: &[&str]) -> (i32, String, String) {
    run_with_env(args, &[])
}

/// Splits a CSV report into (header, rows) without quoting concerns: the
/// reports never emit commas inside cells.
fn csv_rows(stdout: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = stdout.lines();
    let header: Vec<String> = lines
        .next()
        .expect("report is empty")
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|line| line.split(',').map(str::to_owned).collect::<Vec<_>>())
        .collect();
    (header, rows)
}

fn field<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let idx = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    &row[idx]
}

#[test]
fn coeffs_csv_has_header_and_certified_rows() {
    let (code, stdout, _) = run(&["coeffs", "--n-min", "1", "--n-max", "3"]);
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    assert_eq!(header[0], "n");
    assert_eq!(rows.len(), 3);
    assert_eq!(field(&header, &rows[0], "n"), "1");
    assert_eq!(field(&header, &rows[2], "n"), "3");
    // v_1 = pi^2/6 and c_1 = 0 anchor the whole table.
    assert!(field(&header, &rows[0], "v_n").starts_with("1.6449340668482264"));
    assert_eq!(field(&header, &rows[0], "c_n"), "0");
    assert!(field(&header, &rows[1], "c_n").starts_with("-0.34657359027997265"));
}

#[test]
fn empty_range_is_a_usage_error() {
    let (code, _, stderr) = run(&["coeffs", "--n-min", "5", "--n-max", "4"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("empty range"), "stderr: {stderr}");
}

#[test]
fn json_rows_carry_typed_cells() {
    let (code, stdout, _) = run(&[
        "coeffs", "--n-min", "2", "--n-max", "4", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&stdout).expect("stdout is not json");
    let rows = rows.as_array().expect("top level is not an array");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["n"], serde_json::json!(2));
    // Arbitrary-precision reals travel as strings so no reader rounds them.
    let c2 = rows[0]["c_n"].as_str().expect("c_n is not a string");
    let parsed: f64 = c2.parse().expect("c_n does not parse");
    assert!((parsed - (-0.5 * std::f64::consts::LN_2)).abs() < 1e-15);
}

#[test]
fn verify_certifies_a_small_range() {
    let (code, stdout, _) = run(&["verify", "--n-max", "10"]);
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    assert_eq!(rows.len(), 10);
    for row in &rows {
        assert_eq!(field(&header, row, "certified_positive"), "true");
    }
}

#[test]
fn conjecture_reports_certified_decreases() {
    let (code, stdout, _) = run(&["conjecture", "--n-max", "3"]);
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    assert_eq!(rows.len(), 2);
    let d1: f64 = field(&header, &rows[0], "delta_v").parse().unwrap();
    let d2: f64 = field(&header, &rows[1], "delta_v").parse().unwrap();
    assert!((d1 - (-0.9609060278364029)).abs() < 1e-12);
    assert!((d2 - (-0.23553007666916033)).abs() < 1e-12);
    assert_eq!(field(&header, &rows[0], "certified_negative"), "true");
}

#[test]
fn asymptotics_rejects_grid_points_below_three() {
    let (code, _, stderr) = run(&["asymptotics", "--grid", "2,10"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("n >= 3"), "stderr: {stderr}");
}

#[test]
fn simulate_ccp_rejects_zero_coupon_types() {
    let (code, _, _) = run(&[
        "simulate", "ccp", "--N", "0", "--players", "1", "--trials", "10", "--seed", "1",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn same_seed_reproduces_the_report_bit_for_bit() {
    let args = [
        "simulate", "maxexp", "--n", "3", "--trials", "70000", "--seed", "99",
    ];
    let (code_a, out_a, _) = run(&args);
    let (code_b, out_b, _) = run(&args);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(out_a, out_b);
    // A different stream must decorrelate the run.
    let (_, out_c, _) = run(&[
        "simulate", "maxexp", "--n", "3", "--trials", "70000", "--seed", "99", "--stream", "1",
    ]);
    assert_ne!(out_a, out_c);
}

#[test]
fn missing_seed_draws_entropy_and_logs_it() {
    let (code, _, stderr) = run(&["simulate", "maxexp", "--n", "1", "--trials", "100"]);
    assert_eq!(code, 0);
    assert!(stderr.contains("entropy seed"), "stderr: {stderr}");
}

#[test]
fn oracle_matches_closed_forms() {
    let (code, stdout, _) = run(&["oracle", "--N", "2", "--players", "2"]);
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    let mean: f64 = field(&header, &rows[0], "mean").parse().unwrap();
    let variance: f64 = field(&header, &rows[0], "variance").parse().unwrap();
    assert!((mean - 7.0 / 3.0).abs() < 1e-11);
    assert!((variance - 4.0 / 9.0).abs() < 1e-11);

    // A single coupon type finishes in exactly one draw: variance is zero.
    let (code, stdout, _) = run(&["oracle", "--N", "1", "--players", "5"]);
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    assert_eq!(field(&header, &rows[0], "variance"), "0");
}

#[test]
fn env_var_sets_precision_and_flag_overrides_it() {
    let (code, stdout, _) = run_with_env(
        &["coeffs", "--n-min", "1", "--n-max", "1", "--digits", "45"],
        &[("FINDIFF_BITS", "192")],
    );
    assert_eq!(code, 0);
    let (header, rows) = csv_rows(&stdout);
    assert!(field(&header, &rows[0], "v_n").starts_with("1.6449340668482264364724151666460251892189"));

    let (code, _, stderr) = run_with_env(
        &["verify", "--n-max", "2"],
        &[("FINDIFF_BITS", "garbage")],
    );
    assert_eq!(code, 1);
    assert!(stderr.contains("FINDIFF_BITS"), "stderr: {stderr}");

    // An explicit flag resolves precision before the variable is consulted.
    let (code, _, _) = run_with_env(
        &["verify", "--n-max", "2", "--bits", "128"],
        &[("FINDIFF_BITS", "garbage")],
    );
    assert_eq!(code, 0);
}

#[test]
fn digits_beyond_bit_capacity_are_rejected() {
    let (code, _, stderr) = run(&[
        "coeffs", "--n-min", "1", "--n-max", "1", "--bits", "96",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("capacity"), "stderr: {stderr}");
}

#[test]
fn csv_and_json_agree_cell_for_cell() {
    let args = ["coeffs", "--n-min", "3", "--n-max", "3"];
    let (_, csv_out, _) = run(&args);
    let (_, json_out, _) = run(&[&args[..], &["--format", "json"][..]].concat());
    let (header, rows) = csv_rows(&csv_out);
    let parsed: serde_json::Value = serde_json::from_str(&json_out).unwrap();
    let object = &parsed.as_array().unwrap()[0];
    for (name, cell) in header.iter().zip(&rows[0]) {
        let json_text = match &object[name] {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        assert_eq!(&json_text, cell, "column {name} disagrees across formats");
    }
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let path = std::env::temp_dir().join("altsum-cli-out-test.csv");
    let _ = std::fs::remove_file(&path);
    let (code, stdout, _) = run(&[
        "verify", "--n-max", "2", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("n,v_n,"));
    let _ = std::fs::remove_file(&path);
}

#[test]
fn help_and_version_exit_clean() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("coeffs"));
    let (code, stdout, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("altsum"));
}
