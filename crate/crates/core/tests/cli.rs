//! The `strategem` binary: output formats, reproducibility and exit codes.

use std::fs;
use std::process::{Command, Output};

use strategem::report::RESULT_HEADER;
use strategem::validate::EMBEDDED_GOLDENS;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strategem"))
        .args(args)
        .env_remove("STRATEGEM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column<'a>(header: &str, row: &'a str, name: &str) -> &'a str {
    let k = header.split(',').position(|h| h == name).unwrap();
    row.split(',').nth(k).unwrap()
}

#[test]
fn power_both_modes_agree_on_one_row() {
    let o = run(&[
        "power", "--case", "case1", "--n", "100", "--d", "0", "--mode", "both", "--reps", "10000",
        "--seed", "42",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], RESULT_HEADER.join(","));
    let a: f64 = column(lines[0], lines[1], "power_analytic")
        .parse()
        .unwrap();
    let m: f64 = column(lines[0], lines[1], "power_mc").parse().unwrap();
    assert!((a - m).abs() <= 0.015, "{a} vs {m}");
    assert_eq!(column(lines[0], lines[1], "seed"), "42");
    assert_eq!(column(lines[0], lines[1], "replications"), "10000");
}

#[test]
fn csv_is_bit_identical_across_runs_and_workers() {
    let base = [
        "power", "--case", "case2", "--M", "3", "--reps", "3000", "--seed", "9",
    ];
    let first = run(&base);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, run(&base).stdout);
    for w in ["1", "4"] {
        let mut args = base.to_vec();
        args.extend(["--workers", w]);
        assert_eq!(first.stdout, run(&args).stdout, "workers {w}");
    }
}

#[test]
fn json_rows_carry_the_csv_fields() {
    let args = [
        "power",
        "--case",
        "case3",
        "--criteria",
        "both",
        "--reps",
        "500",
        "--seed",
        "3",
    ];
    let csv = stdout(&run(&args));
    let mut json_args = args.to_vec();
    json_args.push("--json");
    let o = run(&json_args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let csv_rows: Vec<&str> = csv.lines().skip(1).collect();
    let objects: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(objects.len(), csv_rows.len());
    assert_eq!(objects.len(), 2);
    for (obj, row) in objects.iter().zip(csv_rows) {
        let map = obj.as_object().unwrap();
        let keys: Vec<&str> = map.keys().map(String::as_str).collect();
        let mut sorted_header = RESULT_HEADER.to_vec();
        sorted_header.sort_unstable();
        let mut sorted_keys = keys.clone();
        sorted_keys.sort_unstable();
        assert_eq!(sorted_keys, sorted_header);
        assert!(map["power_analytic"].is_null());
        let mc = map["power_mc"].as_f64().unwrap();
        let printed: f64 = column(&RESULT_HEADER.join(","), row, "power_mc")
            .parse()
            .unwrap();
        assert!((mc - printed).abs() < 1e-8);
        assert_eq!(map["measure_index"], serde_json::Value::Null);
    }
}

#[test]
fn analytic_mode_ignores_replications_with_a_warning() {
    let o = run(&[
        "power",
        "--case",
        "case1",
        "--strategy",
        "dimensional",
        "--mode",
        "analytic",
        "--reps",
        "50",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("ignored"));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(column(lines[0], lines[1], "replications"), "");
    assert_eq!(column(lines[0], lines[1], "power_mc"), "");
    assert_eq!(column(lines[0], lines[1], "power_analytic"), "0.997821956");
}

#[test]
fn seed_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_strategem"))
        .args(["power", "--case", "case1", "--reps", "200"])
        .env("STRATEGEM_SEED", "1234")
        .output()
        .unwrap();
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(column(lines[0], lines[1], "seed"), "1234");
    let flagged = run(&[
        "power", "--case", "case1", "--reps", "200", "--seed", "1234",
    ]);
    assert_eq!(o.stdout, flagged.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = run(&["power", "--case", "case9"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    for name in [
        "case1",
        "case2",
        "case3",
        "case4",
        "large-sample",
        "comorbidity",
    ] {
        assert!(msg.contains(name), "{msg}");
    }
    for args in [
        &["power", "--case", "case1", "--c", "0.5"][..],
        &["power", "--case", "case1", "--n", "101"],
        &["power", "--case", "case2", "--M", "2", "--d", "0.5"],
        &["power", "--case", "case2", "--mode", "analytic"],
        &["power", "--mode", "fast"],
        &["power"],
        &["figure", "fig7"],
        &["power", "--case", "case1", "--reps", "0"],
        &["bogus"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_failures_exit_with_one() {
    let o = run(&[
        "power",
        "--case",
        "case1",
        "--reps",
        "2000000",
        "--time-budget",
        "0.001",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("partial result"), "{}", stderr(&o));
}

#[test]
fn configuration_grid_expands_to_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.toml");
    fs::write(
        &path,
        "[[scenario]]\ncase = \"case1\"\nstrategy = [\"dimensional\", \"category\"]\nn = [40, 100]\n\n[[scenario]]\ncase = \"case2\"\nM = 2\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let o = run(&["power", "--config", p, "--mode", "analytic"]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "multi-criterion rows have no analytic power"
    );
    let o = run(&["power", "--config", p, "--reps", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 4 + 2);
    assert_eq!(
        run(&["power", "--config", p, "--n", "40"]).status.code(),
        Some(2)
    );
    fs::write(&path, "[[scenario]]\ncase = \"case1\"\nbogus = 1\n").unwrap();
    let o = run(&["power", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let args = ["power", "--case", "case4", "--N", "3", "--reps", "400"];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    assert_eq!(run(&with_out).status.code(), Some(0));
    assert_eq!(fs::read(&path).unwrap(), run(&args).stdout);
}

#[test]
fn validate_reports_a_corrupted_golden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("goldens.toml");
    let corrupted = EMBEDDED_GOLDENS.replacen("0.691462461274013", "0.691462471274013", 1);
    assert_ne!(corrupted, EMBEDDED_GOLDENS);
    fs::write(&path, corrupted).unwrap();
    let o = run(&["validate", "--quick", "--goldens", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o)
        .lines()
        .any(|l| l.starts_with("FAIL") && l.contains("normal_cdf_0_5")));
    assert!(stderr(&o).contains("normal_cdf_0_5"));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with("FAIL")).count(),
        1
    );

    fs::write(&path, "[normal_cdf_0_5]\nexpected = \"oops\"\n").unwrap();
    assert_eq!(
        run(&["validate", "--goldens", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn figure_writes_one_csv_per_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["figure", "fig5b", "--fast", "--reps", "200", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("fig5b.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RESULT_HEADER.join(","));
    assert_eq!(lines.len(), 1 + 2 * 10 * 2);
    assert!(lines[1..]
        .iter()
        .all(|l| column(lines[0], l, "replications") == "20"));
}
