use std::path::Path;
use std::process::{Command, Output};

fn exptest(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_exptest"));
    cmd.args(args).env_remove("EXPTEST_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("EXPTEST_CACHE_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn test_json_on_embedded_data() {
    let o = exptest(&["--format", "json", "test", "--data", "pyke1965", "--a", "1", "--N", "1000"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 31);
    let m = v["statistic"].as_f64().unwrap();
    assert!((m - 6.0674e-4).abs() < 1e-7, "{m}");
    let p = v["outcome"]["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
    assert_eq!(v["outcome"]["N"], 1000);
}

#[test]
fn single_value_warns_without_inference() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.txt");
    std::fs::write(&file, "3.5\n").unwrap();
    let o = exptest(&["--format", "json", "test", "--data", file.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("inference refused"), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["statistic"].as_f64().unwrap().is_finite());
    assert!(v["outcome"].is_null());
}

#[test]
fn malformed_file_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "1.5 2.5\n4 -1\n").unwrap();
    let o = exptest(&["test", "--data", file.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:3"), "{}", stderr(&o));
    assert!(stderr(&o).contains("token 4"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_arguments() {
    let o = exptest(&["test", "--data", "/nonexistent/sample.txt"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = exptest(&["test", "--data", "pyke1965", "--alpha", "1.5"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = exptest(&["test", "--data", "pyke1965", "--a", "-1"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = exptest(&["power", "--alternatives", "W(-1)", "--N", "1000"], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = exptest(&["critical-values", "--n", "20", "--N", "10"], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn critical_values_csv_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--format", "csv", "critical-values", "--n", "10", "--grid", "1,2", "--N", "1000", "--seed", "4"];
    let first = exptest(&args, Some(dir.path()));
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("critical_value"));
    assert_eq!(lines.count(), 2);
    let cached = std::fs::read_to_string(dir.path().join("critical_values.csv")).unwrap();
    assert_eq!(cached.lines().count(), 3);
    // a second run reads the cache and prints the same table
    let second = exptest(&args, Some(dir.path()));
    assert_eq!(stdout(&second), text);
}

#[test]
fn power_csv_rows() {
    let o = exptest(
        &["--format", "csv", "power", "--n", "10", "--grid", "1,2", "--alternatives", "U;G(2)", "--N", "1000"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "test,U,G(2)");
    assert_eq!(lines.len(), 3);
}

#[test]
fn eigen_and_efficiency_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = exptest(&["--format", "csv", "eigen", "--grid", "1", "--m", "300"], Some(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let delta: f64 = row[3].parse().unwrap();
    assert!((delta - 5.3e-3).abs() < 1e-3, "{delta}");
    assert!(dir.path().join("delta1.csv").exists());

    let o = exptest(
        &["--format", "json", "efficiency", "--family", "gamma", "--grid", "1,2", "--m", "300"],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for e in v[0]["values"].as_array().unwrap() {
        let e = e.as_f64().unwrap();
        assert!(e > 0.0 && e <= 1.05, "{e}");
    }
}
