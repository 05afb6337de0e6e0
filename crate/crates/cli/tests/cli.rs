use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qexp")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn parse_echoes_canonical_form() {
    let first = qexp(&["parse", "norm(x1)*val(x1)"]);
    assert_eq!(code(&first), 0);
    let canonical = stdout(&first);
    let second = qexp(&["parse", canonical.trim_end()]);
    assert_eq!(code(&second), 0);
    assert_eq!(stdout(&second), canonical);
}

#[test]
fn parse_error_reports_offset() {
    let o = qexp(&["parse", "norm("]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 5"));
}

#[test]
fn integrate_norm() {
    let o = qexp(&["integrate", "--config", &config("integrate_norm.toml")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["closed_form"], "5/6");
    assert_eq!(v["integrable"], true);
    assert_eq!(v["oracle_level"], 8);
    assert!(v["abs_diff"].as_f64().unwrap() < 5f64.powi(-5));
}

#[test]
fn integrate_divergent() {
    let o = qexp(&["integrate", "--config", &config("integrate_divergent.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["integrable"], false);
    assert_eq!(v["closed_form"], "0");
    assert_eq!(v["real_value"], 0.0);
    assert!(v["abs_diff"].is_null());
}

#[test]
fn overlapping_certificate_exits_3() {
    let o = qexp(&["integrate", "--prime", "5", "--level", "3", "--certificate", &config("overlap_cert.json")]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("violation_count"), "{err}");
}

#[test]
fn prime_mismatch_exits_3() {
    let o = qexp(&["integrate", "--prime", "7", "--certificate", &config("norm_cert.json")]);
    assert_eq!(code(&o), 3);
}

#[test]
fn cells_check_near_one() {
    let o = qexp(&["cells-check", "--config", &config("cells_near_one.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["ok"], true);
    assert_eq!(v["partition"]["ambiguous"], 0);
    assert_eq!(v["descriptions"][0]["mismatch_count"], 0);
}

#[test]
fn cells_check_squares_measures() {
    let o = qexp(&["cells-check", "--prime", "5", "--level", "6", "--certificate", &config("squares_cert.json")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let measures: Vec<&str> = v["cell_measures"].as_array().unwrap().iter().map(|m| m.as_str().unwrap()).collect();
    assert_eq!(measures, ["5/12", "5/12", "1/12", "1/12", "0"]);
}

#[test]
fn budget_exit_code() {
    let o = qexp(&["oracle", "--prime", "7", "--integrand", "norm(x1*x2)", "--level", "4", "--budget", "10000"]);
    assert_eq!(code(&o), 4);
    let o = qexp(&["decay", "--prime", "5", "--map", "x1^2", "--m-range", "1:8", "--budget", "1000"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&qexp(&["oracle", "--bogus"])), 1);
    assert_eq!(code(&qexp(&["expsum", "--map", "x1^2"])), 1);
    assert_eq!(code(&qexp(&["expsum", "--prime", "4", "--map", "x1^2", "--y", "1/2"])), 1);
}

#[test]
fn bad_map_exits_2() {
    assert_eq!(code(&qexp(&["expsum", "--prime", "5", "--map", "x1^^2", "--y", "1/5"])), 2);
    assert_eq!(code(&qexp(&["expsum", "--prime", "5", "--map", "x1^2", "--y", "1/x"])), 2);
}

#[test]
fn decay_x_squared() {
    let o = qexp(&["decay", "--config", &config("decay_x2.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let alpha = v["alpha_hat"].as_f64().unwrap();
    assert!((-0.55..=-0.45).contains(&alpha), "alpha_hat = {alpha}");
    assert_eq!(v["violations"], 0);
}

#[test]
fn flags_override_config() {
    let o = qexp(&["decay", "--config", &config("decay_x2.toml"), "--map", "x1^3", "--prime", "7", "--m-range", "1:6"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["prime"], 7);
    assert_eq!(v["map"][0], "x1^3");
    assert_eq!(v["m_range"][1], 6);
}

#[test]
fn singular_series_of_identity_is_one() {
    let o = qexp(&["singular", "--config", &config("singular_x.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let results = v["results"].as_array().unwrap();
    let zs: Vec<&str> = results.iter().map(|r| r["z"].as_str().unwrap()).collect();
    assert_eq!(zs, ["0", "1", "2", "3", "4"]);
    for r in results {
        assert_eq!(r["F"], "1");
        assert_eq!(r["stable"], true);
    }
}

#[test]
fn expsum_gauss_sum() {
    let o = qexp(&["expsum", "--config", &config("expsum_gauss.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let abs = v["results"][0]["abs"].as_f64().unwrap();
    assert!((abs - 5f64.powf(-0.5)).abs() < 1e-12);
    assert_eq!(v["results"][2]["m"], 2);
}

#[test]
fn kloosterman_grid() {
    let o = qexp(&["kloosterman", "--config", &config("kloosterman.toml")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["results"].as_array().unwrap().len(), 4);
    let o = qexp(&["kloosterman", "--prime", "5", "--map", "x1^2", "--a", "5", "--m", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn oracle_levels_and_monte_carlo() {
    let o = qexp(&["oracle", "--config", &config("oracle_norm.toml")]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["stable"], true);
    assert_eq!(v["levels"].as_array().unwrap().len(), 5);
    let mc = &v["monte_carlo"];
    let gap = (mc["mean"].as_f64().unwrap() - 5.0 / 6.0).abs();
    assert!(gap <= 4.0 * mc["stderr"].as_f64().unwrap());
}

fn run_into(dir: &Path, args: &[&str]) -> Output {
    let out = dir.display().to_string();
    let mut all = vec!["--out", out.as_str()];
    all.extend_from_slice(args);
    qexp(&all)
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b): (PathBuf, PathBuf) = (tmp.path().join("a"), tmp.path().join("b"));
    let cases: [(&[&str], &str); 3] = [
        (&["decay", "--config", &config("decay_x2.toml"), "--seed", "3"], "decay"),
        (&["singular", "--config", &config("singular_x.toml")], "singular"),
        (&["oracle", "--config", &config("oracle_norm.toml")], "oracle"),
    ];
    for (args, name) in cases {
        assert_eq!(code(&run_into(&a, args)), 0);
        assert_eq!(code(&run_into(&b, args)), 0);
        for ext in ["csv", "json"] {
            let file = format!("{name}.{ext}");
            assert_eq!(read(&a, &file), read(&b, &file), "{file} differs");
        }
    }
    let csv = String::from_utf8(read(&a, "decay.csv")).unwrap();
    assert!(csv.starts_with("direction,m,re,im,abs,log_p_abs\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 8);
}
