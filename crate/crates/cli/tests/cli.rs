use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use yukawa_stripes::stripes1d::{optimal_width, rescale_params};

fn yukawa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yukawa")).current_dir(dir).args(args).output().expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_slab(dir: &Path, name: &str, width: f64, period: f64) {
    let json = format!(r#"{{"d":2,"L":{period},"boxes":[[[0.0,0.0],[{width},{period}]]]}}"#);
    std::fs::write(dir.join(name), json).unwrap();
}

#[test]
fn optimal_width_table_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = yukawa(dir.path(), &["optimal-width", "--d", "3", "--M", "6,8,10,12", "--out", "run"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("run/optimal-width.csv");
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, ["M", "h_star", "h_star_over_M", "e_star", "log_e_over_M"]);
    assert_eq!(rows.len(), 4);
    let h = column(&csv, "h_star");
    let e = column(&csv, "e_star");
    for (k, m) in [6.0, 8.0, 10.0, 12.0].into_iter().enumerate() {
        let o = optimal_width(m, 3).unwrap();
        assert_eq!(h[k], o.h_star);
        assert_eq!(e[k], o.e_star);
        assert!(rows[k][1].contains('e') && rows[k][1].split('e').next().unwrap().len() >= 18);
    }
}

#[test]
fn gamma_on_a_slab_has_decreasing_error() {
    let dir = tempfile::tempdir().unwrap();
    write_slab(dir.path(), "slab.json", 0.5, 1.0);
    let out = yukawa(dir.path(), &["gamma", "--d", "2", "--beta", "8,16,32,64", "--set", "slab.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let err = column(&dir.path().join("gamma.csv"), "abs_error");
    assert_eq!(err.len(), 4);
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    assert!(dir.path().join("gamma_constants.csv").exists());
}

#[test]
fn empty_set_has_zero_energy() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.json"), r#"{"d":2,"L":3.0,"boxes":[]}"#).unwrap();
    let out = yukawa(dir.path(), &["energy", "--set", "empty.json"]);
    assert!(out.status.success());
    assert_eq!(column(&dir.path().join("energy.csv"), "total"), vec![0.0]);
    let m = manifest(&dir.path().join("energy.manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "energy");
    assert_eq!(m["inputs"]["M"], Value::Null);
    assert_eq!(m["inputs"]["m"], 12.0);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["versions"]["yukawa_stripes"], yukawa_stripes::VERSION);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = yukawa(dir.path(), &["anneal", "--n", "16", "--sweeps", "8", "--seeds", "5,6", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["anneal.csv", "anneal_trace_seed5.csv", "anneal_set_seed6.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    assert_eq!(manifest(&dir.path().join("a/anneal.manifest.json"))["seeds"], serde_json::json!([5, 6]));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# stripe sweep\ncommand = stripes\nd = 2\nM = 8\npoints = 5\nout = res\n").unwrap();
    let out = yukawa(dir.path(), &["--config", "run.cfg", "--points", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let h = column(&dir.path().join("res/stripes.csv"), "h");
    assert_eq!(h, vec![2.0, 9.0, 16.0]);
    let m = manifest(&dir.path().join("res/stripes.manifest.json"));
    assert_eq!(m["inputs"]["d"], 2);
    assert_eq!(m["inputs"]["points"], 3);
}

#[test]
fn compare_ranks_optimal_stripes_first() {
    let dir = tempfile::tempdir().unwrap();
    let out = yukawa(dir.path(), &["compare", "--M", "12", "--pairs", "2", "--resolution", "48"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let h = rescale_params(12.0, 2).unwrap().h_tilde();
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("1,\"stripes(") && first.contains(&format!("{h:.6}")), "{text}");
}

#[test]
fn invalid_input_exits_with_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["energy", "--set", "missing.json"][..], &["gamma", "--L", "0.5"], &["stripes", "--bogus", "1"], &["anneal", "--n", "8"]] {
        let out = yukawa(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"]["kind"], "config");
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn decompose_and_average_check_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let h = rescale_params(12.0, 2).unwrap().h_tilde();
    write_slab(dir.path(), "stripes.json", h, 2.0 * h);
    let out = yukawa(dir.path(), &["decompose", "--set", "stripes.json", "--grid", "4", "--lines", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = column(&dir.path().join("decompose_boundary.csv"), "v");
    assert_eq!(v.len(), 4);
    assert!(v.iter().all(|&x| x.abs() < 1e-12));
    let w = column(&dir.path().join("decompose_w.csv"), "w");
    assert!(w.iter().all(|&x| x.abs() < 1e-12));
    let field = column(&dir.path().join("decompose_field.csv"), "f_bar");
    assert_eq!(field.len(), 16);
    let out = yukawa(dir.path(), &["average-check", "--set", "stripes.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gap = column(&dir.path().join("average-check.csv"), "relative_gap")[0];
    assert!(gap.abs() <= 1e-3, "{gap}");
}

#[test]
fn scan_period_reports_zero_gap_on_commensurate_periods() {
    let dir = tempfile::tempdir().unwrap();
    let out = yukawa(dir.path(), &["scan-period", "--L-over-h", "2,4,8,4.5"]);
    assert!(out.status.success());
    let gap = column(&dir.path().join("scan-period.csv"), "gap");
    assert!(gap[..3].iter().all(|&g| g < 1e-12));
    assert!(gap[3] > 0.0);
}
