use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn matrix(&self, name: &str, rows: usize, cols: usize, data: &[f64]) -> String {
        let p = self.dir.path().join(name);
        let body = serde_json::json!({ "rows": rows, "cols": cols, "data": data });
        std::fs::write(&p, body.to_string()).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn cache(&self) -> PathBuf {
        self.dir.path().join("cache")
    }

    fn run(&self, args: &[&str]) -> (i32, String, String) {
        run_in(&self.cache(), args)
    }
}

fn run_in(cache: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stiefel-norm")).args(args).env("STIEFEL_NORM_CACHE", cache).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

fn csv_rows(s: &str) -> Vec<Vec<String>> {
    s.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn phi_zero_sigma() {
    let e = Env::new();
    let a = e.matrix("a.json", 2, 2, &[1.0, 0.0, 0.0, 2.0]);
    let s = e.matrix("s.json", 3, 3, &[0.0; 9]);
    let (code, out, _) = e.run(&["phi", "--a", &a, "--sigma", &s, "--m", "4"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["value"].as_f64(), Some(1.0));
    assert_eq!(v["upper_series"].as_f64(), Some(0.0));
    assert_eq!(v["upper_closed"].as_f64(), Some(0.0));
    assert!(v["provenance"]["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn phi_scalar_is_partial_exp() {
    let e = Env::new();
    let a = e.matrix("a.json", 1, 1, &[0.8]);
    let s = e.matrix("s.json", 1, 1, &[1.5]);
    let (code, out, _) = e.run(&["phi", "--a", &a, "--sigma", &s, "--m", "7"]);
    assert_eq!(code, 0);
    let x: f64 = 1.2;
    let mut partial = 0.0;
    let mut term = 1.0;
    for k in 0..7 {
        partial += term;
        term *= x / (k + 1) as f64;
    }
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - partial).abs() <= 1e-14 * partial, "{v} vs {partial}");
}

#[test]
fn phi_tolerance_selects_m() {
    let e = Env::new();
    let a = e.matrix("a.json", 2, 2, &[1.0, 0.2, 0.2, 0.5]);
    let s = e.matrix("s.json", 3, 3, &[0.4, 0.1, 0.0, 0.1, 0.3, 0.0, 0.0, 0.0, 0.2]);
    let (code, out, _) = e.run(&["phi", "--a", &a, "--sigma", &s, "--tol", "1e-8"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let sel = &v["tol_selection"];
    assert!(sel["bound"].as_f64().unwrap() <= 1e-8);
    assert_eq!(sel["m"], v["m"]);
    assert!(v["upper_closed"].as_f64().unwrap() <= 1e-8);
    assert!(v["lower"].as_f64().unwrap() > 0.0);
}

#[test]
fn phi_dimension_mismatch_and_bad_files() {
    let e = Env::new();
    let a = e.matrix("a.json", 3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let s = e.matrix("s.json", 2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let (code, _, err) = e.run(&["phi", "--a", &a, "--sigma", &s]);
    assert_eq!(code, 2);
    assert!(err.contains("p <= d"), "{err}");
    let bad = e.matrix("bad.json", 2, 2, &[1.0, 2.0, 3.0]);
    assert_eq!(e.run(&["phi", "--a", &bad, "--sigma", &s]).0, 2);
    assert_eq!(e.run(&["phi", "--a", "/nonexistent.json", "--sigma", &s]).0, 2);
}

#[test]
fn phi_beyond_weight_cap_is_resource_error() {
    let e = Env::new();
    let a = e.matrix("a.json", 1, 1, &[1.0]);
    let s = e.matrix("s.json", 2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let (code, _, err) = e.run(&["phi", "--a", &a, "--sigma", &s, "--m", "40"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn psi_cases() {
    let e = Env::new();
    let zero = e.matrix("z.json", 3, 2, &[0.0; 6]);
    let (code, out, _) = e.run(&["psi", "--b", &zero, "--m", "5"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["value"].as_f64(), Some(1.0));

    let b = e.matrix("b.json", 2, 1, &[0.6, 0.8]);
    let (_, out, _) = e.run(&["psi", "--b", &b, "--m", "20"]);
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 1.2660658777520082).abs() < 1e-14);

    let full = e.matrix("f.json", 3, 2, &[1.0, 0.2, -0.3, 0.8, 0.1, 0.4]);
    let (code, out, _) = e.run(&["psi", "--b", &full, "--m", "4", "--format", "json"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert!(v["lower"].as_f64().unwrap() > 0.0);
    assert!(v["lower_single_term"].as_f64().unwrap() <= v["lower"].as_f64().unwrap());
    assert!(v["corrected"]["upper_series"].as_f64().unwrap() > 0.0);
}

#[test]
fn zonal_dump_weight_two() {
    let e = Env::new();
    let (code, out, _) = e.run(&["zonal", "--weight", "2"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["kappa"], "[2]");
    assert_eq!(rows[0]["coefficients"][1]["coeff"], "2/3");
    assert_eq!(rows[1]["kappa"], "[1,1]");
    assert_eq!(rows[1]["coefficients"][0]["coeff"], "4/3");
    let (code, out, _) = e.run(&["zonal", "--weight", "3", "--kappa", "κ=[2,1]", "--format", "text"]);
    assert_eq!(code, 0);
    assert!(out.lines().filter(|l| !l.starts_with('#')).all(|l| l.starts_with("C[2,1] ")));
    assert_eq!(e.run(&["zonal", "--weight", "3", "--kappa", "[2,2]"]).0, 2);
    assert!(e.cache().join("zonal-w3-l3-m3.txt").exists());
}

#[test]
fn bounds_table_grids() {
    let e = Env::new();
    let (code, out, _) = e.run(&["bounds-table", "--d", "7:7:lin", "--m", "3"]);
    assert_eq!(code, 0);
    assert_eq!(csv_rows(&out).len(), 1);
    assert_eq!(out.lines().find(|l| !l.starts_with('#')), Some("d,p,m,t,upper_series,upper_closed,lower,flags"));

    let (code, out, _) = e.run(&["bounds-table", "--d", "3:365:log:12", "--m", "2:6:lin", "--p", "2"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 12 * 5);
    // d outer, m inner; upper_series decreases down each m column
    for m in 2..=6 {
        let col: Vec<f64> = rows.iter().filter(|r| r[2] == m.to_string()).map(|r| r[4].parse().unwrap()).collect();
        assert_eq!(col.len(), 12);
        assert!(col.windows(2).all(|w| w[1] < w[0]), "m={m}: {col:?}");
    }
    assert_eq!(e.run(&["bounds-table", "--d", "3:x", "--m", "2"]).0, 2);
    assert_eq!(e.run(&["bounds-table", "--d", "3:10:cubic", "--m", "2"]).0, 2);
    assert_eq!(e.run(&["bounds-table", "--d", "3", "--m", "1"]).0, 2);
}

#[test]
fn bounds_table_log_flag_on_underflow() {
    let e = Env::new();
    let args = ["bounds-table", "--kind", "psi", "--d", "1000000", "--m", "120", "--gamma0", "0.01"];
    let (_, plain, _) = e.run(&args);
    let row = &csv_rows(&plain)[0];
    assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
    assert!(row[7].contains("underflow_upper_series"));
    let mut with_log = args.to_vec();
    with_log.push("--log");
    let (code, out, _) = e.run(&with_log);
    assert_eq!(code, 0);
    let row = &csv_rows(&out)[0];
    let ln: f64 = row[4].parse().unwrap();
    assert!(ln < -745.0, "{ln}");
    assert!(row[7].contains("ln_upper_series"));
}

#[test]
fn validate_default_passes() {
    let e = Env::new();
    let (code, out, err) = e.run(&["validate"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().filter(|l| !l.starts_with('#')).all(|l| l.starts_with("PASS ")));
    let (code, out, _) = e.run(&["validate", "--max-weight", "3", "--dims", "2,3", "--json"]);
    assert_eq!(code, 0);
    assert!(json(&out)["checks"].as_array().unwrap().len() >= 8);
    assert_eq!(e.run(&["validate", "--max-weight", "1"]).0, 2);
}

#[test]
fn mc_check_bessel() {
    let e = Env::new();
    let b = e.matrix("b.json", 2, 1, &[0.6, 0.8]);
    let (code, out, err) = e.run(&["mc-check", "--d", "2", "--p", "1", "--b", &b, "--samples", "200000"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_eq!(v["agree_3sigma"], true);
    assert_eq!(v["n"], 200000);
    assert!((v["target"].as_f64().unwrap() - 1.2660658777520082).abs() < 1e-9);
    assert_eq!(e.run(&["mc-check", "--d", "3", "--p", "1", "--b", &b]).0, 2);
    assert_eq!(e.run(&["mc-check", "--d", "2", "--p", "1"]).0, 2);
}

#[test]
fn mc_check_bingham() {
    let e = Env::new();
    let a = e.matrix("a.json", 2, 2, &[0.5, 0.1, 0.1, 0.3]);
    let s = e.matrix("s.json", 3, 3, &[0.5, 0.1, 0.0, 0.1, 0.4, 0.0, 0.0, 0.0, 0.2]);
    let (code, out, err) = e.run(&["mc-check", "--d", "3", "--p", "2", "--a", &a, "--sigma", &s, "--samples", "200000"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["agree_3sigma"], true);
}

#[test]
fn help_and_unknown_subcommand() {
    let e = Env::new();
    let (code, out, _) = e.run(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["phi", "psi", "zonal", "bounds-table", "validate", "mc-check"] {
        assert!(out.contains(sub), "{sub}");
    }
    assert_eq!(e.run(&["frobnicate"]).0, 2);
}
