use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use steerlat::bases::{is_mub, load_basis_set};
use steerlat::bounds::bounds_mub;
use steerlat::omega::omega_exact;

fn steerlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steerlat"))
        .args(args)
        .env_remove("STEERLAT_THREADS")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = steerlat(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn ok_csv(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = args.to_vec();
    full.extend(["--format", "csv"]);
    let out = steerlat(&full);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = steerlat(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_mub(dir: &Path, d: usize, n: usize) -> String {
    let p = dir.join(format!("mub{d}_{n}.json"));
    let ps = p.to_str().unwrap().to_string();
    ok_json(&["mub", "--d", &d.to_string(), "--n", &n.to_string(), "--out", &ps]);
    ps
}

#[test]
fn mub_file_loads_back_unbiased() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 3, 4);
    let bs = load_basis_set(Path::new(&p)).unwrap();
    assert_eq!((bs.dim(), bs.len()), (3, 4));
    assert!(is_mub(&bs, 1e-10));
}

#[test]
fn mub_pair_is_standard_and_fourier() {
    let out = steerlat(&["mub", "--d", "2", "--n", "2"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pair.json");
    std::fs::write(&p, &out.stdout).unwrap();
    let bs = load_basis_set(&p).unwrap();
    let s = 0.5f64.sqrt();
    let m0 = bs.basis(0).matrix();
    let m1 = bs.basis(1).matrix();
    for i in 0..2 {
        for j in 0..2 {
            assert!((m0[(i, j)].re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            let sign = if i == 1 && j == 1 { -1.0 } else { 1.0 };
            assert!((m1[(i, j)].re - sign * s).abs() < 1e-12 && m1[(i, j)].im.abs() < 1e-12);
        }
    }
}

#[test]
fn six_dimensional_request_beyond_three_is_a_capability_error() {
    let (c, err) = code(&["mub", "--d", "6", "--n", "4"]);
    assert_eq!(c, 2);
    assert!(err.contains("3 MUBs"), "{err}");
}

#[test]
fn omega_profile_of_qubit_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 2, 2);
    let v = ok_json(&["omega", "--bases", &p, "--all"]);
    let row = &v["rows"][1];
    assert_eq!(row["l"], 2);
    assert!((row["omega_bar"].as_f64().unwrap() - 0.8536).abs() < 1e-4);
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["ur_bound"].as_array().unwrap().len(), 4);
}

#[test]
fn json_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 3, 3);
    let args = ["omega", "--bases", p.as_str(), "--all"];
    let json = ok_json(&args);
    let csv = ok_csv(&args);
    let header = &csv[0];
    assert_eq!(csv.len() - 1, json["rows"].as_array().unwrap().len());
    for (row, obj) in csv[1..].iter().zip(json["rows"].as_array().unwrap()) {
        for col in ["l", "omega", "omega_bar", "ur_component"] {
            let k = header.iter().position(|h| h == col).unwrap();
            let a: f64 = row[k].parse().unwrap();
            assert_eq!(a, obj[col].as_f64().unwrap(), "{col}");
        }
        let k = header.iter().position(|h| h == "selection").unwrap();
        assert_eq!(row[k], obj["selection"].as_str().unwrap());
    }
}

#[test]
fn two_bases_method_rejects_three_bases() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 3, 3);
    assert_eq!(
        code(&["omega", "--bases", &p, "--l", "2", "--method", "two-bases"]).0,
        2
    );
}

#[test]
fn two_bases_method_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 4, 2);
    let a = ok_json(&["omega", "--bases", &p, "--all", "--method", "two-bases"]);
    let b = ok_json(&["omega", "--bases", &p, "--all"]);
    for (x, y) in a["rows"].as_array().unwrap().iter().zip(b["rows"].as_array().unwrap()) {
        assert!((x["omega"].as_f64().unwrap() - y["omega"].as_f64().unwrap()).abs() < 1e-10);
    }
}

#[test]
fn missing_and_malformed_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&["omega", "--bases", "/nonexistent/x.json", "--l", "2"]).0, 3);
    assert_eq!(code(&["omega", "--bases", bad.to_str().unwrap(), "--l", "2"]).0, 3);
    assert_eq!(code(&["omega", "--l", "2"]).0, 2);
}

#[test]
fn bounds_closed_forms() {
    let v = ok_json(&["bounds", "--d", "3", "--n", "3", "--mub", "--all"]);
    let row = &v["rows"][2];
    assert_eq!(row["l"], 3);
    assert!((row["theta_bar"].as_f64().unwrap() - 0.7182).abs() < 1e-4);
    assert_eq!(code(&["bounds", "--d", "3", "--n", "3", "--mub", "--l", "7"]).0, 3);
}

#[test]
fn enumerated_bounds_on_mub_file_stay_above_omega() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 3, 3);
    let v = ok_json(&["bounds", "--bases", &p, "--all"]);
    let bs = load_basis_set(Path::new(&p)).unwrap();
    for row in v["rows"].as_array().unwrap() {
        let l = row["l"].as_u64().unwrap() as usize;
        assert_eq!(row["regime"], "general_enumerated");
        let omega = omega_exact(&bs, l).unwrap().value;
        let lambda = row["lambda"].as_f64().unwrap();
        let gamma = row["gamma"].as_f64().unwrap();
        assert!(omega <= lambda.min(gamma) + 1e-9, "L={l}");
        if l <= 6 {
            // Lambda is a purity relaxation: enumeration can only tighten the closed form.
            let closed = bounds_mub(l, 3, 3).unwrap();
            assert!(lambda <= closed.lambda + 1e-9, "L={l}");
        }
    }
}

#[test]
fn threshold_values() {
    let v = ok_json(&[
        "threshold",
        "--family",
        "isotropic",
        "--d",
        "3",
        "--n",
        "4",
        "--source",
        "gamma",
    ]);
    assert!((v["rows"][0]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let w = ok_json(&["threshold", "--family", "werner", "--d", "3", "--n", "4"]);
    assert_eq!(w["rows"][0]["capped"], true);
    assert!((w["rows"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn threshold_sweep_matches_single_runs() {
    let sweep = ok_csv(&[
        "threshold",
        "--family",
        "isotropic",
        "--d",
        "2",
        "--d-max",
        "5",
        "--n",
        "2",
    ]);
    assert_eq!(sweep[0].join(","), "family,d,N,source,value,capped,lhs_reference");
    for row in &sweep[1..] {
        let single = ok_csv(&["threshold", "--family", "isotropic", "--d", &row[1], "--n", "2"]);
        assert_eq!(&single[1], row);
    }
}

#[test]
fn witness_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 3, 2);
    let hi = ok_json(&["witness", "--state", "iso:3:0.9", "--bases", &p]);
    assert_eq!(hi["steerable"], true);
    assert_eq!(hi["best_l"], 2);
    let lo = ok_json(&["witness", "--state", "iso:3:0.5", "--bases", &p]);
    assert_eq!(lo["steerable"], false);
    assert_eq!(code(&["witness", "--state", "iso:x", "--bases", &p]).0, 2);
}

#[test]
fn optimize_is_reproducible_and_files_verify() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<(Value, Vec<u8>, Vec<u8>)> = ["a", "b"]
        .iter()
        .map(|tag| {
            let out = dir.path().join(tag);
            let v = ok_json(&[
                "optimize",
                "--family",
                "isotropic",
                "--d",
                "3",
                "--n",
                "2",
                "--seed",
                "42",
                "--out-dir",
                out.to_str().unwrap(),
            ]);
            let settings = std::fs::read(out.join("isotropic_d3_n2.json")).unwrap();
            let csv = std::fs::read(out.join("isotropic_d3_thresholds.csv")).unwrap();
            (v, settings, csv)
        })
        .collect();
    assert_eq!(runs[0].1, runs[1].1);
    let strip = |b: &[u8]| String::from_utf8_lossy(b).replace("/a/", "/x/").replace("/b/", "/x/");
    assert_eq!(strip(&runs[0].2), strip(&runs[1].2));

    let row = &runs[0].0["rows"][0];
    let best = row["omega_bar"].as_f64().unwrap();
    assert!((best - 0.7887).abs() < 5e-3, "{best}");
    let bs = load_basis_set(Path::new(row["settings"].as_str().unwrap())).unwrap();
    assert!((omega_exact(&bs, 2).unwrap().value_bar - best).abs() < 1e-9);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_mub(dir.path(), 4, 3);
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_steerlat"))
            .args(["omega", "--bases", &p, "--all"])
            .env("STEERLAT_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
    assert_eq!(code(&["limit", "--scenario", "hemisphere", "--threads", "0"]).0, 2);
}

#[test]
fn limits() {
    let h = ok_json(&["limit", "--scenario", "hemisphere", "--grid", "5000"]);
    assert!((h["rows"][0]["omega_over_n"].as_f64().unwrap() - 0.75).abs() < 0.01);
    let p = ok_json(&["limit", "--scenario", "half-plane", "--grid", "5000"]);
    let want = (std::f64::consts::PI + 2.0) / (2.0 * std::f64::consts::PI);
    assert!((p["rows"][0]["omega_over_n"].as_f64().unwrap() - want).abs() < 0.01);
    let (c, err) = code(&["limit", "--scenario", "hemisphere", "--grid", "10"]);
    assert_eq!(c, 3);
    assert!(err.contains("grid too small"));
}
