use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

/// Runs the binary with a whitespace-separated argument line.
fn formation(line: &str, dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formation"))
        .args(line.split_whitespace())
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok_json(line: &str, dir: &Path) -> Value {
    let out = formation(line, dir);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn err_json(line: &str, dir: &Path) -> Value {
    let out = formation(line, dir);
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stderr).expect("error is json");
    v["error"].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const BELL: &str =
    r#"{"kind":"pure","dims":{"a":2,"b":2},"data":[[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]}"#;

/// Numerical fields only, for comparing reruns.
fn strip_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("wallTimeSeconds");
            map.values_mut().for_each(strip_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_times),
        _ => {}
    }
}

#[test]
fn eof_of_a_bell_state_is_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bell.json", BELL);
    let r = ok_json("eof -i bell.json --seed 3", dir.path());
    let value = r["results"][0]["result"]["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() <= 1e-8, "{value}");
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["nonConverged"], false);
}

#[test]
fn entropy_of_a_product_state() {
    let dir = TempDir::new().unwrap();
    let zero = r#"{"kind":"pure","dims":{"a":2,"b":2},"data":[[1,0],[0,0],[0,0],[0,0]]}"#;
    write(dir.path(), "zero.json", zero);
    let r = ok_json("entropy -i zero.json", dir.path());
    let res = &r["results"][0]["result"];
    assert_eq!(res["entropyA"].as_f64().unwrap(), 0.0);
    assert_eq!(res["purity"].as_f64().unwrap(), 1.0);
}

#[test]
fn sample_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let line = "sample --kind mixed --dims 2 2 --rank 2 --seed 7";
    let a = formation(line, dir.path());
    let b = formation(line, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["kind"], "density");
}

#[test]
fn duality_check_passes_against_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    formation("sample --kind mixed --dims 2 2 --seed 11 -o rho.json", p);
    formation("sample --kind hermitian --dims 2 2 --seed 12 -o h.json", p);
    let r = ok_json("duality-check -i h.json -i rho.json --seed 1", p);
    let res = &r["results"][0]["result"];
    assert_eq!(res["pass"], true);
    assert_eq!(res["oracleSource"], "wootters");
    assert!(res["bound"].as_f64().unwrap() <= res["oracle"].as_f64().unwrap() + 1e-4);
}

#[test]
fn generated_seed_is_recorded_and_reproducible() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    formation("sample --kind mixed --dims 2 2 --rank 3 --seed 5 -o rho.json", p);
    let mut first = ok_json("eof -i rho.json --restarts 4", p);
    assert_eq!(first["config"]["seedGenerated"], true);
    let seed = first["config"]["seed"].as_u64().unwrap();
    let mut again = ok_json(&format!("eof -i rho.json --restarts 4 --seed {seed}"), p);
    strip_times(&mut first);
    strip_times(&mut again);
    assert_eq!(first["results"], again["results"]);
}

#[test]
fn batch_order_does_not_depend_on_jobs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let mut line = String::from("eof --seed 9 --restarts 3");
    for i in 0..4 {
        formation(
            &format!("sample --kind mixed --dims 2 2 --seed {} -o s{i}.json", 20 + i),
            p,
        );
        line.push_str(&format!(" -i s{i}.json"));
    }
    let mut one = ok_json(&line, p);
    let mut four = ok_json(&format!("{line} --jobs 4"), p);
    strip_times(&mut one);
    strip_times(&mut four);
    assert_eq!(one["results"], four["results"]);
    assert_eq!(one["results"].as_array().unwrap().len(), 4);
}

#[test]
fn csv_has_one_record_per_item() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bell.json", BELL);
    let out = formation("wootters -i bell.json -i bell.json --seed 0 --format csv", dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "concurrence").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][col].parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn observable_pairs_run_conjugate_additivity() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    formation("sample --kind hermitian --dims 2 2 --seed 1 -o h1.json", p);
    formation("sample --kind hermitian --dims 2 2 --seed 2 -o h2.json", p);
    let r = ok_json("additivity -i h1.json -i h2.json --seed 4 --restarts 4", p);
    let res = &r["results"][0]["result"];
    assert_eq!(res["kind"], "conjugate-additivity");
    assert!(res["gap"].as_f64().unwrap() >= -1e-4);
}

#[test]
fn theorem_check_on_a_four_party_sample() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    formation("sample --kind mixed --dims 2 2 2 2 --rank 2 --seed 3 -o f.json", p);
    let r = ok_json("theorem-check -i f.json --seed 1 --restarts 4", p);
    let res = &r["results"][0]["result"];
    assert_eq!(res["verdicts"]["premise"], true);
    assert_eq!(res["verdicts"]["conclusion"], "holds");
}

#[test]
fn four_party_override_on_a_bipartite_file() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    formation("sample --kind mixed --dims 4 4 --rank 2 --seed 8 -o f.json", p);
    let e = err_json("superadditivity -i f.json --seed 1", p);
    assert_eq!(e["kind"], "usage");
    let r = ok_json(
        "superadditivity -i f.json --seed 1 --restarts 4 --four-party 2 2 2 2",
        p,
    );
    assert_eq!(r["results"][0]["result"]["kind"], "strong-superadditivity");
}

#[test]
fn non_positive_density_names_the_eigenvalue() {
    let dir = TempDir::new().unwrap();
    let bad = r#"{"kind":"density","dims":{"a":1,"b":2},"data":[[[1.001,0],[0,0]],[[0,0],[-0.001,0]]]}"#;
    write(dir.path(), "bad.json", bad);
    let e = err_json("eof -i bad.json --seed 0", dir.path());
    assert_eq!(e["kind"], "not-positive");
    assert!((e["eigenvalue"].as_f64().unwrap() + 1e-3).abs() < 1e-12);
    assert_eq!(e["file"], "bad.json");
}

#[test]
fn schema_errors_carry_a_json_path() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "bad.json",
        r#"{"kind":"pure","dims":{"a":2,"b":1},"data":[[1,0],[0]]}"#,
    );
    let e = err_json("entropy -i bad.json", dir.path());
    assert_eq!(e["kind"], "schema");
    assert!(e["path"].as_str().unwrap().starts_with("$.data[1]"), "{e}");
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bell.json", BELL);
    assert_eq!(err_json("additivity -i bell.json", dir.path())["kind"], "usage");
    assert_eq!(err_json("conjugate -i bell.json", dir.path())["kind"], "usage");
    assert_eq!(err_json("eof -i missing.json", dir.path())["kind"], "io");
}

#[test]
fn report_goes_to_the_output_file() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bell.json", BELL);
    let out = formation("wootters -i bell.json -o report.json", dir.path());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["command"], "wootters");
}
