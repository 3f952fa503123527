use magpath_cli::{run, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("magpath").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = invoke(args);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn propagator_at_origin() {
    let v = json(&["propagator", "--t", "1", "--k", "1", "--y1", "0", "--y2", "0", "--output", "json"]);
    let (re, im) = (v["result"]["re"].as_f64().unwrap(), v["result"]["im"].as_f64().unwrap());
    let expected = 1.0 / (2.0 * std::f64::consts::PI * 1f64.sin());
    assert!(re.abs() < 1e-15);
    assert!((im.abs() - expected).abs() < 1e-12, "{im}");
    assert!(im < 0.0);
    assert_eq!(v["meta"]["variant"]["prefactor_form"], "k_over");
    assert_eq!(v["meta"]["variant"]["phase_sign"], "plus");
    assert!(v["meta"]["error_estimate"].is_number());
}

#[test]
fn product_determinant() {
    let v = json(&["det", "--t", "1", "--k", "1", "--method", "product", "--order", "10000"]);
    assert!((v["result"]["re"].as_f64().unwrap() - 0.291927).abs() < 1e-3);
    let d = json(&["det", "--t", "1", "--k", "1", "--method", "dense", "--order", "64"]);
    assert!((d["result"]["re"].as_f64().unwrap() - 1f64.cos().powi(2)).abs() < 1e-2);
}

#[test]
fn caustic_exits_with_domain_code() {
    let (code, out, err) = invoke(&["propagator", "--t", "1.5707963", "--k", "1", "--y1", "0", "--y2", "0"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(out.is_empty());
    assert!(err.contains("caustic"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(invoke(&["propagator", "--t", "1", "--k", "1", "--bogus", "3"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(invoke(&[]).0, EXIT_USAGE);
    assert_eq!(invoke(&["propagator", "--t", "x", "--k", "1"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["propagator", "--t", "1", "--k", "1", "--output", "csv"]).0, EXIT_USAGE);
    assert_eq!(invoke(&["--help"]).0, EXIT_OK);
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(invoke(&["propagator", "--t", "-1", "--k", "1"]).0, EXIT_DOMAIN);
    assert_eq!(invoke(&["propagator", "--t", "1", "--k", "1", "--variant", "nope"]).0, EXIT_DOMAIN);
    assert_eq!(invoke(&["spectrum", "--t", "1", "--k", "1", "--n", "1"]).0, EXIT_DOMAIN);
    assert_eq!(invoke(&["det", "--t", "1", "--k", "1", "--method", "magic"]).0, EXIT_DOMAIN);
    assert_eq!(invoke(&["tgen", "--t", "1", "--k", "1", "--bump", "7,1,0.5,0.1"]).0, EXIT_DOMAIN);
    assert_eq!(invoke(&["tgen", "--t", "1", "--k", "1", "--bump", "0,1,0.5"]).0, EXIT_DOMAIN);
}

#[test]
fn mmatrix_and_spectrum() {
    let m = json(&["mmatrix", "--t", "1", "--k", "1", "--n", "128"]);
    assert!((m["result"]["im"].as_f64().unwrap() - 1f64.tan()).abs() < 1e-12);
    assert!(m["meta"]["error_estimate"].as_f64().unwrap() < 1e-3);
    let s = json(&["spectrum", "--t", "1", "--k", "1", "--n", "64", "--count", "3"]);
    assert_eq!(s["result"]["multiplicities"], serde_json::json!([2, 2, 2]));
    assert!(s["meta"]["error_estimate"].as_array().unwrap().iter().all(|e| e.as_f64().unwrap() < 1e-2));
}

#[test]
fn tgen_without_bumps_is_the_propagator() {
    let g = json(&["tgen", "--t", "0.5", "--k", "1", "--y1", "0.3", "--y2", "-0.2", "--n", "32"]);
    let p = json(&["propagator", "--t", "0.5", "--k", "1", "--y1", "0.3", "--y2", "-0.2"]);
    assert_eq!(g["result"], p["result"]);
    let b = json(&["tgen", "--t", "0.5", "--k", "1", "--y1", "0.3", "--n", "64", "--bump", "0,0.4,0.25,0.1"]);
    assert_ne!(b["result"], p["result"]);
    assert!(b["meta"]["error_estimate"].as_f64().unwrap() < 1e-2);
}

#[test]
fn sweep_rows_are_sorted_and_deterministic() {
    let args = ["sweep", "--t", "1,0.5", "--k", "1,0", "--y1", "0.2", "--y2", "0.1,-0.2", "--output", "csv"];
    let (code, a, _) = invoke(&args);
    assert_eq!(code, EXIT_OK);
    let (_, b, _) = invoke(&args);
    assert_eq!(a, b);
    let mut rdr = csv::Reader::from_reader(a.as_bytes());
    let keys: Vec<(f64, f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 8);
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn sweep_keeps_caustic_rows() {
    let (code, out, _) = invoke(&["sweep", "--t", "1.5707963", "--k", "1", "--output", "csv"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("caustic"));
}

#[test]
fn out_file_is_byte_identical() {
    let dir = std::env::temp_dir().join(format!("magpath-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for p in [&a, &b] {
        let (code, out, _) = invoke(&["propagator", "--t", "0.7", "--k", "2", "--y1", "0.1", "--seed", "42", "--out", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        assert!(out.is_empty());
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    let v: Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(v["meta"]["seed"], 42);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_selects_the_adjudicated_variant() {
    let v = json(&["oracle", "--t", "0.5", "--k", "1", "--y1", "0.3", "--y2", "-0.2", "--slices", "128"]);
    assert_eq!(v["meta"]["variant"]["prefactor_form"], "k_over");
    assert_eq!(v["meta"]["variant"]["phase_sign"], "plus");
    assert_eq!(v["meta"]["scores"].as_array().unwrap().len(), 4);
    assert!(v["meta"]["error_estimate"].as_f64().unwrap() < 1e-2);
}
