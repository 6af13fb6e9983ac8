use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dosx");

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.conf")
}

fn dosx(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn dosx")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_on_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dosx(&["verify"], &default_config(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(dir.path());
    assert_eq!(s["mode"], "verify");
    assert_eq!(s["all_pass"], true);
    assert!(s["assertions"].as_array().unwrap().len() >= 30);
    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.lines().count() > 30);
}

#[test]
fn zeroth_coefficient_row_is_free_resolvent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dosx(&["coeffs"], &default_config(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("coeffs.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (v, n, q, m, re, im) = (col("vector"), col("n"), col("quantity"), col("method"), col("re"), col("im"));
    let row = rdr
        .records()
        .map(Result::unwrap)
        .find(|r| &r[v] == "phi_0" && &r[n] == "0" && &r[q] == "T" && &r[m] == "deterministic")
        .expect("n = 0 row");
    // (0 - (1 + 0.5i))^{-1}
    let (want_re, want_im) = (-0.8, 0.4);
    assert!((row[re].parse::<f64>().unwrap() - want_re).abs() < 1e-12);
    assert!((row[im].parse::<f64>().unwrap() - want_im).abs() < 1e-12);
}

#[test]
fn missing_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(default_config()).unwrap();
    let stripped: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("window.eta"))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = dir.path().join("broken.conf");
    std::fs::write(&cfg, stripped).unwrap();
    let out = dosx(&["verify"], &cfg, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn summary_is_deterministic_for_fixed_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = dosx(&["resolvent", "--seed", "77", "--samples", "200"], &default_config(), d.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let strip = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("timestamp");
        v
    };
    assert_eq!(strip(summary(a.path())), strip(summary(b.path())));
    assert_eq!(summary(a.path())["seed"], 77);
    let ra = std::fs::read(a.path().join("resolvent.csv")).unwrap();
    let rb = std::fs::read(b.path().join("resolvent.csv")).unwrap();
    assert_eq!(ra, rb);
}
