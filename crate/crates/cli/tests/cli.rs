use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use resonance_core::decay::SurvivalSeries;
use resonance_core::feshbach::BoundaryTrace;
use resonance_core::resonance::read_jsonl;
use serde_json::Value;

const LORENTZ: &str = r#"
interval = [-0.5, 0.5]
n = 2

[model]
kind = "friedrichs"
lambda = 0.0

[model.coupling]
kind = "lorentzian"
g = 1.0
x0 = 0.0
w = 1.0
"#;

const RANDOM: &str = r#"
seed = 3

[model]
kind = "random"
dim = 16
lambda = 0.1

[feshbach]
samples = 20

[mourre]
samples = 10
max_dim = 6
"#;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(dir: &Path, config: &str, args: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_resonance"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    (output, out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn fgr_reports_the_lorentzian_width() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), LORENTZ, &["fgr"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gamma = json(&out.join("gamma.json"));
    assert!((gamma["gamma"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    let trace = BoundaryTrace::read_csv(std::io::BufReader::new(std::fs::File::open(out.join("trace_kappa0.csv")).unwrap())).unwrap();
    assert!((trace.eval(0.0).im + 1.0).abs() < 1e-9);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "fgr");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["failure"].is_null());
}

#[test]
fn zero_coupling_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), &LORENTZ.replace("g = 1.0", "g = 0.0"), &["fgr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Golden Rule"), "{}", stderr(&o));
    assert!(json(&out.join("manifest.json"))["failure"].is_string());
}

#[test]
fn config_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), &LORENTZ.replace("interval = [-0.5, 0.5]", ""), &["resonance"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("interval"));

    let empty = format!("{LORENTZ}\n[kappa]\nmax = 0.2\ncount = 0\nratio = 0.5\n");
    let (o, _) = run(dir.path(), &empty, &["sweep"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("empty"));

    let (o, _) = run(dir.path(), LORENTZ, &["resonance", "--kappa-max", "5.0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kappa0"), "{}", stderr(&o));

    let (o, _) = run(dir.path(), &format!("typo = 1\n{LORENTZ}"), &["fgr"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_reports_scaling_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), LORENTZ, &["sweep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let scaling = json(&out.join("scaling.json"));
    assert!(scaling["slopes"]["expansion"].as_f64().unwrap() >= 2.5);
    assert!(scaling["slopes"]["remainder"].as_f64().unwrap() >= 2.0);
    let records = read_jsonl(std::fs::read(out.join("resonances.jsonl")).unwrap().as_slice()).unwrap();
    assert_eq!(records.len(), 5);
    for r in &records {
        let exact = (-1.0 + (1.0 - 4.0 * r.kappa * r.kappa).sqrt()) / 2.0;
        assert!(r.re_lambda.abs() < 1e-12 && (r.im_lambda - exact).abs() <= 10.0 * r.kappa.powi(6));
    }
}

#[test]
fn decay_writes_a_readable_survival_series() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), LORENTZ, &["decay", "--kappa-max", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = std::fs::File::open(out.join("survival_spectral.csv")).unwrap();
    let series = SurvivalSeries::read_csv(std::io::BufReader::new(f)).unwrap();
    assert_eq!(series.kappa, 0.1);
    assert!(series.values.iter().all(|v| v.norm() <= 1.0 + 1e-6));
    let report = json(&out.join("decay_report.json"));
    assert_eq!(report["report"]["rn_l1_norms"].as_array().unwrap().len(), 3);
}

#[test]
fn random_model_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), RANDOM, &["feshbach-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let check = json(&out.join("feshbach_check.json"));
    assert!(check["max_relative"].as_f64().unwrap() < 1e-9);
    assert_eq!(check["samples"].as_array().unwrap().len(), 20);

    let (o, out) = run(dir.path(), RANDOM, &["mourre-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("mourre.json").exists());
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(dir.path(), RANDOM, &["feshbach-check"]);
    assert!(o.status.success());
    let first = std::fs::read(out.join("feshbach_check.json")).unwrap();
    let (o, out) = run(dir.path(), RANDOM, &["feshbach-check", "--jobs", "2"]);
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(out.join("feshbach_check.json")).unwrap());

    let (o, out) = run(dir.path(), LORENTZ, &["resonance"]);
    assert!(o.status.success());
    let first = std::fs::read(out.join("resonances.jsonl")).unwrap();
    let (_, out) = run(dir.path(), LORENTZ, &["resonance"]);
    assert_eq!(first, std::fs::read(out.join("resonances.jsonl")).unwrap());
}

#[test]
fn shipped_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["lorentzian", "lorentzian_star", "semicircle", "random"] {
        let text = std::fs::read_to_string(configs_dir().join(format!("{name}.toml"))).unwrap();
        let (o, _) = run(dir.path(), &text, &["feshbach-check"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}
