use std::path::{Path, PathBuf};
use std::process::Command;

use stackelberg_lab::{load_config, load_csv, parse_config, run_experiment, ExperimentConfig, RunOptions};

fn bundled(name: &str, out: &Path) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut c = load_config(&path).unwrap();
    c.out_dir = out.to_path_buf();
    c
}

fn quiet() -> RunOptions {
    RunOptions { plot: false }
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn max_oracle_recovers_the_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = bundled("criterion1-se-recovery.toml", dir.path());
    c.horizons = vec![10_000];
    let s = run_experiment(&c, quiet()).unwrap();
    assert!(s.success());
    let run = &s.runs[0];
    assert!(run.metrics["x_bar_error"] <= 0.05, "{:?}", run.metrics);
    assert!(run.metrics["asymmetric_regret"] <= run.metrics["bound"]);

    let trace = load_csv(&dir.path().join(&run.csv)).unwrap();
    assert_eq!(trace.rows.len(), 10_000);
    let xs = trace.column("x1").unwrap();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - run.metrics["x_bar"]).abs() <= 1e-12);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn tatonnement_finds_the_closed_form_prices() {
    let dir = tempfile::tempdir().unwrap();
    let c = bundled("criterion5-fisher-closed-form.toml", dir.path());
    let s = run_experiment(&c, quiet()).unwrap();
    assert!(s.success());
    assert!(s.runs[0].metrics["final_distance"] <= 1e-2);
}

#[test]
fn tracking_and_regret_bounds_hold() {
    for name in ["criterion7-asym-mu1-L4.toml", "criterion7-sym-mu0.5-L2.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let mut c = bundled(name, dir.path());
        c.seeds = vec![0, 1, 2];
        let s = run_experiment(&c, quiet()).unwrap();
        assert_eq!(s.aggregate.runs, 3 * 3 * 2, "{name}");
        assert_eq!((s.aggregate.violations, s.aggregate.errors), (0, 0), "{name}");
    }
    for name in ["criterion8-regret-quadratic.toml", "criterion8-regret-experts.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let mut c = bundled(name, dir.path());
        c.seeds = vec![0, 1];
        c.horizons = vec![100, 1000];
        let s = run_experiment(&c, quiet()).unwrap();
        assert_eq!((s.aggregate.violations, s.aggregate.errors), (0, 0), "{name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let text = "kind = \"fisher-online\"\nhorizon = 50\nseeds = [3, 4]\n[market]\ndynamics = \"myopic\"\nutility = \"cobb-douglas\"\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let mut c = parse_config(text).unwrap();
        c.out_dir = dir.path().to_path_buf();
        run_experiment(&c, quiet()).unwrap();
    }
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    assert_eq!(fa.len(), 2);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn one_file_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = parse_config("kind = \"fisher-online\"\nhorizon = 5\n").unwrap();
    c.out_dir = dir.path().to_path_buf();
    let s = run_experiment(&c, quiet()).unwrap();
    assert_eq!(s.runs.len(), 100);
    let files = csv_files(dir.path());
    assert_eq!(files.len(), 100);
    assert_eq!(load_csv(&files[0]).unwrap().rows.len(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["aggregate"]["runs"], 100);
    assert_eq!(json["kind"], "fisher-online");
}

#[test]
fn run_errors_name_the_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.txt"), "1 3 linear\n1 1 1 1\n1 1 1\n").unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "kind = \"fisher-static\"\nhorizon = 5\n[market]\nfile = \"m.txt\"\ninitial_prices = [1, 2]\n")
        .unwrap();
    let mut c = load_config(&cfg).unwrap();
    c.out_dir = dir.path().join("out");
    let s = run_experiment(&c, quiet()).unwrap();
    assert!(!s.success());
    assert_eq!(s.aggregate.errors, 1);
    let msg = s.runs[0].error.as_deref().unwrap();
    assert!(msg.starts_with("T5_seed0"), "{msg}");
    assert_eq!(load_csv(&dir.path().join("out").join(&s.runs[0].csv)).unwrap().rows.len(), 0);
}

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stackelberg-lab")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let ok = lab(&["regret-report", "--out-dir", out, "--seed", "7", "--plot"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("T10000_seed7.svg").exists());

    let cfg = dir.path().join("tight.toml");
    std::fs::write(
        &cfg,
        "kind = \"stackelberg-solve\"\nhorizon = 100\n[schedule]\nkind = \"fixed-horizon\"\nc = 0.01\nlipschitz = 3\n",
    )
    .unwrap();
    let violated = lab(&["stackelberg-solve", "--config", cfg.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(violated.status.code(), Some(1));

    let wrong = lab(&["fisher-online", "--config", cfg.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
    let no_tol = lab(&["robustness-sym", "--tol", "1e-3"]);
    assert_eq!(no_tol.status.code(), Some(2));
    std::fs::write(&cfg, "kind = \"regret-report\"\nhorizon = 0\n").unwrap();
    let bad = lab(&["regret-report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2: horizon"));
}
