use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use laminate_bloch::cli::output::{parse_band_csv, parse_spectrum_csv};
use laminate_bloch::cli::RunManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_laminate-bloch"))
}

const SMALL: &str = r#"{
  "cell": {
    "layers": [
      { "preset": "sofc_phase1", "thickness": 1e-3 },
      { "preset": "sofc_phase2", "thickness": 1e-3 }
    ]
  },
  "sweep": {
    "omega": [{ "spacing": "linear", "start": 0, "stop": 2e6, "points": 5 }],
    "deltas": [0, 1]
  },
  "outputs": { "dir": "out", "plots": true }
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).args(extra).output().unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "x.json", "--bogus"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn config_errors_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = run(&tmp.path().join("nope.json"), &[]);
    assert_eq!(missing.status.code(), Some(2));

    let cfg = write_config(tmp.path(), &SMALL.replace("\"deltas\"", "\"detlas\""));
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("detlas"));
    assert!(!tmp.path().join("out").exists());

    let cfg = write_config(tmp.path(), &SMALL.replace("\"deltas\": [0, 1]", "\"deltas\": [0, -1]"));
    assert_eq!(run(&cfg, &[]).status.code(), Some(2));

    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(run(&cfg, &["--precision", "octuple"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, b"not a directory").unwrap();
    let out = run(&cfg, &["--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(listing(tmp.path()), ["blocker", "run.json"]);
}

#[test]
fn small_run_writes_parseable_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = run(&cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for f in ["spectrum_delta_0.csv", "spectrum_delta_1.csv", "bands.csv", "manifest.json", "bands_vs_delta.svg"] {
        assert!(dir.join(f).exists(), "missing {f}: {:?}", listing(&dir));
    }
    assert!(!listing(&dir).iter().any(|f| f.ends_with(".tmp")));

    let manifest: RunManifest = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.exit_code, 0);
    assert!(manifest.failures.is_empty());

    let mut rows = 0;
    for name in ["spectrum_delta_0.csv", "spectrum_delta_1.csv"] {
        let parsed = parse_spectrum_csv(&std::fs::read(dir.join(name)).unwrap()).unwrap();
        // ω = 0 is skipped in bands but still tabulated: 5 frequencies × 8 multipliers
        assert_eq!(parsed.len(), 40, "{name}");
        assert!(parsed.windows(2).all(|w| w[0].omega_star <= w[1].omega_star));
        rows += parsed.len();
    }
    assert_eq!(manifest.rows_written, rows);
    let bands = parse_band_csv(&std::fs::read(dir.join("bands.csv")).unwrap()).unwrap();
    assert!(!bands.is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dirs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("r{i}"))).collect();
    for d in &dirs {
        assert_eq!(run(&cfg, &["--out", d.to_str().unwrap()]).status.code(), Some(0));
    }
    let files = listing(&dirs[0]);
    assert_eq!(files, listing(&dirs[1]));
    for f in files.iter().filter(|f| f.ends_with(".csv") || f.ends_with(".svg")) {
        assert_eq!(std::fs::read(dirs[0].join(f)).unwrap(), std::fs::read(dirs[1].join(f)).unwrap(), "{f}");
    }
}

#[test]
fn check_mode_reports_pass_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("\"stop\": 2e6", "\"stop\": 1e4"));
    let out = run(&cfg, &["--check"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS")));
    assert!(!stdout.lines().any(|l| l.starts_with("FAIL")));
}
