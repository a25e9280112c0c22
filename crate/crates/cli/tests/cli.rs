use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn spillover(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spillover"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("SPILLOVER_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_props_runs_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spillover(&["verify-props"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("propositions.txt")).unwrap();
    assert!(text.contains("PASS") && !text.contains("FAIL"));
    assert!(tmp.path().join("manifest.toml").exists());
}

#[test]
fn missing_input_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "macro_panel = \"nowhere.csv\"\n").unwrap();
    let o = spillover(
        &["svar-panel", "-c", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("class=ConfigPathMissing"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_field_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "b0_unconstrained = 0.2\nstpe = 1e-4\n").unwrap();
    let o = spillover(
        &["verify-props", "-c", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stpe"), "{}", stderr(&o));
}

#[test]
fn straddle_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "b0_unconstrained = 0.1\nb0_constrained = 0.2\n").unwrap();
    let o = spillover(
        &["verify-props", "-c", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error class="));
}

#[test]
fn country_irf_csv_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("svar_country.toml");
    let o = spillover(
        &["svar-country", "-c", cfg.to_str().unwrap(), "--seed", "3"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("irf.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("variable,horizon,median,p16,p84,p05,p95")
    );
    // Two variables over horizons 0..=24.
    assert_eq!(lines.count(), 2 * 25);
    assert!(tmp.path().join("irf.svg").exists());
}

#[test]
fn manifest_replays_as_config() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let cfg = fixtures().join("model_sweep.toml");
    let o = spillover(&["model-sweep", "-c", cfg.to_str().unwrap()], &first);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = first.join("manifest.toml");
    let second = tmp.path().join("second");
    let o = spillover(&["model-sweep", "-c", manifest.to_str().unwrap()], &second);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(first.join("kinks.csv")).unwrap(),
        fs::read(second.join("kinks.csv")).unwrap()
    );
}

#[test]
fn out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_spillover"))
        .arg("verify-props")
        .current_dir(tmp.path())
        .env("SPILLOVER_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("propositions.csv").exists());
}

#[test]
fn simulate_writes_fixture_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = spillover(&["simulate", "--seed", "5"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["macro_panel.csv", "firm_panel.csv", "shock.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let shock = fs::read_to_string(tmp.path().join("shock.csv")).unwrap();
    assert!(shock.starts_with("quarter,shock\n"));
}
