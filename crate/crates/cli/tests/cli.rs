use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn risline(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risline")).args(args).current_dir(dir).output().unwrap()
}

const CONFIG: &str = "methods = [\"LINE_L2\", \"CONTINUOUS\"]\nseeds = [0, 1]\n\n[sweep]\nelements = [16]\n";

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), CONFIG).unwrap();
    let run = risline(&["scaling", "--config", "small.toml", "--out", "run"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let csv = fs::read_to_string(dir.path().join("run/results.csv")).unwrap();
    assert!(csv.starts_with("method,N_v,N_h,N,L,distance_m,seed,objective"));
    assert_eq!(csv.lines().count(), 5);

    let ok = risline(&["verify-manifest", "run"], dir.path());
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("identical"));

    fs::write(dir.path().join("run/results.csv"), csv.replacen(",0,", ",7,", 1)).unwrap();
    let bad = risline(&["verify-manifest", "run/manifest.txt"], dir.path());
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("DIFFERS"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), CONFIG).unwrap();
    let run = risline(&["scaling", "--config", "small.toml", "--seed", "9", "--out", "run"], dir.path());
    assert!(run.status.success());
    let manifest = fs::read_to_string(dir.path().join("run/manifest.txt")).unwrap();
    assert!(manifest.contains("seeds = [9]"));
}

#[test]
fn bad_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "methods = [\"NOPE\"]\n").unwrap();
    let run = risline(&["quadcmp", "--config", "bad.toml"], dir.path());
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).starts_with("error:"));
}
