use std::path::Path;
use std::process::{Command, Output};

fn phivar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phivar")).args(args).output().expect("spawn phivar")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_flag(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn sigma_constant_m1() {
    let dir = tempfile::tempdir().unwrap();
    let o = phivar(&["run", "sigma-constant", "--m", "1", "--H", "0.75", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("sigma = 1.587401"), "{s}");
    assert!(s.contains("PASS"), "{s}");
    let csv = std::fs::read_to_string(dir.path().join("sigma-constant.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let sigma: f64 = row[4].parse().unwrap();
    assert!((sigma - 2f64.powf(2.0 / 3.0)).abs() < 1e-6);
}

#[test]
fn series_check_case1_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = phivar(&["run", "series-check", "--case", "1", "--p", "2", "--alpha", "2", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("Converges"));
    let csv = std::fs::read_to_string(dir.path().join("series-check.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "m,y_m,x_m,term,partial_sum");
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn short_series_is_an_assertion_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = phivar(&["run", "series-check", "--case", "2", "--m_max", "200", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("Inconclusive"));
    // artifacts are still written
    assert!(dir.path().join("manifest").exists());
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_flag(dir.path());
    let cases: &[&[&str]] = &[
        &["run", "sigma-constant", "--H", "1.5", "--out", &out],
        &["run", "sigma-constant", "--bogus", "1", "--out", &out],
        &["run", "no-such-experiment"],
        &["run", "limiting-variation", "--phi", "power:p=-1", "--out", &out],
        &["run", "limiting-variation", "--m", "2", "--H", "0.5", "--out", &out],
        &["run", "limiting-variation", "--grid", "64", "--deltas", "0.1,0.5", "--out", &out],
        &["run", "covariance", "--n", "100", "--points", "8", "--out", &out],
        &["run", "series-check", "--case", "3", "--beta0", "0.4", "--out", &out],
        &["run", "jm-bound", "--grids", "1024,65536", "--out", &out],
        &["run", "chaining", "--threads", "0", "--out", &out],
        &["run"],
    ];
    for args in cases {
        let o = phivar(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}{}", stdout(&o), stderr(&o));
        assert!(stderr(&o).contains("error"), "{args:?}");
    }
    // nothing was computed, so nothing was written
    assert!(!dir.path().join("manifest").exists());
}

#[test]
fn identical_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let base = ["run", "limiting-variation", "--grid", "256", "--paths", "3", "--seed", "7"];
    let run = |dir: &Path, threads: &str| {
        let mut args = base.to_vec();
        let out = out_flag(dir);
        args.extend(["--out", &out, "--threads", threads]);
        phivar(&args);
        (
            std::fs::read(dir.join("limiting-variation.csv")).unwrap(),
            std::fs::read(dir.join("limiting-variation.dat")).unwrap(),
        )
    };
    let ra = run(a.path(), "1");
    assert_eq!(ra, run(b.path(), "1"));
    assert_eq!(ra, run(c.path(), "3"));

    let d = tempfile::tempdir().unwrap();
    phivar(&["run", "limiting-variation", "--grid", "256", "--paths", "3", "--seed", "8", "--out", &out_flag(d.path())]);
    assert_ne!(ra.0, std::fs::read(d.path().join("limiting-variation.csv")).unwrap());
}

#[test]
fn manifest_records_hash_versions_and_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = phivar(&["run", "sigma-constant", "--seed", "42", "--out", &out_flag(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let m = std::fs::read_to_string(dir.path().join("manifest")).unwrap();
    for key in ["config_sha256 = ", "phivar_version = ", "phivar_cli_version = ", "wall_time_s = ", "seed = 42", "verdict = PASS"] {
        assert!(m.contains(key), "missing {key} in\n{m}");
    }
    let hash = m.lines().find_map(|l| l.strip_prefix("config_sha256 = ")).unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

    // the embedded canonical config is itself a valid config with the same hash
    let canonical = m.split("# canonical config\n").nth(1).unwrap();
    let file = dir.path().join("replay.cfg");
    std::fs::write(&file, canonical).unwrap();
    let v = phivar(&["validate-config", file.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    assert!(stdout(&v).contains(hash));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sigma.cfg");
    let out = dir.path().join("out");
    std::fs::write(&file, format!("# first-order constant\nexperiment = sigma-constant\nH = 0.6\noutput_dir = {}\n", out.display())).unwrap();
    let o = phivar(&["run", "--config", file.to_str().unwrap(), "--H", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("H = 0.9"));
    assert!(out.join("manifest").exists());

    let o = phivar(&["run", "series-check", "--config", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("names experiment sigma-constant"));
}

#[test]
fn validate_config_reports_positions() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    std::fs::write(&good, "experiment = chaining\ngrids = 1024,4096\n").unwrap();
    let o = phivar(&["validate-config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("valid chaining config"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "experiment = chaining\n\n  paths = many\n").unwrap();
    let o = phivar(&["validate-config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 11"), "{}", stderr(&o));

    let bad_phi = dir.path().join("phi.cfg");
    std::fs::write(&bad_phi, "experiment = limiting-variation\nphi = power:p=-1\n").unwrap();
    let o = phivar(&["validate-config", bad_phi.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn list_experiments_names_all_six() {
    let o = phivar(&["list-experiments"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for name in ["limiting-variation", "sigma-constant", "series-check", "chaining", "covariance", "jm-bound"] {
        assert!(s.lines().any(|l| l == name), "{name} missing:\n{s}");
    }
    assert!(s.contains("--grid"));
}
