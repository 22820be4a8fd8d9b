use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
[grid]
sites = 4

[potential]
family = "soft-coulomb"
v0 = 1.0
a = 0.5

[phi0]
kind = "gaussian-packet"
center = 1.5
width = 0.8
momentum = 0.3

[sweep]
particles = [2, 3, 4, 5]
times = [0.5]

[solver]
dt = 1e-4

[output]
dir = "default-out"

[hartree]
t_end = 0.5

[section2]
alphas = [0.4, 0.2, 0.1]
particles = 3
times = [0.5]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanfield")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hartree_solve_succeeds_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("h");
    let o = run(&["hartree-solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["hartree_trajectory.csv", "hartree_conserved.csv", "hartree_checks.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS energy-conservation"));
}

#[test]
fn default_output_dir_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let o = run(&["rate-sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("default-out/rate_distances.csv").exists());
}

#[test]
fn failing_assertion_gives_exit_one() {
    // the lattice cutoff gap is not linear in alpha, so a ratio check fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("v0 = 1.0", "v0 = 5.0").replace("a = 0.5", "a = 0.1"));
    let out = dir.path().join("s2");
    let o = run(&["section2", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("FAIL ") && l.ends_with("-gap-linear-in-alpha")), "{stdout}");
    assert!(stdout.contains("PASS zero-at-initial-time"));
    assert!(out.join("section2_checks.json").exists());
}

#[test]
fn errors_give_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&["rate-sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(dir.path(), BASE);
    // no [lemmas] or [fit] table
    assert_eq!(run(&["lemmas", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn reruns_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        assert_eq!(run(&["rate-sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    }
    for f in ["rate_distances.csv", "rate_fits.csv", "rate_checks.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}
