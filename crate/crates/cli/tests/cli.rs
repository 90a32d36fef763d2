use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kawlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kawlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("KAWLAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// Reads `NAME = value` from the constants output.
fn printed(out: &str, name: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{name} = ")))
        .unwrap_or_else(|| panic!("{name} missing from:\n{out}"))
        .parse()
        .unwrap()
}

#[test]
fn constants_match_square_well_closed_forms() {
    let dir = TempDir::new().unwrap();
    let o = kawlab(&["constants", "-q"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    // d = 2, w = 0.3, r_hc = 0.5, R = 1: at most ((R + r_hc/2)/(r_hc/2))² = 25 particles in range
    let pi = std::f64::consts::PI;
    let b: f64 = 0.5 * 0.3 * 25.0;
    let c = pi * 0.25 + pi * (1.0 - 0.25) * (0.3f64.exp() - 1.0);
    let z1 = 1.0 / (2.0 * std::f64::consts::E * (2.0 * b).exp() * c);
    assert!((printed(&out, "B") - b).abs() < 1e-12);
    assert!((printed(&out, "C") - c).abs() < 1e-12);
    assert!((printed(&out, "zThreshold1") / z1 - 1.0).abs() < 1e-12);
    assert!((printed(&out, "zThreshold2") / (2.0 * z1) - 1.0).abs() < 1e-12);
    // unit ball kernel in d = 2: ‖ã‖₁ = π, ∫ã(x)(x¹)² = π/4
    assert!((printed(&out, "kernel L1 norm") - pi).abs() < 1e-12);
    assert!((printed(&out, "kernel second moment") - pi / 4.0).abs() < 1e-12);
}

#[test]
fn default_balance_suite_passes() {
    let dir = TempDir::new().unwrap();
    let o = kawlab(&["verify-balance", "-q", "--out", "res"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["reports"][0]["samples"], 1000);
    assert_eq!(report["provenance"]["seed"], 1);
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = TempDir::new().unwrap();
    let o = kawlab(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage: kawlab"), "{}", stderr(&o));
}

#[test]
fn schema_errors_name_every_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "bad.toml",
        "activity = -0.5\n[box]\ndim = 1\nside = 6.0\n[potential]\nshape = \"free\"\n",
    );
    let o = kawlab(&["limit-glauber", "-c", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("activity: must be positive"), "{err}");
    assert!(err.contains("box.side") && err.contains("smallest delta"), "{err}");
    // nothing is written for an invalid config
    assert!(!dir.path().join("kawlab-out").exists());
}

#[test]
fn unknown_keys_are_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "typo.toml", "[sampler]\nsweep = 10\n");
    let o = kawlab(&["sample", "-c", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep"), "{}", stderr(&o));
}

const SMALL: &str = "seed = 11\n[box]\ndim = 1\nside = 12.0\n[sampler]\nsweeps = 120\n[run]\nhorizon = 3.0\nevent_log = true\n";

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "small.toml", SMALL);
    for cmd in ["sample", "run-kawasaki", "run-glauber"] {
        let a = kawlab(&[cmd, "-q", "-c", &cfg, "--out", "a"], dir.path());
        let b = kawlab(&[cmd, "-q", "-c", &cfg, "--out", "b"], dir.path());
        assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
        assert_eq!(stdout(&a), stdout(&b));
        assert_eq!(artifacts(&dir.path().join("a")), artifacts(&dir.path().join("b")), "{cmd}");
    }
    let other = write(&dir, "other.toml", &SMALL.replace("seed = 11", "seed = 12"));
    kawlab(&["sample", "-q", "-c", &other, "--out", "c"], dir.path());
    let snaps = |d: &str| fs::read(dir.path().join(d).join("snapshots.txt")).unwrap();
    assert_ne!(snaps("a"), snaps("c"));
}

#[test]
fn provenance_and_effective_config_are_emitted() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "small.toml", SMALL);
    let o = kawlab(&["sample", "-c", &cfg, "--out", "res"], dir.path());
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    assert!(header.starts_with("# kawlab ") && header.contains("config-sha256=") && header.ends_with("seed=11"), "{header}");
    // the echo shows defaults that the file left out
    assert!(out.contains("#   burn_in = 100"), "{out}");
    let prov: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["seed"], 11);
    assert_eq!(prov["command"], "sample");
    assert!(header.contains(prov["config_sha256"].as_str().unwrap()));
    assert!(fs::read_to_string(dir.path().join("res/config.effective.toml")).unwrap().contains("burn_in = 100"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_kawlab"))
        .args(["constants", "-q"])
        .current_dir(dir.path())
        .env("KAWLAB_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(target.join("constants.json").exists());
    assert!(!dir.path().join("kawlab-out").exists());
}

#[test]
fn failed_verification_exits_with_two() {
    let dir = TempDir::new().unwrap();
    // empty configurations cannot be Gibbs samples at positive activity
    let snaps: Vec<String> = (0..200).map(|k| format!("1 12 0 0 {k}\n")).collect();
    let path = write(&dir, "empty.txt", &snaps.join("\n"));
    let cfg = write(&dir, "small.toml", SMALL);
    let o = kawlab(&["verify-gnz", "-q", "-c", &cfg, "--snapshots", &path], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("FAIL gnz/one"));
}

#[test]
fn limit_csv_has_the_expected_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "limit.toml",
        "[box]\ndim = 1\nside = 10.0\n[potential]\nshape = \"soft-repulsive\"\nstrength = 1.0\nhard_core = 0.0\n\
         [sampler]\nsweeps = 60\n[limit_diffusion]\ndeltas = [1.0, 4.0]\npoints_per_axis = 16\n",
    );
    let o = kawlab(&["limit-diffusion", "-q", "-c", &cfg, "--out", "res"], dir.path());
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("res/limit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,l2err,stderr,nSnapshots,quadResolution"));
    assert_eq!(lines.count(), 2);
}
