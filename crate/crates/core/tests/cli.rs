use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use deep_nitsche::config::OUTPUT_ROOT_ENV;
use deep_nitsche::network::{NetworkArch, NetworkPair};
use deep_nitsche::geometry::Region;

const SMALL: &str = r#"benchmark = "flower2d"
gamma_f = 1000.0
gamma_b = 5000.0
output_dir = "small"

[arch]
width = 6
blocks = 2

[plan]
domain_total = 256
n_interface = 64
n_boundary = 32

[schedule]
epochs = 200
record_every = 50
eval_points = 2000

[seeds]
init = 4
sample = 9
eval = 1
"#;

fn cli(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deep-nitsche"))
        .args(args)
        .env(OUTPUT_ROOT_ENV, root)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn zero_epochs_writes_header_and_initial_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("zero.toml");
    fs::write(&cfg, SMALL.replace("epochs = 200", "epochs = 0")).unwrap();
    let out = cli(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("small");
    let history = fs::read_to_string(dir.join("history.csv")).unwrap();
    assert_eq!(history, "epoch,loss,rel_l2_error_pct,wall_seconds\n");

    let pair = deep_nitsche::experiment::load_pair(&dir).unwrap();
    let init = NetworkPair::xavier(NetworkArch::new(2, 6, 2).unwrap(), 4).unwrap();
    assert_eq!(pair.joint_params(), init.joint_params());

    let grid = fs::read_to_string(dir.join("solution_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 201 * 201 + 1);
    assert!(!grid.contains('\r'));
    let resolved = fs::read_to_string(dir.join("config_resolved.toml")).unwrap();
    for key in ["min_inner", "resample_every", "beta1", "lr"] {
        assert!(resolved.contains(key), "{key} missing from {resolved}");
    }
}

#[test]
fn rerun_of_resolved_config_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let first = cli(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let dir = tmp.path().join("small");
    let history = fs::read(dir.join("history.csv")).unwrap();
    let text = String::from_utf8(history.clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 200 / 50);

    // the echo is itself a valid config
    let echo = tmp.path().join("echo.toml");
    fs::copy(dir.join("config_resolved.toml"), &echo).unwrap();
    let second = cli(tmp.path(), &["run", echo.to_str().unwrap()]);
    assert!(second.status.success());
    assert_eq!(fs::read(dir.join("history.csv")).unwrap(), history);

    // eval on the stored pair reproduces the last recorded error
    let last: f64 = text.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let out = cli(
        tmp.path(),
        &["eval", dir.to_str().unwrap(), "flower2d", "--n", "2000", "--seed", "1"],
    );
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains(&format!("{last:.4}%")), "{s} vs {last}");
}

#[test]
fn bad_config_reports_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, SMALL.replace("blocks = 2", "blocks = 2\ndepth = 3")).unwrap();
    let out = cli(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("depth") && err.contains("line 9"), "{err}");

    fs::write(&cfg, SMALL.replace("gamma_b = 5000.0\n", "")).unwrap();
    let out = cli(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma_b"));
}

#[test]
fn verify_circle_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(tmp.path(), &["verify", "circle2d"]);
    let s = stdout(&out);
    assert!(out.status.success(), "{s}");
    assert!(!s.contains("FAIL"), "{s}");
    assert!(s.ends_with("verify: PASS\n"));
}

#[test]
fn verify_flower_prints_area_beside_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(tmp.path(), &["verify", "flower2d"]);
    let s = stdout(&out);
    assert!(out.status.success(), "{s}");
    let line = s.lines().find(|l| l.contains("|Omega_1|")).unwrap();
    assert!(line.contains(&format!("{:.6}", 51.0 * std::f64::consts::PI / 196.0)), "{line}");
    assert!(line.contains("estimate"), "{line}");
}

#[test]
fn measure_prints_analytic_and_estimates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(tmp.path(), &["measure", "circle2d", "--n", "100000", "--seed", "3"]);
    assert!(out.status.success());
    let s = stdout(&out);
    assert!(s.contains("analytic 0.785398  estimate"), "{s}");

    let out = cli(tmp.path(), &["measure", "sphere_nd", "--dimension", "3", "--n", "1000"]);
    let s = stdout(&out);
    assert!(s.contains("|dOmega|     analytic 6.000000\n"), "{s}");
}

#[test]
fn unknown_benchmark_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(tmp.path(), &["measure", "disc"]);
    assert!(!out.status.success());
}

#[test]
fn region_labels_match_grid() {
    assert_eq!(Region::Inside.to_string(), "inner");
    assert_eq!(Region::Outside.to_string(), "outer");
}
