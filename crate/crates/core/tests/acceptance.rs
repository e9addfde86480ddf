//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The training criteria run full 50000-epoch experiments from `configs/`
//! and take a few hours on one core. Set `DEEP_NITSCHE_ACCEPTANCE_QUICK=1`
//! to skip them.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use common::{eight_point_batch, flower_loss, gradient_check_pair, random_pair};
use deep_nitsche::benchmarks::{circle_problem, flower_problem, sphere_problem, InterfaceProblem};
use deep_nitsche::config::ResolvedConfig;
use deep_nitsche::experiment::{run_experiment, verify, VerifyOptions, HISTORY_FILE};
use deep_nitsche::geometry::{ball_volume, Region};
use deep_nitsche::loss::{LossModes, NitscheConfig};
use deep_nitsche::network::NetworkArch;
use deep_nitsche::stationarity::{stationarity_test, StationaritySettings};

struct Outcome {
    passed: bool,
    detail: String,
}

/// (label, long-running, check)
type Criterion = (&'static str, bool, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ResolvedConfig {
    ResolvedConfig::load(&configs_dir().join(name)).expect("config loads")
}

/// Train `config` in a scratch directory; returns the final error and the
/// number of history rows written.
fn train_run(config: &ResolvedConfig, label: &str) -> Result<(f64, usize), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let summary = run_experiment(config, dir.path(), &mut |row| {
        if row.epoch % 10_000 == 0 {
            eprintln!("  {label}: epoch {} error {:.3}%", row.epoch, row.rel_l2_error_pct);
        }
    })
    .map_err(|e| format!("{label}: {e}"))?;
    eprintln!(
        "  {label}: final {:.3}% after {:.0}s",
        summary.final_error_pct,
        start.elapsed().as_secs_f64()
    );
    let rows = fs::read_to_string(dir.path().join(HISTORY_FILE))
        .map_err(|e| e.to_string())?
        .lines()
        .count()
        - 1;
    Ok((summary.final_error_pct, rows))
}

fn train_config(config: &ResolvedConfig, label: &str) -> Result<f64, String> {
    train_run(config, label).map(|(e, _)| e)
}

fn gradient_correctness() -> Outcome {
    let (_, loss) = flower_loss(&eight_point_batch(), LossModes::default());
    let arch = NetworkArch::new(2, 10, 3).unwrap();
    let worst = (0..20)
        .map(|seed| gradient_check_pair(&loss, &random_pair(arch, seed), 1e-4))
        .fold(0.0, f64::max);
    outcome(worst <= 1e-5, format!("20 settings, max relative error {worst:.2e} (<= 1e-5)"))
}

fn parameter_counts() -> Outcome {
    let a = NetworkArch::new(2, 10, 3).unwrap().param_count();
    let b = NetworkArch::new(3, 20, 3).unwrap().param_count();
    outcome(a == 701 && b == 2621, format!("(2,10,3) -> {a}, (3,20,3) -> {b}"))
}

fn benchmark_consistency() -> Outcome {
    let problems = [
        circle_problem(1.0, 1000.0, 0.5).unwrap(),
        sphere_problem(3).unwrap(),
        sphere_problem(10).unwrap(),
        flower_problem(),
    ];
    let mut failed = Vec::new();
    for p in &problems {
        match verify(p, &VerifyOptions::default()) {
            Ok(summary) if summary.passed() => {}
            Ok(summary) => {
                eprint!("{}", summary.render());
                failed.push(summary.data.problem.clone());
            }
            Err(e) => failed.push(format!("{e}")),
        }
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "circle2d, sphere_nd d=3, sphere_nd d=10, flower2d verified".to_string()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn stationarity() -> Outcome {
    let p = circle_problem(1.0, 1000.0, 0.5).unwrap();
    let cfg = NitscheConfig::new(1.0, 1000.0, 1000.0, 5000.0).unwrap();
    match stationarity_test(&p, &cfg, LossModes::default(), &StationaritySettings::default()) {
        Ok(r) => outcome(
            r.exact_within() == 10 && r.perturbed_rejected() >= 9,
            format!(
                "{}/10 flat at the exact solution, {}/10 rejected at u + 0.1v",
                r.exact_within(),
                r.perturbed_rejected()
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn measure_estimation() -> Outcome {
    let n = 1_000_000;
    let flower = flower_problem();
    let (area, se_a) = flower.geometry().hit_or_miss_measure(Some(Region::Inside), n, 0);
    let derived = 51.0 * PI / 196.0;
    let printed = 51.0 * PI / 192.0;
    let ball = sphere_problem(5).unwrap();
    let (vol, se_v) = ball.geometry().hit_or_miss_measure(Some(Region::Inside), n, 0);
    let exact = ball_volume(5, 0.4);
    let z_flower = (area - derived) / se_a;
    let z_ball = (vol - exact) / se_v;
    eprintln!(
        "  printed area 51π/192 = {printed:.6} sits {:.1}σ from the estimate",
        (area - printed) / se_a
    );
    outcome(
        z_flower.abs() <= 3.0 && z_ball.abs() <= 3.0,
        format!(
            "flower {area:.5} vs 51π/196 = {derived:.5} ({z_flower:+.2}σ); d=5 ball {vol:.5} vs {exact:.5} ({z_ball:+.2}σ); 51π/192 = {printed:.5} is {:+.1}σ off",
            (printed - area) / se_a
        ),
    )
}

fn flower_training() -> Outcome {
    let base = load("flower.toml");
    let mut errors = Vec::new();
    let mut rows = Vec::new();
    for seed in 0..3 {
        let mut c = base.clone();
        c.seeds.init = seed;
        c.seeds.sample = seed;
        match train_run(&c, &format!("flower seed {seed}")) {
            Ok((e, n)) => {
                errors.push(e);
                rows.push(n);
            }
            Err(e) => return outcome(false, e),
        }
    }
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[1];
    outcome(
        median <= 10.0 && rows.iter().all(|&n| n == 500),
        format!("final errors {errors:.3?} %, median {median:.3}% (<= 10%), history rows {rows:?}"),
    )
}

fn circle_training() -> Outcome {
    let mut errors = Vec::new();
    for name in ["circle_1000_1", "circle_1_1000", "circle_1e5_1", "circle_1_1e5"] {
        match train_config(&load(&format!("{name}.toml")), name) {
            Ok(e) => errors.push(e),
            Err(e) => return outcome(false, e),
        }
    }
    let (large_a, large_b, huge_a, huge_b) = (errors[0], errors[1], errors[2], errors[3]);
    let passed = large_a <= 5.0 && large_b <= 5.0 && huge_a <= 3.0 * large_a && huge_b <= 3.0 * large_b;
    outcome(
        passed,
        format!(
            "1000/1 {large_a:.3}%, 1/1000 {large_b:.3}% (<= 5%); 1e5/1 {huge_a:.3}% (<= {:.3}%), 1/1e5 {huge_b:.3}% (<= {:.3}%)",
            3.0 * large_a,
            3.0 * large_b
        ),
    )
}

fn sphere_training() -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for (d, bound) in [(3, 10.0), (10, 10.0), (20, 15.0)] {
        match train_config(&load(&format!("sphere_d{d}.toml")), &format!("sphere d={d}")) {
            Ok(e) => {
                passed &= e <= bound;
                parts.push(format!("d={d} {e:.3}% (<= {bound}%)"));
            }
            Err(e) => {
                passed = false;
                parts.push(e);
            }
        }
    }
    outcome(passed, parts.join(", "))
}

fn determinism() -> Outcome {
    let mut c = load("flower.toml");
    c.schedule.epochs = 1000;
    let run = || -> Result<Vec<u8>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_experiment(&c, dir.path(), &mut |_| {}).map_err(|e| e.to_string())?;
        fs::read(dir.path().join(HISTORY_FILE)).map_err(|e| e.to_string())
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => outcome(
            a == b && !a.is_empty(),
            format!("flower.toml at 1000 epochs, {} history bytes, identical: {}", a.len(), a == b),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn main() {
    // `cargo test -- --list` and filters expect a harness; honour the listing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let quick = std::env::var_os("DEEP_NITSCHE_ACCEPTANCE_QUICK").is_some_and(|v| v != "0");
    let criteria: [Criterion; 9] = [
        ("1 gradient correctness", false, gradient_correctness),
        ("2 parameter counts", false, parameter_counts),
        ("3 benchmark consistency", false, benchmark_consistency),
        ("4 stationarity", false, stationarity),
        ("5 measure estimation", false, measure_estimation),
        ("6 flower training", true, flower_training),
        ("7 high-contrast circle", true, circle_training),
        ("8 high-dimensional sphere", true, sphere_training),
        ("9 end-to-end determinism", false, determinism),
    ];
    let mut failures = 0;
    let mut lines = Vec::new();
    for (name, long, check) in criteria {
        if long && quick {
            let line = format!("SKIP {name}: quick mode");
            println!("{line}");
            lines.push(line);
            continue;
        }
        let start = Instant::now();
        let o = check();
        let line = format!(
            "{} {name}: {} [{:.1}s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        println!("{line}");
        lines.push(line);
        failures += usize::from(!o.passed);
    }
    println!("\nacceptance summary");
    for line in &lines {
        println!("{line}");
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
