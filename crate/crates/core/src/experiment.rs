//! Artifact-producing entry points behind the command-line tool.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::benchmarks::{verify_problem, BenchmarkId, BenchmarkProblem, InterfaceProblem, VerificationReport};
use crate::config::ResolvedConfig;
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::loss::{LossModes, NitscheConfig};
use crate::network::{Checkpoint, NetworkPair};
use crate::sampling::sample_interface;
use crate::stationarity::{stationarity_test, StationarityReport, StationaritySettings};
use crate::training::{relative_l2_error, train_with_observer, HistoryRow, TrainingHistory, TrainingSetup};

pub const HISTORY_FILE: &str = "history.csv";
pub const INNER_CHECKPOINT: &str = "checkpoint_inner.json";
pub const OUTER_CHECKPOINT: &str = "checkpoint_outer.json";
pub const RESOLVED_CONFIG: &str = "config_resolved.toml";
pub const SOLUTION_GRID: &str = "solution_grid.csv";
pub const GRID_SIZE: usize = 201;

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub history: TrainingHistory,
    pub final_error_pct: f64,
}

/// Train one configuration and write every artifact into `out_dir`.
pub fn run_experiment(
    config: &ResolvedConfig,
    out_dir: &Path,
    observer: &mut dyn FnMut(&HistoryRow),
) -> Result<RunSummary> {
    let problem = config.problem()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(RESOLVED_CONFIG), config.to_toml()?)?;

    let pair = NetworkPair::xavier(config.arch, config.seeds.init)?;
    let setup = TrainingSetup {
        problem: &problem,
        nitsche: config.nitsche()?,
        modes: config.modes,
        plan: config.plan,
        adam: config.optimizer,
        schedule: config.schedule,
        sample_seed: config.seeds.sample,
    };
    let outcome = train_with_observer(&setup, pair, observer)?;

    let mut history = BufWriter::new(File::create(out_dir.join(HISTORY_FILE))?);
    outcome.history.write_csv(&mut history)?;
    history.flush()?;
    let (inner, outer) = outcome
        .pair
        .to_checkpoints(config.seeds.init, config.schedule.epochs as u64);
    fs::write(out_dir.join(INNER_CHECKPOINT), inner.to_json()?)?;
    fs::write(out_dir.join(OUTER_CHECKPOINT), outer.to_json()?)?;
    if problem.dim() == 2 {
        let mut grid = BufWriter::new(File::create(out_dir.join(SOLUTION_GRID))?);
        write_solution_grid(&problem, &outcome.pair, &mut grid)?;
        grid.flush()?;
    }
    Ok(RunSummary {
        output_dir: out_dir.to_path_buf(),
        history: outcome.history,
        final_error_pct: outcome.final_error_pct,
    })
}

/// `x1,x2,region,u_nn,u_exact` on a uniform 201 × 201 grid over the box.
pub fn write_solution_grid<W: Write>(problem: &dyn InterfaceProblem, pair: &NetworkPair, out: W) -> Result<()> {
    let geom = problem.geometry();
    if geom.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: geom.dim(),
        });
    }
    let (lo, hi) = (&geom.domain.lower, &geom.domain.upper);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "region", "u_nn", "u_exact"])?;
    let step = |k: usize, a: f64, b: f64| a + (b - a) * k as f64 / (GRID_SIZE - 1) as f64;
    for i in 0..GRID_SIZE {
        for j in 0..GRID_SIZE {
            let x = [step(i, lo[0], hi[0]), step(j, lo[1], hi[1])];
            let region = geom.region(&x);
            let u_nn = pair.network(region).forward(&x)?;
            let u_exact = problem.exact(region, &x).value;
            w.serialize((x[0], x[1], region.to_string(), u_nn, u_exact))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load the checkpoint pair from a run directory.
pub fn load_pair(dir: &Path) -> Result<NetworkPair> {
    let read = |name: &str| -> Result<Checkpoint> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Checkpoint::from_json(&text)
    };
    let inner = read(INNER_CHECKPOINT)?;
    let outer = read(OUTER_CHECKPOINT)?;
    NetworkPair::from_checkpoints(&inner, &outer, inner.arch.input_dim)
}

/// Relative L² error (percent) of a stored checkpoint pair.
pub fn evaluate_run(dir: &Path, problem: &BenchmarkProblem, n_eval: usize, seed: u64) -> Result<f64> {
    let pair = load_pair(dir)?;
    if pair.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            actual: pair.dim(),
        });
    }
    relative_l2_error(&pair, problem, n_eval, seed)
}

/// Analytic measure next to its Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureLine {
    pub name: &'static str,
    pub analytic: f64,
    pub estimate: Option<(f64, f64)>,
}

impl MeasureLine {
    /// Whether the estimate lies within `k` standard errors of the analytic
    /// value; lines without an estimate always agree.
    pub fn agrees(&self, k: f64) -> bool {
        self.estimate
            .is_none_or(|(est, se)| (est - self.analytic).abs() <= k * se)
    }
}

impl std::fmt::Display for MeasureLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<12} analytic {:.6}", self.name, self.analytic)?;
        if let Some((est, se)) = self.estimate {
            write!(f, "  estimate {est:.6} ± {se:.6}  ({:+.2}σ)", (est - self.analytic) / se)?;
        }
        Ok(())
    }
}

/// Measures of Ω₁, Ω₂, Γ and ∂Ω: hit-or-miss for the regions, the
/// interface sampler's weight sum for Γ, and the exact boundary measure.
pub fn measure_report(problem: &dyn InterfaceProblem, n: usize, seed: u64) -> Result<Vec<MeasureLine>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let geom = problem.geometry();
    let exact = geom.analytic_measures();
    let surface = sample_interface(geom, n, seed, 0)?;
    let w = surface.weights();
    let mean = w.iter().sum::<f64>() / n as f64;
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi - lo;
    // equal weights (sphere surfaces) make the sum exact
    let var = if n > 1 && spread > 1e-12 * mean {
        w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(vec![
        MeasureLine {
            name: "|Omega_1|",
            analytic: exact.omega1,
            estimate: Some(geom.hit_or_miss_measure(Some(Region::Inside), n, seed)),
        },
        MeasureLine {
            name: "|Omega_2|",
            analytic: exact.omega2,
            estimate: Some(geom.hit_or_miss_measure(Some(Region::Outside), n, seed)),
        },
        MeasureLine {
            name: "|Gamma|",
            analytic: exact.gamma,
            estimate: (var > 0.0).then(|| (n as f64 * mean, n as f64 * (var / n as f64).sqrt())),
        },
        MeasureLine {
            name: "|dOmega|",
            analytic: exact.boundary,
            estimate: None,
        },
    ])
}

/// Everything `verify` checks for one problem.
#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub data: VerificationReport,
    pub measures: Vec<MeasureLine>,
    pub stationarity: StationarityReport,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.data.passed() && self.measures.iter().all(|m| m.agrees(3.0)) && self.stationarity.passed()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem: {}", self.data.problem);
        for c in &self.data.checks {
            let _ = writeln!(s, "{c}");
        }
        for m in &self.measures {
            let verdict = if m.agrees(3.0) { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{verdict} measure {m}");
        }
        let st = &self.stationarity;
        let verdict = if st.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{verdict} stationarity: {}/{} directions flat at the exact solution, {}/{} rejected at the perturbed centre (|D| <= {}·SE)",
            st.exact_within(),
            st.at_exact.len(),
            st.perturbed_rejected(),
            st.perturbed.len(),
            st.k_sigma
        );
        s
    }
}

pub struct VerifyOptions {
    pub n_check: usize,
    pub measure_samples: usize,
    pub seed: u64,
    pub gamma_f: f64,
    pub gamma_b: f64,
    pub modes: LossModes,
    pub stationarity: StationaritySettings,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n_check: 200,
            measure_samples: 1_000_000,
            seed: 0,
            gamma_f: 1000.0,
            gamma_b: 5000.0,
            modes: LossModes::default(),
            stationarity: StationaritySettings::default(),
        }
    }
}

pub fn verify(problem: &dyn InterfaceProblem, options: &VerifyOptions) -> Result<VerifySummary> {
    let data = verify_problem(problem, options.n_check, options.seed)?;
    let measures = measure_report(problem, options.measure_samples, options.seed)?;
    let (b1, b2) = problem.betas();
    let config = NitscheConfig::new(b1, b2, options.gamma_f, options.gamma_b)?;
    let stationarity = stationarity_test(problem, &config, options.modes, &options.stationarity)?;
    Ok(VerifySummary {
        data,
        measures,
        stationarity,
    })
}

/// Benchmark used by `verify` and `measure` when only an id is given.
pub fn default_problem(id: BenchmarkId, dimension: Option<usize>, betas: Option<(f64, f64)>) -> Result<BenchmarkProblem> {
    match id {
        BenchmarkId::Circle2d => BenchmarkProblem::from_id(id, None, Some(betas.unwrap_or((1.0, 1000.0)))),
        BenchmarkId::SphereNd => BenchmarkProblem::from_id(id, Some(dimension.unwrap_or(3)), betas),
        BenchmarkId::Flower2d => BenchmarkProblem::from_id(id, None, betas),
    }
}
