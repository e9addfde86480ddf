//! Python bindings: benchmarks, network pairs, the discrete loss and the
//! experiment runner.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nitsche::benchmarks::{BenchmarkId, BenchmarkProblem, InterfaceProblem};
use nitsche::config::ResolvedConfig;
use nitsche::experiment::{self, VerifyOptions};
use nitsche::geometry::Region;
use nitsche::loss::{DiscreteLoss, LossModes, NitscheConfig};
use nitsche::network::{NetworkArch, NetworkPair};
use nitsche::sampling::{draw_batch, SamplingPlan};
use nitsche::training;

fn err(e: nitsche::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn region(name: &str) -> PyResult<Region> {
    match name {
        "inner" => Ok(Region::Inside),
        "outer" => Ok(Region::Outside),
        other => Err(PyValueError::new_err(format!("region must be 'inner' or 'outer', got {other:?}"))),
    }
}

/// Number of parameters of one ResNet.
#[pyfunction]
fn param_count(input_dim: usize, width: usize, blocks: usize) -> PyResult<usize> {
    Ok(NetworkArch::new(input_dim, width, blocks).map_err(err)?.param_count())
}

/// Averaging weights (κ₁, κ₂) = (β₂, β₁) / (β₁ + β₂).
#[pyfunction]
fn kappa(beta1: f64, beta2: f64) -> PyResult<(f64, f64)> {
    Ok(NitscheConfig::new(beta1, beta2, 1.0, 1.0).map_err(err)?.kappa())
}

#[pyclass(name = "Benchmark", module = "deep_nitsche", frozen)]
struct PyBenchmark {
    inner: BenchmarkProblem,
}

#[pymethods]
impl PyBenchmark {
    #[new]
    #[pyo3(signature = (benchmark, dimension=None, beta1=None, beta2=None))]
    fn new(benchmark: &str, dimension: Option<usize>, beta1: Option<f64>, beta2: Option<f64>) -> PyResult<Self> {
        let id: BenchmarkId = benchmark.parse().map_err(err)?;
        let betas = beta1.zip(beta2);
        if betas.is_none() && (beta1.is_some() || beta2.is_some()) {
            return Err(PyValueError::new_err("give both beta1 and beta2"));
        }
        Ok(Self {
            inner: experiment::default_problem(id, dimension, betas).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn betas(&self) -> (f64, f64) {
        self.inner.betas()
    }

    /// "inner" or "outer" for a point of the box.
    fn region(&self, x: Vec<f64>) -> PyResult<String> {
        self.check_dim(&x)?;
        Ok(self.inner.geometry().region(&x).to_string())
    }

    /// (value, gradient) of the exact solution on the given side.
    fn exact(&self, region_name: &str, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.check_dim(&x)?;
        let u = self.inner.exact(region(region_name)?, &x);
        Ok((u.value, u.tangent))
    }

    fn source(&self, region_name: &str, x: Vec<f64>) -> PyResult<f64> {
        self.check_dim(&x)?;
        Ok(self.inner.source(region(region_name)?, &x))
    }

    /// Analytic |Ω₁|, |Ω₂|, |Γ|, |∂Ω|.
    fn measures(&self) -> (f64, f64, f64, f64) {
        let m = self.inner.measures();
        (m.omega1, m.omega2, m.gamma, m.boundary)
    }

    /// Hit-or-miss estimate and standard error of a region's measure.
    #[pyo3(signature = (region_name, n=1_000_000, seed=0))]
    fn hit_or_miss(&self, region_name: &str, n: usize, seed: u64) -> PyResult<(f64, f64)> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be positive"));
        }
        Ok(self.inner.geometry().hit_or_miss_measure(Some(region(region_name)?), n, seed))
    }

    /// Data, measure and stationarity checks; returns (passed, report).
    #[pyo3(signature = (seed=0))]
    fn verify(&self, py: Python<'_>, seed: u64) -> PyResult<(bool, String)> {
        let options = VerifyOptions {
            seed,
            ..Default::default()
        };
        let summary = py.detach(|| experiment::verify(&self.inner, &options)).map_err(err)?;
        Ok((summary.passed(), summary.render()))
    }

    fn __repr__(&self) -> String {
        let (b1, b2) = self.inner.betas();
        format!("Benchmark({}, dim={}, betas=({b1}, {b2}))", self.inner.name(), self.inner.dim())
    }
}

impl PyBenchmark {
    fn check_dim(&self, x: &[f64]) -> PyResult<()> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "point has {} coordinates, benchmark has {}",
                x.len(),
                self.inner.dim()
            )));
        }
        Ok(())
    }
}

#[pyclass(name = "NetworkPair", module = "deep_nitsche")]
struct PyNetworkPair {
    inner: NetworkPair,
}

#[pymethods]
impl PyNetworkPair {
    /// Xavier-initialised pair of ResNets.
    #[new]
    #[pyo3(signature = (input_dim, width=10, blocks=3, seed=0))]
    fn new(input_dim: usize, width: usize, blocks: usize, seed: u64) -> PyResult<Self> {
        let arch = NetworkArch::new(input_dim, width, blocks).map_err(err)?;
        Ok(Self {
            inner: NetworkPair::xavier(arch, seed).map_err(err)?,
        })
    }

    /// Load the checkpoint pair written by a run.
    #[staticmethod]
    fn load(run_dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: experiment::load_pair(&run_dir).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn forward(&self, region_name: &str, x: Vec<f64>) -> PyResult<f64> {
        self.inner.network(region(region_name)?).forward(&x).map_err(err)
    }

    /// (value, spatial gradient).
    fn eval_dual(&self, region_name: &str, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        let u = self.inner.network(region(region_name)?).eval_dual(&x).map_err(err)?;
        Ok((u.value, u.tangent))
    }

    /// Joint parameter vector, inner network first.
    fn params(&self) -> Vec<f64> {
        self.inner.joint_params()
    }

    fn set_params(&mut self, params: Vec<f64>) -> PyResult<()> {
        self.inner.set_joint_params(&params).map_err(err)
    }

    /// Relative L² error in percent against a benchmark's exact solution.
    #[pyo3(signature = (benchmark, n=10_000, seed=0))]
    fn relative_error(&self, benchmark: &PyBenchmark, n: usize, seed: u64) -> PyResult<f64> {
        training::relative_l2_error(&self.inner, &benchmark.inner, n, seed).map_err(err)
    }
}

/// Discrete energy on one sampled batch.
#[pyclass(name = "Loss", module = "deep_nitsche", frozen)]
struct PyLoss {
    inner: DiscreteLoss,
}

#[pymethods]
impl PyLoss {
    #[new]
    #[pyo3(signature = (benchmark, gamma_f, gamma_b, domain_total=1024, n_interface=256, n_boundary=128, min_inner=0, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        benchmark: &PyBenchmark,
        gamma_f: f64,
        gamma_b: f64,
        domain_total: usize,
        n_interface: usize,
        n_boundary: usize,
        min_inner: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let p = &benchmark.inner;
        let plan = SamplingPlan {
            domain_total,
            n_interface,
            n_boundary,
            min_inner,
        };
        plan.validate().map_err(err)?;
        let batch = draw_batch(p.geometry(), &plan, seed, 0).map_err(err)?;
        let (b1, b2) = p.betas();
        let config = NitscheConfig::new(b1, b2, gamma_f, gamma_b).map_err(err)?;
        Ok(Self {
            inner: DiscreteLoss::new(p, &batch, &config, &p.measures(), LossModes::default()).map_err(err)?,
        })
    }

    fn value(&self, pair: &PyNetworkPair) -> PyResult<f64> {
        self.inner.value(&pair.inner).map_err(err)
    }

    /// (loss, gradient with respect to the joint parameters).
    fn value_and_gradient(&self, pair: &PyNetworkPair) -> PyResult<(f64, Vec<f64>)> {
        let (v, g) = self.inner.value_and_gradient(&pair.inner).map_err(err)?;
        Ok((v, g.to_vec()))
    }
}

/// Run a TOML experiment config; returns (final error %, output directory).
#[pyfunction]
fn run_config(py: Python<'_>, path: PathBuf) -> PyResult<(f64, PathBuf)> {
    let config = ResolvedConfig::load(&path).map_err(err)?;
    let out = config.output_path();
    let summary = py
        .detach(|| experiment::run_experiment(&config, &out, &mut |_| {}))
        .map_err(err)?;
    Ok((summary.final_error_pct, summary.output_dir))
}

#[pymodule]
fn deep_nitsche(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(param_count, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_class::<PyBenchmark>()?;
    m.add_class::<PyNetworkPair>()?;
    m.add_class::<PyLoss>()?;
    Ok(())
}
