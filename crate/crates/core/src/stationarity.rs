//! Euler-Lagrange check: the exact solution is a stationary point of the
//! discrete energy up to Monte-Carlo noise.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::DualPoint;
use crate::benchmarks::{ExactSolution, InterfaceProblem};
use crate::error::Result;
use crate::geometry::{DomainBox, Region};
use crate::loss::{DiscreteLoss, LossModes, NitscheConfig, PiecewiseEvaluator, Shifted};
use crate::rng::{keyed_rng, SamplerId};
use crate::sampling::{draw_batch, SamplingPlan};

#[derive(Debug, Clone)]
struct Mode {
    amplitude: f64,
    frequency: Vec<f64>,
    phase: f64,
}

/// Random smooth test function, independent on each side of the interface
/// and vanishing on the box boundary:
/// `v_i(x) = b(x) Σ a sin(k·x + φ)` with `b` the normalised box bubble.
#[derive(Debug, Clone)]
pub struct SmoothDirection {
    domain: DomainBox,
    modes: [Vec<Mode>; 2],
}

impl SmoothDirection {
    pub fn random(domain: &DomainBox, seed: u64) -> Self {
        let mut rng = keyed_rng(seed, 0, SamplerId::Verification);
        let d = domain.dim();
        let mut side = || -> Vec<Mode> {
            (0..3)
                .map(|_| Mode {
                    amplitude: rng.sample(StandardNormal),
                    frequency: (0..d)
                        .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                })
                .collect()
        };
        let inner = side();
        let outer = side();
        Self {
            domain: domain.clone(),
            modes: [inner, outer],
        }
    }
}

impl PiecewiseEvaluator for SmoothDirection {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        let d = x.len();
        let (lo, hi) = (&self.domain.lower, &self.domain.upper);
        let factors: Vec<f64> = (0..d)
            .map(|i| 4.0 * (x[i] - lo[i]) * (hi[i] - x[i]) / (hi[i] - lo[i]).powi(2))
            .collect();
        let bubble: f64 = factors.iter().product();
        let bubble_grad: Vec<f64> = (0..d)
            .map(|i| {
                let di = 4.0 * (hi[i] + lo[i] - 2.0 * x[i]) / (hi[i] - lo[i]).powi(2);
                (0..d)
                    .filter(|&j| j != i)
                    .map(|j| factors[j])
                    .product::<f64>()
                    * di
            })
            .collect();
        let mut s = 0.0;
        let mut s_grad = vec![0.0; d];
        for m in &self.modes[region.index() - 1] {
            let arg = m.phase + m.frequency.iter().zip(x).map(|(k, xi)| k * xi).sum::<f64>();
            s += m.amplitude * arg.sin();
            let c = m.amplitude * arg.cos();
            for (g, k) in s_grad.iter_mut().zip(&m.frequency) {
                *g += c * k;
            }
        }
        Ok(DualPoint {
            value: bubble * s,
            tangent: (0..d).map(|i| bubble_grad[i] * s + bubble * s_grad[i]).collect(),
        })
    }
}

/// Directional derivative with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub derivative: f64,
    pub stderr: f64,
}

impl DerivativeEstimate {
    pub fn within(&self, k_sigma: f64) -> bool {
        self.derivative.abs() <= k_sigma * self.stderr
    }
}

#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub k_sigma: f64,
    pub at_exact: Vec<DerivativeEstimate>,
    pub perturbed: Vec<DerivativeEstimate>,
}

impl StationarityReport {
    pub fn exact_within(&self) -> usize {
        self.at_exact.iter().filter(|e| e.within(self.k_sigma)).count()
    }

    pub fn perturbed_rejected(&self) -> usize {
        self.perturbed.iter().filter(|e| !e.within(self.k_sigma)).count()
    }

    /// Every direction is flat at the exact solution and at least 90% of
    /// them are detected at the perturbed centre.
    pub fn passed(&self) -> bool {
        self.exact_within() == self.at_exact.len()
            && 10 * self.perturbed_rejected() >= 9 * self.perturbed.len()
    }
}

#[derive(Debug, Clone)]
pub struct StationaritySettings {
    pub plan: SamplingPlan,
    pub directions: usize,
    pub perturbation: f64,
    pub eps: f64,
    pub k_sigma: f64,
    pub seed: u64,
}

impl Default for StationaritySettings {
    fn default() -> Self {
        Self {
            plan: SamplingPlan {
                domain_total: 100_000,
                n_interface: 10_000,
                n_boundary: 1_000,
                min_inner: 0,
            },
            directions: 10,
            perturbation: 0.1,
            eps: 1e-2,
            k_sigma: 5.0,
            seed: 2024,
        }
    }
}

/// Derivative of the discrete energy at the exact solution along random
/// smooth directions, and at `u + perturbation·v` along the same `v`.
pub fn stationarity_test(
    problem: &dyn InterfaceProblem,
    config: &NitscheConfig,
    modes: LossModes,
    settings: &StationaritySettings,
) -> Result<StationarityReport> {
    let batch = draw_batch(problem.geometry(), &settings.plan, settings.seed, 0)?;
    let loss = DiscreteLoss::new(problem, &batch, config, &problem.measures(), modes)?;
    let exact = ExactSolution::of(problem);
    let mut at_exact = Vec::with_capacity(settings.directions);
    let mut perturbed = Vec::with_capacity(settings.directions);
    for k in 0..settings.directions {
        let v = SmoothDirection::random(&problem.geometry().domain, settings.seed.wrapping_add(1 + k as u64));
        let (derivative, stderr) = loss.directional_derivative_with_stderr(&exact, &v, settings.eps)?;
        at_exact.push(DerivativeEstimate { derivative, stderr });
        let centre = Shifted {
            base: &exact,
            direction: &v,
            scale: settings.perturbation,
        };
        let (derivative, stderr) = loss.directional_derivative_with_stderr(&centre, &v, settings.eps)?;
        perturbed.push(DerivativeEstimate { derivative, stderr });
    }
    Ok(StationarityReport {
        k_sigma: settings.k_sigma,
        at_exact,
        perturbed,
    })
}
