//! Discrete unfitted Nitsche energy.
//!
//! For a batch of points the loss is
//!
//! ```text
//! L = |Ω₁|/N₁ Σ (β₁/2 |∇u₁|² - f u₁) + |Ω₂|/N₂ Σ (β₂/2 |∇u₂|² - f u₂)
//!   + Σ_Γ w_k [ γ_f/2 (⟦u⟧ - p)² - γ_f/2 p² ]
//!   + s Σ_Γ w_k (p - ⟦u⟧) ⟨β∂ₙu⟩
//!   - s Σ_Γ w_k q ⟨u⟩*
//!   + γ_b |∂Ω|/N_b Σ (u₂ - g)²
//! ```
//!
//! with `⟦w⟧ = w₂ - w₁`, `⟨w⟩ = κ₁w₁ + κ₂w₂`, `⟨w⟩* = κ₂w₁ + κ₁w₂`,
//! `κ₁ = β₂/(β₁+β₂)`, `κ₂ = β₁/(β₁+β₂)`, and `n` pointing from Ω₁ into Ω₂.
//! The sign `s` of the two coupling terms is selected by [`CouplingSign`].

use serde::{Deserialize, Serialize};

use crate::autodiff::{DualPoint, GradientVector};
use crate::benchmarks::{ExactSolution, InterfaceProblem};
use crate::error::{Error, Result};
use crate::geometry::{GeometryMeasures, Region};
use crate::network::{ForwardTrace, NetworkPair, ResNet};
use crate::sampling::{PointCloud, SampleBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NitscheConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma_f: f64,
    pub gamma_b: f64,
}

impl NitscheConfig {
    pub fn new(beta1: f64, beta2: f64, gamma_f: f64, gamma_b: f64) -> Result<Self> {
        let c = Self {
            beta1,
            beta2,
            gamma_f,
            gamma_b,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need min(beta1, beta2) > 0, got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.gamma_f >= 0.0 && self.gamma_b >= 0.0) {
            return Err(Error::InvalidParameter(
                "penalty parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn kappa(&self) -> (f64, f64) {
        kappa(self)
    }

    pub fn beta(&self, region: Region) -> f64 {
        match region {
            Region::Inside => self.beta1,
            Region::Outside => self.beta2,
        }
    }
}

/// `(β₂/(β₁+β₂), β₁/(β₁+β₂))`; the second is formed as `1 - κ₁` so the pair
/// sums to one exactly.
pub fn kappa(config: &NitscheConfig) -> (f64, f64) {
    let k1 = config.beta2 / (config.beta1 + config.beta2);
    (k1, 1.0 - k1)
}

/// `⟦w⟧ = w₂ - w₁`
#[inline]
pub fn jump(w1: f64, w2: f64) -> f64 {
    w2 - w1
}

/// `⟨w⟩ = κ₁w₁ + κ₂w₂`
#[inline]
pub fn weighted_avg(w1: f64, w2: f64, kappa: (f64, f64)) -> f64 {
    kappa.0 * w1 + kappa.1 * w2
}

/// `⟨w⟩* = κ₂w₁ + κ₁w₂`
#[inline]
pub fn dual_avg(w1: f64, w2: f64, kappa: (f64, f64)) -> f64 {
    kappa.1 * w1 + kappa.0 * w2
}

/// Which interface quantity multiplies the flux data `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QTermVariant {
    /// `q ⟨u⟩*`, the dual average of the traces.
    #[default]
    Value,
    /// `q ⟨β∂ₙu⟩*`, the dual average of the normal fluxes.
    Flux,
}

/// Sign of the consistency and flux-data terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSign {
    /// `s = -1`: the exact solution is a stationary point of the energy for
    /// `⟦w⟧ = w₂ - w₁` with `n` pointing out of Ω₁.
    #[default]
    Consistent,
    /// `s = +1`: the opposite orientation; stationarity holds only up to
    /// O(1/γ_f) in the value jump, and the flux condition flips sign.
    Reversed,
}

impl CouplingSign {
    fn factor(self) -> f64 {
        match self {
            CouplingSign::Consistent => -1.0,
            CouplingSign::Reversed => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossModes {
    /// Weight every interface point by |Γ|/N_f instead of its arclength weight.
    #[serde(default)]
    pub paper_weights: bool,
    #[serde(default)]
    pub q_term_variant: QTermVariant,
    #[serde(default)]
    pub coupling_sign: CouplingSign,
}

/// Traces of both ansatz functions at one interface point.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceTrace {
    pub u1: f64,
    pub u2: f64,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub normal: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

/// Per-point interface contributions before weighting:
/// (penalty, consistency, flux data).
#[derive(Debug, Clone, Copy, PartialEq)]
struct InterfaceTerms {
    penalty: f64,
    consistency: f64,
    flux: f64,
}

#[derive(Debug, Clone, Copy)]
struct Coupling {
    beta1: f64,
    beta2: f64,
    gamma_f: f64,
    kappa: (f64, f64),
    sign: f64,
    q_term: QTermVariant,
}

impl Coupling {
    fn terms(&self, u1: f64, u2: f64, dn1: f64, dn2: f64, p: f64, q: f64) -> InterfaceTerms {
        let j = jump(u1, u2);
        let flux_avg = weighted_avg(self.beta1 * dn1, self.beta2 * dn2, self.kappa);
        let dual = match self.q_term {
            QTermVariant::Value => dual_avg(u1, u2, self.kappa),
            QTermVariant::Flux => dual_avg(self.beta1 * dn1, self.beta2 * dn2, self.kappa),
        };
        let half = 0.5 * self.gamma_f;
        InterfaceTerms {
            penalty: half * (j - p) * (j - p) - half * p * p,
            consistency: self.sign * (p - j) * flux_avg,
            flux: -self.sign * q * dual,
        }
    }

    /// Adjoints `(ū₁, ū₂, ∂/∂(∂ₙu₁), ∂/∂(∂ₙu₂))` of `w · (sum of terms)`.
    #[allow(clippy::too_many_arguments)]
    fn adjoints(&self, w: f64, u1: f64, u2: f64, dn1: f64, dn2: f64, p: f64, q: f64) -> [f64; 4] {
        let (k1, k2) = self.kappa;
        let j = jump(u1, u2);
        let flux_avg = weighted_avg(self.beta1 * dn1, self.beta2 * dn2, self.kappa);
        let d_jump = w * (self.gamma_f * (j - p) - self.sign * flux_avg);
        let d_avg = w * self.sign * (p - j);
        let d_dual = -w * self.sign * q;
        let mut out = [-d_jump, d_jump, d_avg * k1 * self.beta1, d_avg * k2 * self.beta2];
        match self.q_term {
            QTermVariant::Value => {
                out[0] += d_dual * k2;
                out[1] += d_dual * k1;
            }
            QTermVariant::Flux => {
                out[2] += d_dual * k2 * self.beta1;
                out[3] += d_dual * k1 * self.beta2;
            }
        }
        out
    }
}

/// A value-and-gradient map per region.
pub trait PiecewiseEvaluator {
    fn dim(&self) -> usize;
    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint>;
}

impl PiecewiseEvaluator for NetworkPair {
    fn dim(&self) -> usize {
        NetworkPair::dim(self)
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        self.network(region).eval_dual(x)
    }
}

impl PiecewiseEvaluator for ExactSolution<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        Ok(self.0.exact(region, x))
    }
}

impl<E: PiecewiseEvaluator + ?Sized> PiecewiseEvaluator for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        (**self).evaluate(region, x)
    }
}

/// Closed-form evaluator from a closure.
pub struct FnEvaluator<F> {
    dim: usize,
    f: F,
}

impl<F> FnEvaluator<F>
where
    F: Fn(Region, &[f64]) -> DualPoint,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> PiecewiseEvaluator for FnEvaluator<F>
where
    F: Fn(Region, &[f64]) -> DualPoint,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        Ok((self.f)(region, x))
    }
}

/// `base + scale · direction`.
pub struct Shifted<A, B> {
    pub base: A,
    pub direction: B,
    pub scale: f64,
}

impl<A: PiecewiseEvaluator, B: PiecewiseEvaluator> PiecewiseEvaluator for Shifted<A, B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn evaluate(&self, region: Region, x: &[f64]) -> Result<DualPoint> {
        let mut a = self.base.evaluate(region, x)?;
        let b = self.direction.evaluate(region, x)?;
        a.value += self.scale * b.value;
        for (ga, gb) in a.tangent.iter_mut().zip(&b.tangent) {
            *ga += self.scale * gb;
        }
        Ok(a)
    }
}

/// The individual sums making up the loss.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub volume_inner: f64,
    pub volume_outer: f64,
    pub interface_penalty: f64,
    pub consistency: f64,
    pub flux_data: f64,
    pub boundary: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.volume_inner
            + self.volume_outer
            + self.interface_penalty
            + self.consistency
            + self.flux_data
            + self.boundary
    }
}

/// Weighted per-point contributions, one vector per point class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointwiseTerms {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    pub interface: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl PointwiseTerms {
    pub fn classes(&self) -> [&[f64]; 4] {
        [&self.inner, &self.outer, &self.interface, &self.boundary]
    }

    pub fn total(&self) -> f64 {
        self.classes().iter().map(|c| c.iter().sum::<f64>()).sum()
    }

    /// Monte-Carlo standard error of [`Self::total`]: each class sum is
    /// `N` i.i.d. contributions, so its variance is `N · Var(contribution)`.
    pub fn standard_error(&self) -> f64 {
        self.classes()
            .iter()
            .filter(|c| c.len() > 1)
            .map(|c| {
                let n = c.len() as f64;
                let mean = c.iter().sum::<f64>() / n;
                let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                n * var
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A sample batch with all problem data evaluated at its points.
#[derive(Debug, Clone)]
pub struct DiscreteLoss {
    dim: usize,
    config: NitscheConfig,
    coupling: Coupling,
    inner: PointCloud,
    inner_weight: f64,
    inner_source: Vec<f64>,
    outer: PointCloud,
    outer_weight: f64,
    outer_source: Vec<f64>,
    interface: PointCloud,
    normals: PointCloud,
    interface_weights: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    boundary: PointCloud,
    boundary_weight: f64,
    g: Vec<f64>,
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

impl DiscreteLoss {
    pub fn new(
        problem: &dyn InterfaceProblem,
        batch: &SampleBatch,
        config: &NitscheConfig,
        measures: &GeometryMeasures,
        modes: LossModes,
    ) -> Result<Self> {
        config.validate()?;
        let d = problem.dim();
        for (cloud, name) in [
            (&batch.inner_points, "inner"),
            (&batch.outer_points, "outer"),
            (&batch.interface.points, "interface"),
            (&batch.boundary_points, "boundary"),
        ] {
            if cloud.is_empty() {
                return Err(Error::EmptyPointClass(name));
            }
            if cloud.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: cloud.dim(),
                });
            }
        }
        let n_f = batch.interface.len();
        let interface_weights = if modes.paper_weights {
            vec![measures.gamma / n_f as f64; n_f]
        } else {
            batch.interface.weights()
        };
        let source = |region, cloud: &PointCloud| -> Vec<f64> {
            cloud.iter().map(|x| problem.source(region, x)).collect()
        };
        let (p, q) = (0..n_f)
            .map(|k| {
                let x = batch.interface.points.get(k);
                let n = batch.interface.normals.get(k);
                (problem.value_jump(x), problem.flux_jump(x, n))
            })
            .unzip();
        Ok(Self {
            dim: d,
            config: *config,
            coupling: Coupling {
                beta1: config.beta1,
                beta2: config.beta2,
                gamma_f: config.gamma_f,
                kappa: config.kappa(),
                sign: modes.coupling_sign.factor(),
                q_term: modes.q_term_variant,
            },
            inner_weight: measures.omega1 / batch.inner_points.len() as f64,
            inner_source: source(Region::Inside, &batch.inner_points),
            inner: batch.inner_points.clone(),
            outer_weight: measures.omega2 / batch.outer_points.len() as f64,
            outer_source: source(Region::Outside, &batch.outer_points),
            outer: batch.outer_points.clone(),
            interface: batch.interface.points.clone(),
            normals: batch.interface.normals.clone(),
            interface_weights,
            p,
            q,
            boundary_weight: measures.boundary / batch.boundary_points.len() as f64,
            g: batch
                .boundary_points
                .iter()
                .map(|x| problem.boundary_value(x))
                .collect(),
            boundary: batch.boundary_points.clone(),
        })
    }

    pub fn config(&self) -> &NitscheConfig {
        &self.config
    }

    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (
            self.inner.len(),
            self.outer.len(),
            self.interface.len(),
            self.boundary.len(),
        )
    }

    pub fn interface_weights(&self) -> &[f64] {
        &self.interface_weights
    }

    /// Traces of `eval` at interface point `k`.
    pub fn interface_trace<E: PiecewiseEvaluator + ?Sized>(&self, eval: &E, k: usize) -> Result<InterfaceTrace> {
        let x = self.interface.get(k);
        let a = eval.evaluate(Region::Inside, x)?;
        let b = eval.evaluate(Region::Outside, x)?;
        Ok(InterfaceTrace {
            u1: a.value,
            u2: b.value,
            g1: a.tangent,
            g2: b.tangent,
            normal: self.normals.get(k).to_vec(),
            p: self.p[k],
            q: self.q[k],
        })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: dim,
            });
        }
        Ok(())
    }

    /// Weighted contribution of every point, in batch order.
    pub fn pointwise<E: PiecewiseEvaluator + ?Sized>(&self, eval: &E) -> Result<PointwiseTerms> {
        self.check_dim(eval.dim())?;
        let volume = |region, cloud: &PointCloud, weight: f64, source: &[f64]| -> Result<Vec<f64>> {
            let half_beta = 0.5 * self.config.beta(region);
            cloud
                .iter()
                .zip(source)
                .map(|(x, f)| {
                    let u = eval.evaluate(region, x)?;
                    Ok(weight * (half_beta * u.grad_norm_sq() - f * u.value))
                })
                .collect()
        };
        let inner = volume(Region::Inside, &self.inner, self.inner_weight, &self.inner_source)?;
        let outer = volume(Region::Outside, &self.outer, self.outer_weight, &self.outer_source)?;
        let interface = (0..self.interface.len())
            .map(|k| {
                let tr = self.interface_trace(eval, k)?;
                let t = self.coupling.terms(
                    tr.u1,
                    tr.u2,
                    dot(&tr.g1, &tr.normal),
                    dot(&tr.g2, &tr.normal),
                    tr.p,
                    tr.q,
                );
                Ok(self.interface_weights[k] * (t.penalty + t.consistency + t.flux))
            })
            .collect::<Result<Vec<_>>>()?;
        let bw = self.config.gamma_b * self.boundary_weight;
        let boundary = self
            .boundary
            .iter()
            .zip(&self.g)
            .map(|(x, g)| {
                let u = eval.evaluate(Region::Outside, x)?.value;
                Ok(bw * (u - g) * (u - g))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PointwiseTerms {
            inner,
            outer,
            interface,
            boundary,
        })
    }

    /// Loss split into its sums.
    pub fn breakdown<E: PiecewiseEvaluator + ?Sized>(&self, eval: &E) -> Result<LossBreakdown> {
        self.check_dim(eval.dim())?;
        let mut b = LossBreakdown::default();
        for (region, cloud, weight, source, acc) in [
            (Region::Inside, &self.inner, self.inner_weight, &self.inner_source, &mut b.volume_inner),
            (Region::Outside, &self.outer, self.outer_weight, &self.outer_source, &mut b.volume_outer),
        ] {
            let half_beta = 0.5 * self.config.beta(region);
            for (x, f) in cloud.iter().zip(source) {
                let u = eval.evaluate(region, x)?;
                *acc += weight * (half_beta * u.grad_norm_sq() - f * u.value);
            }
        }
        for k in 0..self.interface.len() {
            let tr = self.interface_trace(eval, k)?;
            let n = &tr.normal;
            let t = self
                .coupling
                .terms(tr.u1, tr.u2, dot(&tr.g1, n), dot(&tr.g2, n), tr.p, tr.q);
            let w = self.interface_weights[k];
            b.interface_penalty += w * t.penalty;
            b.consistency += w * t.consistency;
            b.flux_data += w * t.flux;
        }
        let bw = self.config.gamma_b * self.boundary_weight;
        for (x, g) in self.boundary.iter().zip(&self.g) {
            let u = eval.evaluate(Region::Outside, x)?.value;
            b.boundary += bw * (u - g) * (u - g);
        }
        finite(b.total(), "loss")?;
        Ok(b)
    }

    pub fn value<E: PiecewiseEvaluator + ?Sized>(&self, eval: &E) -> Result<f64> {
        Ok(self.breakdown(eval)?.total())
    }

    /// Loss of a network pair and its exact gradient with respect to the
    /// joint parameters Θ = (θ₁, θ₂).
    pub fn value_and_gradient(&self, pair: &NetworkPair) -> Result<(f64, GradientVector)> {
        let joint = pair.joint_params();
        self.value_and_gradient_joint(
            &pair.inner.resnet(),
            &pair.outer.resnet(),
            &joint,
        )
    }

    /// Same as [`Self::value_and_gradient`] on a flat Θ.
    pub fn value_and_gradient_joint(
        &self,
        inner_net: &ResNet,
        outer_net: &ResNet,
        joint: &[f64],
    ) -> Result<(f64, GradientVector)> {
        self.check_dim(inner_net.arch().input_dim)?;
        self.check_dim(outer_net.arch().input_dim)?;
        let split = inner_net.arch().param_count();
        let expected = split + outer_net.arch().param_count();
        if joint.len() != expected {
            return Err(Error::ParameterLength {
                expected,
                actual: joint.len(),
            });
        }
        let (theta1, theta2) = joint.split_at(split);
        let mut grad = GradientVector::zeros(joint.len());
        let (grad1, grad2) = grad.0.split_at_mut(split);
        let mut tr1 = ForwardTrace::new(inner_net.arch());
        let mut tr2 = ForwardTrace::new(outer_net.arch());
        let mut grad_x = vec![0.0; self.dim];
        let mut b = LossBreakdown::default();

        for (net, theta, g_acc, tr, cloud, weight, source, beta, acc) in [
            (
                inner_net,
                theta1,
                &mut *grad1,
                &mut tr1,
                &self.inner,
                self.inner_weight,
                &self.inner_source,
                self.config.beta1,
                &mut b.volume_inner,
            ),
            (
                outer_net,
                theta2,
                &mut *grad2,
                &mut tr2,
                &self.outer,
                self.outer_weight,
                &self.outer_source,
                self.config.beta2,
                &mut b.volume_outer,
            ),
        ] {
            // ḡ·∂(∇u)/∂θ with ḡ = wβ∇u is wβ times the θ-derivative of the
            // directional derivative of u along the frozen vector ∇u.
            let half_beta = 0.5 * beta;
            for (x, f) in cloud.iter().zip(source) {
                net.forward_value(theta, x, tr);
                net.input_gradient(theta, tr, &mut grad_x);
                let u = tr.value();
                let g2: f64 = grad_x.iter().map(|v| v * v).sum();
                *acc += weight * (half_beta * g2 - f * u);
                net.add_direction(theta, &grad_x, tr);
                net.backward(theta, tr, -weight * f, Some(&[weight * beta]), g_acc);
            }
        }

        for k in 0..self.interface.len() {
            let x = self.interface.get(k);
            let n = self.normals.get(k);
            inner_net.forward_directional(theta1, x, n, &mut tr1);
            outer_net.forward_directional(theta2, x, n, &mut tr2);
            let (u1, u2) = (tr1.value(), tr2.value());
            let (dn1, dn2) = (tr1.gradient()[0], tr2.gradient()[0]);
            let (p, q) = (self.p[k], self.q[k]);
            let w = self.interface_weights[k];
            let t = self.coupling.terms(u1, u2, dn1, dn2, p, q);
            b.interface_penalty += w * t.penalty;
            b.consistency += w * t.consistency;
            b.flux_data += w * t.flux;
            let [ub1, ub2, db1, db2] = self.coupling.adjoints(w, u1, u2, dn1, dn2, p, q);
            inner_net.backward(theta1, &mut tr1, ub1, Some(&[db1]), grad1);
            outer_net.backward(theta2, &mut tr2, ub2, Some(&[db2]), grad2);
        }

        let bw = self.config.gamma_b * self.boundary_weight;
        for (x, g) in self.boundary.iter().zip(&self.g) {
            outer_net.forward_value(theta2, x, &mut tr2);
            let r = tr2.value() - g;
            b.boundary += bw * r * r;
            outer_net.backward(theta2, &mut tr2, 2.0 * bw * r, None, grad2);
        }

        let value = finite(b.total(), "loss")?;
        if !grad.is_finite() {
            return Err(Error::NonFinite("loss gradient".into()));
        }
        Ok((value, grad))
    }

    /// Discrete Gâteaux derivative `(L(u+εv) - L(u-εv)) / 2ε`.
    pub fn directional_derivative<A, B>(&self, base: &A, direction: &B, eps: f64) -> Result<f64>
    where
        A: PiecewiseEvaluator + ?Sized,
        B: PiecewiseEvaluator + ?Sized,
    {
        Ok(self.directional_derivative_with_stderr(base, direction, eps)?.0)
    }

    /// Directional derivative and its Monte-Carlo standard error, from the
    /// per-point derivative contributions.
    pub fn directional_derivative_with_stderr<A, B>(
        &self,
        base: &A,
        direction: &B,
        eps: f64,
    ) -> Result<(f64, f64)>
    where
        A: PiecewiseEvaluator + ?Sized,
        B: PiecewiseEvaluator + ?Sized,
    {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let plus = self.pointwise(&Shifted {
            base,
            direction,
            scale: eps,
        })?;
        let minus = self.pointwise(&Shifted {
            base,
            direction,
            scale: -eps,
        })?;
        let diff = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
        };
        let d = PointwiseTerms {
            inner: diff(&plus.inner, &minus.inner),
            outer: diff(&plus.outer, &minus.outer),
            interface: diff(&plus.interface, &minus.interface),
            boundary: diff(&plus.boundary, &minus.boundary),
        };
        Ok((d.total(), d.standard_error()))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of `evaluator` on `batch` for `problem`.
pub fn discrete_loss<E: PiecewiseEvaluator + ?Sized>(
    evaluator: &E,
    batch: &SampleBatch,
    config: &NitscheConfig,
    measures: &GeometryMeasures,
    problem: &dyn InterfaceProblem,
    modes: LossModes,
) -> Result<f64> {
    DiscreteLoss::new(problem, batch, config, measures, modes)?.value(evaluator)
}
