//! ADAM training loop, relative L² error and training history.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchmarks::InterfaceProblem;
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::loss::{DiscreteLoss, LossModes, NitscheConfig, PiecewiseEvaluator};
use crate::network::NetworkPair;
use crate::rng::{keyed_rng, SamplerId};
use crate::sampling::{draw_batch, PointCloud, SamplingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta_m: f64,
    pub beta_v: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta_m: 0.9,
            beta_v: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| (0.0..1.0).contains(&b);
        if !(self.lr > 0.0 && self.eps > 0.0 && unit(self.beta_m) && unit(self.beta_v)) {
            return Err(Error::InvalidParameter(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected ADAM update in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut OptimizerState, config: &AdamConfig) -> Result<()> {
    if grad.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::ParameterLength {
            expected: params.len(),
            actual: grad.len(),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient passed to the optimizer".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c_m = 1.0 - config.beta_m.powi(t);
    let c_v = 1.0 - config.beta_v.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = config.beta_m * *m + (1.0 - config.beta_m) * g;
        *v = config.beta_v * *v + (1.0 - config.beta_v) * g * g;
        let m_hat = *m / c_m;
        let v_hat = *v / c_v;
        *p -= config.lr * m_hat / (v_hat.sqrt() + config.eps);
    }
    Ok(())
}

/// Fixed uniform evaluation points with the exact solution cached.
#[derive(Debug, Clone)]
pub struct ErrorEstimator {
    points: PointCloud,
    regions: Vec<Region>,
    exact: Vec<f64>,
    exact_norm_sq: f64,
}

impl ErrorEstimator {
    pub fn new(problem: &dyn InterfaceProblem, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPointClass("evaluation"));
        }
        let geom = problem.geometry();
        let d = geom.dim();
        let mut rng = keyed_rng(seed, 0, SamplerId::Evaluation);
        let mut points = PointCloud::with_capacity(d, n);
        let mut x = vec![0.0; d];
        for _ in 0..n {
            geom.domain.sample_point(&mut rng, &mut x);
            points.push(&x);
        }
        let regions: Vec<Region> = points.iter().map(|x| geom.region(x)).collect();
        let exact: Vec<f64> = points
            .iter()
            .zip(&regions)
            .map(|(x, &r)| problem.exact(r, x).value)
            .collect();
        let exact_norm_sq = exact.iter().map(|u| u * u).sum::<f64>();
        if exact_norm_sq == 0.0 {
            return Err(Error::InvalidParameter(
                "exact solution vanishes on every evaluation point".into(),
            ));
        }
        Ok(Self {
            points,
            regions,
            exact,
            exact_norm_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    /// `‖u - u*‖ / ‖u*‖` over the evaluation points, as a fraction.
    pub fn relative_error<E: PiecewiseEvaluator + ?Sized>(&self, eval: &E) -> Result<f64> {
        let mut err = 0.0;
        for ((x, &r), u_star) in self.points.iter().zip(&self.regions).zip(&self.exact) {
            let u = eval.evaluate(r, x)?.value;
            err += (u - u_star) * (u - u_star);
        }
        let rel = (err / self.exact_norm_sq).sqrt();
        if rel.is_finite() {
            Ok(rel)
        } else {
            Err(Error::NonFinite("relative L2 error".into()))
        }
    }

    /// Same as [`Self::relative_error`] using value-only network passes.
    pub fn relative_error_pair(&self, pair: &NetworkPair) -> Result<f64> {
        let nets = [pair.inner.resnet(), pair.outer.resnet()];
        let params = [pair.inner.params.as_slice(), pair.outer.params.as_slice()];
        let mut traces = [
            crate::network::ForwardTrace::new(&pair.inner.arch),
            crate::network::ForwardTrace::new(&pair.outer.arch),
        ];
        let mut err = 0.0;
        for ((x, &r), u_star) in self.points.iter().zip(&self.regions).zip(&self.exact) {
            let k = r.index() - 1;
            nets[k].forward_value(params[k], x, &mut traces[k]);
            let u = traces[k].value();
            err += (u - u_star) * (u - u_star);
        }
        let rel = (err / self.exact_norm_sq).sqrt();
        if rel.is_finite() {
            Ok(rel)
        } else {
            Err(Error::NonFinite("relative L2 error".into()))
        }
    }
}

/// Relative L² error on `n` uniform box points drawn from `seed`, in percent.
pub fn relative_l2_error<E: PiecewiseEvaluator + ?Sized>(
    eval: &E,
    problem: &dyn InterfaceProblem,
    n: usize,
    seed: u64,
) -> Result<f64> {
    Ok(100.0 * ErrorEstimator::new(problem, n, seed)?.relative_error(eval)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSchedule {
    pub epochs: usize,
    pub resample_every: usize,
    pub record_every: usize,
    pub eval_points: usize,
    pub eval_seed: u64,
    /// Write measured wall time into the history; when false the column is
    /// zero and the history is bit-reproducible.
    pub record_wall_time: bool,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            epochs: 50_000,
            resample_every: 10,
            record_every: 100,
            eval_points: 10_000,
            eval_seed: 0,
            record_wall_time: false,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.resample_every == 0 || self.record_every == 0 || self.eval_points == 0 {
            return Err(Error::InvalidParameter(
                "resample_every, record_every and eval_points must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub loss: f64,
    pub rel_l2_error_pct: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub rows: Vec<HistoryRow>,
}

impl TrainingHistory {
    pub const HEADER: [&'static str; 4] = ["epoch", "loss", "rel_l2_error_pct", "wall_seconds"];

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&HistoryRow> {
        self.rows.last()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(Self::HEADER) {
            return Err(Error::InvalidParameter(format!("unexpected history header {header:?}")));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<HistoryRow>, _>>()?;
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub pair: NetworkPair,
    pub history: TrainingHistory,
    /// Relative L² error of the final parameters, in percent.
    pub final_error_pct: f64,
}

/// Everything `train` needs besides the networks.
#[derive(Clone)]
pub struct TrainingSetup<'a> {
    pub problem: &'a dyn InterfaceProblem,
    pub nitsche: NitscheConfig,
    pub modes: LossModes,
    pub plan: SamplingPlan,
    pub adam: AdamConfig,
    pub schedule: TrainingSchedule,
    pub sample_seed: u64,
}

/// Train both networks jointly: one ADAM step on Θ = (θ₁, θ₂) per epoch, a
/// new batch every `schedule.resample_every` epochs, and a history row after
/// every `schedule.record_every`-th epoch holding that epoch's batch loss and
/// the error of the updated parameters.
pub fn train(setup: &TrainingSetup<'_>, pair: NetworkPair) -> Result<TrainingOutcome> {
    train_with_observer(setup, pair, &mut |_| {})
}

pub fn train_with_observer(
    setup: &TrainingSetup<'_>,
    mut pair: NetworkPair,
    observer: &mut dyn FnMut(&HistoryRow),
) -> Result<TrainingOutcome> {
    setup.plan.validate()?;
    setup.adam.validate()?;
    setup.schedule.validate()?;
    setup.nitsche.validate()?;
    let problem = setup.problem;
    if pair.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            actual: pair.dim(),
        });
    }
    let measures = problem.measures();
    let estimator = ErrorEstimator::new(problem, setup.schedule.eval_points, setup.schedule.eval_seed)?;
    let inner_net = pair.inner.resnet();
    let outer_net = pair.outer.resnet();
    let mut theta = pair.joint_params();
    let mut state = OptimizerState::new(theta.len());
    let mut history = TrainingHistory::default();
    let start = Instant::now();
    let mut loss: Option<(usize, DiscreteLoss)> = None;

    for epoch in 0..setup.schedule.epochs {
        if epoch % setup.schedule.resample_every == 0 || loss.is_none() {
            let batch = draw_batch(problem.geometry(), &setup.plan, setup.sample_seed, epoch)?;
            loss = Some((
                epoch,
                DiscreteLoss::new(problem, &batch, &setup.nitsche, &measures, setup.modes)?,
            ));
        }
        let (batch_epoch, current) = loss.as_ref().expect("batch drawn above");
        let diverged = |what: String| Error::Diverged {
            epoch: epoch + 1,
            seed: setup.sample_seed,
            batch_epoch: *batch_epoch,
            what,
        };
        let (value, grad) = match current.value_and_gradient_joint(&inner_net, &outer_net, &theta) {
            Ok(r) => r,
            Err(Error::NonFinite(what)) => return Err(diverged(what)),
            Err(e) => return Err(e),
        };
        adam_step(&mut theta, &grad, &mut state, &setup.adam)?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(diverged("parameters".into()));
        }
        let done = epoch + 1;
        if done % setup.schedule.record_every == 0 {
            pair.set_joint_params(&theta)?;
            let err = estimator
                .relative_error_pair(&pair)
                .map_err(|e| diverged(e.to_string()))?;
            let row = HistoryRow {
                epoch: done,
                loss: value,
                rel_l2_error_pct: 100.0 * err,
                wall_seconds: if setup.schedule.record_wall_time {
                    start.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            };
            observer(&row);
            history.rows.push(row);
        }
    }
    pair.set_joint_params(&theta)?;
    let final_error_pct = 100.0 * estimator.relative_error_pair(&pair)?;
    Ok(TrainingOutcome {
        pair,
        history,
        final_error_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{circle_problem, flower_problem};
    use crate::loss::FnEvaluator;
    use crate::network::NetworkArch;
    use crate::autodiff::DualPoint;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = OptimizerState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [1e-3, 0.5, 7.0, -3.0] {
            let mut p = vec![0.0];
            let mut s = OptimizerState::new(1);
            adam_step(&mut p, &[g], &mut s, &AdamConfig::default()).unwrap();
            let step = p[0].abs();
            assert!(step > 0.000999 && step < 0.001, "{step}");
            assert_eq!(p[0].signum(), -g.signum());
        }
    }

    #[test]
    fn constant_gradient_step_saturates_at_lr() {
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(1);
        let cfg = AdamConfig::default();
        let mut prev = 0.0;
        for _ in 0..1000 {
            adam_step(&mut p, &[2.0], &mut s, &cfg).unwrap();
            let step = prev - p[0];
            assert!(step <= cfg.lr * (1.0 + 1e-12));
            prev = p[0];
        }
        assert!((p[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut p = vec![0.0, 0.0];
        let mut s = OptimizerState::new(2);
        assert!(adam_step(&mut p, &[1.0, f64::NAN], &mut s, &AdamConfig::default()).is_err());
    }

    #[test]
    fn joint_step_equals_separate_steps() {
        let a: Vec<f64> = (0..7).map(|i| i as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..5).map(|i| (i as f64).sin()).collect();
        let ga: Vec<f64> = (0..7).map(|i| (i as f64 * 1.7).cos()).collect();
        let gb: Vec<f64> = (0..5).map(|i| i as f64 - 2.0).collect();
        let cfg = AdamConfig::default();
        let mut joint: Vec<f64> = a.iter().chain(&b).copied().collect();
        let gj: Vec<f64> = ga.iter().chain(&gb).copied().collect();
        let mut sj = OptimizerState::new(12);
        let (mut sa, mut sb) = (OptimizerState::new(7), OptimizerState::new(5));
        let (mut pa, mut pb) = (a.clone(), b.clone());
        for _ in 0..3 {
            adam_step(&mut joint, &gj, &mut sj, &cfg).unwrap();
            adam_step(&mut pa, &ga, &mut sa, &cfg).unwrap();
            adam_step(&mut pb, &gb, &mut sb, &cfg).unwrap();
        }
        let sep: Vec<f64> = pa.iter().chain(&pb).copied().collect();
        assert_eq!(joint, sep);
    }

    #[test]
    fn error_of_exact_and_zero() {
        let p = flower_problem();
        let est = ErrorEstimator::new(&p, 2000, 1).unwrap();
        assert_eq!(est.relative_error(&p.exact_solution()).unwrap(), 0.0);
        let zero = FnEvaluator::new(2, |_, x: &[f64]| DualPoint::constant(0.0, x.len()));
        assert_eq!(est.relative_error(&zero).unwrap(), 1.0);
        let exact = p.exact_solution();
        let double = FnEvaluator::new(2, |r, x: &[f64]| {
            let mut u = exact.evaluate(r, x).unwrap();
            u.value *= 2.0;
            u
        });
        assert!((relative_l2_error(&double, &p, 2000, 1).unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn pair_error_path_matches_generic() {
        let p = circle_problem(1.0, 10.0, 0.5).unwrap();
        let est = ErrorEstimator::new(&p, 500, 3).unwrap();
        let pair = NetworkPair::xavier(NetworkArch::new(2, 6, 2).unwrap(), 1).unwrap();
        assert_eq!(est.relative_error(&pair).unwrap(), est.relative_error_pair(&pair).unwrap());
    }

    fn small_setup(problem: &dyn InterfaceProblem, epochs: usize) -> TrainingSetup<'_> {
        TrainingSetup {
            problem,
            nitsche: NitscheConfig::new(1.0, 10.0, 1000.0, 5000.0).unwrap(),
            modes: LossModes::default(),
            plan: SamplingPlan {
                domain_total: 128,
                n_interface: 32,
                n_boundary: 32,
                min_inner: 0,
            },
            adam: AdamConfig::default(),
            schedule: TrainingSchedule {
                epochs,
                resample_every: 10,
                record_every: 10,
                eval_points: 500,
                eval_seed: 0,
                record_wall_time: false,
            },
            sample_seed: 5,
        }
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let p = flower_problem();
        let pair = NetworkPair::xavier(NetworkArch::new(2, 5, 1).unwrap(), 0).unwrap();
        let out = train(&small_setup(&p, 0), pair.clone()).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.pair, pair);
    }

    #[test]
    fn history_length_and_determinism() {
        let p = flower_problem();
        let pair = NetworkPair::xavier(NetworkArch::new(2, 5, 1).unwrap(), 0).unwrap();
        let a = train(&small_setup(&p, 55), pair.clone()).unwrap();
        let b = train(&small_setup(&p, 55), pair).unwrap();
        assert_eq!(a.history.len(), 5);
        assert_eq!(a.history.rows.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![10, 20, 30, 40, 50]);
        assert_eq!(a.history, b.history);
        assert_eq!(a.pair, b.pair);
    }

    #[test]
    fn small_steps_decrease_fixed_batch_loss() {
        let p = flower_problem();
        let plan = small_setup(&p, 0).plan;
        let batch = draw_batch(p.geometry(), &plan, 1, 0).unwrap();
        let cfg = NitscheConfig::new(1.0, 10.0, 1000.0, 5000.0).unwrap();
        let loss = DiscreteLoss::new(&p, &batch, &cfg, &p.measures(), LossModes::default()).unwrap();
        let pair = NetworkPair::xavier(NetworkArch::new(2, 10, 3).unwrap(), 2).unwrap();
        let (inner, outer) = (pair.inner.resnet(), pair.outer.resnet());
        let mut theta = pair.joint_params();
        let mut state = OptimizerState::new(theta.len());
        let adam = AdamConfig {
            lr: 1e-4,
            ..Default::default()
        };
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            let (v, g) = loss.value_and_gradient_joint(&inner, &outer, &theta).unwrap();
            assert!(v < prev, "{v} >= {prev}");
            prev = v;
            adam_step(&mut theta, &g, &mut state, &adam).unwrap();
        }
    }

    #[test]
    fn history_csv_round_trip() {
        let h = TrainingHistory {
            rows: vec![
                HistoryRow {
                    epoch: 100,
                    loss: -1.234_567_890_123e3,
                    rel_l2_error_pct: 4.6,
                    wall_seconds: 0.0,
                },
                HistoryRow {
                    epoch: 200,
                    loss: 1e-300,
                    rel_l2_error_pct: 0.1 + 0.2,
                    wall_seconds: 12.5,
                },
            ],
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("epoch,loss,rel_l2_error_pct,wall_seconds\n"));
        assert!(!text.contains('\r'));
        assert_eq!(TrainingHistory::read_csv(buf.as_slice()).unwrap(), h);
    }

    #[test]
    fn empty_history_is_header_only() {
        let mut buf = Vec::new();
        TrainingHistory::default().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,loss,rel_l2_error_pct,wall_seconds\n");
    }
}
