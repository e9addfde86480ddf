//! TOML experiment configuration.
//!
//! Only `benchmark`, `gamma_f` and `gamma_b` are required (plus `beta1`,
//! `beta2` for `circle2d` and `dimension` for `sphere_nd`); everything else
//! falls back to the reference settings of the chosen benchmark. The resolved
//! form uses the same keys, so a written `config_resolved.toml` loads back to
//! an identical configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::{BenchmarkId, BenchmarkProblem};
use crate::error::{Error, Result};
use crate::loss::{LossModes, NitscheConfig};
use crate::network::NetworkArch;
use crate::sampling::SamplingPlan;
use crate::training::{AdamConfig, TrainingSchedule};

/// Overrides the directory relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "DEEP_NITSCHE_OUTPUT_ROOT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSection {
    pub width: Option<usize>,
    pub blocks: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub domain_total: Option<usize>,
    pub n_interface: Option<usize>,
    pub n_boundary: Option<usize>,
    pub min_inner: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub epochs: Option<usize>,
    pub resample_every: Option<usize>,
    pub record_every: Option<usize>,
    pub eval_points: Option<usize>,
    pub record_wall_time: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub init: Option<u64>,
    pub sample: Option<u64>,
    pub eval: Option<u64>,
}

/// A configuration file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkId,
    pub dimension: Option<usize>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub gamma_f: f64,
    pub gamma_b: f64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub arch: ArchSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub optimizer: Option<AdamConfig>,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub modes: LossModes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub init: u64,
    pub sample: u64,
    pub eval: u64,
}

/// Fully specified experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub benchmark: BenchmarkId,
    pub dimension: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma_f: f64,
    pub gamma_b: f64,
    pub output_dir: PathBuf,
    pub arch: NetworkArch,
    pub plan: SamplingPlan,
    pub schedule: TrainingSchedule,
    pub optimizer: AdamConfig,
    pub seeds: Seeds,
    pub modes: LossModes,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, path)
    }

    /// Fill every default. `path` only labels error messages.
    pub fn resolve(&self, path: &Path) -> Result<ResolvedConfig> {
        let fail = |message: String| Error::Config {
            path: path.to_path_buf(),
            message,
        };
        let sphere = self.benchmark == BenchmarkId::SphereNd;
        let dimension = match (self.benchmark, self.dimension) {
            (BenchmarkId::SphereNd, Some(d)) => d,
            (BenchmarkId::SphereNd, None) => {
                return Err(fail("sphere_nd requires `dimension`".into()))
            }
            (_, None) | (_, Some(2)) => 2,
            (id, Some(d)) => return Err(fail(format!("{id} is two-dimensional, got dimension = {d}"))),
        };
        let betas = match (self.beta1, self.beta2) {
            (Some(b1), Some(b2)) => Some((b1, b2)),
            (None, None) => None,
            _ => return Err(fail("set both `beta1` and `beta2` or neither".into())),
        };
        let problem = BenchmarkProblem::from_id(self.benchmark, Some(dimension), betas)
            .map_err(|e| fail(e.to_string()))?;
        let (beta1, beta2) = crate::benchmarks::InterfaceProblem::betas(&problem);
        NitscheConfig::new(beta1, beta2, self.gamma_f, self.gamma_b).map_err(|e| fail(e.to_string()))?;

        let default_width = if sphere { 20 } else { 10 };
        let arch = NetworkArch::new(
            dimension,
            self.arch.width.unwrap_or(default_width),
            self.arch.blocks.unwrap_or(3),
        )
        .map_err(|e| fail(e.to_string()))?;

        let domain_total = self.plan.domain_total.unwrap_or(1024);
        let plan = SamplingPlan {
            domain_total,
            n_interface: self.plan.n_interface.unwrap_or(256),
            n_boundary: self
                .plan
                .n_boundary
                .unwrap_or(if sphere { 256 * dimension } else { 128 }),
            min_inner: self.plan.min_inner.unwrap_or(if sphere {
                SamplingPlan::default_min_inner(domain_total)
            } else {
                0
            }),
        };
        plan.validate().map_err(|e| fail(e.to_string()))?;
        if plan.min_inner > 0 && !sphere {
            return Err(fail("`min_inner` is only supported for sphere interfaces".into()));
        }

        let defaults = TrainingSchedule::default();
        let schedule = TrainingSchedule {
            epochs: self.schedule.epochs.unwrap_or(defaults.epochs),
            resample_every: self.schedule.resample_every.unwrap_or(defaults.resample_every),
            record_every: self.schedule.record_every.unwrap_or(defaults.record_every),
            eval_points: self.schedule.eval_points.unwrap_or(defaults.eval_points),
            eval_seed: self.seeds.eval.unwrap_or(0),
            record_wall_time: self.schedule.record_wall_time.unwrap_or(defaults.record_wall_time),
        };
        schedule.validate().map_err(|e| fail(e.to_string()))?;
        let optimizer = self.optimizer.unwrap_or_default();
        optimizer.validate().map_err(|e| fail(e.to_string()))?;

        Ok(ResolvedConfig {
            benchmark: self.benchmark,
            dimension,
            beta1,
            beta2,
            gamma_f: self.gamma_f,
            gamma_b: self.gamma_b,
            output_dir: self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("runs").join(self.benchmark.to_string())),
            arch,
            plan,
            schedule,
            optimizer,
            seeds: Seeds {
                init: self.seeds.init.unwrap_or(0),
                sample: self.seeds.sample.unwrap_or(0),
                eval: schedule.eval_seed,
            },
            modes: self.modes,
        })
    }
}

impl ResolvedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::load(path)?.resolve(path)
    }

    pub fn problem(&self) -> Result<BenchmarkProblem> {
        BenchmarkProblem::from_id(self.benchmark, Some(self.dimension), Some((self.beta1, self.beta2)))
    }

    pub fn nitsche(&self) -> Result<NitscheConfig> {
        NitscheConfig::new(self.beta1, self.beta2, self.gamma_f, self.gamma_b)
    }

    /// The equivalent user config with every field set.
    pub fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            benchmark: self.benchmark,
            dimension: Some(self.dimension),
            beta1: Some(self.beta1),
            beta2: Some(self.beta2),
            gamma_f: self.gamma_f,
            gamma_b: self.gamma_b,
            output_dir: Some(self.output_dir.clone()),
            arch: ArchSection {
                width: Some(self.arch.width),
                blocks: Some(self.arch.blocks),
            },
            plan: PlanSection {
                domain_total: Some(self.plan.domain_total),
                n_interface: Some(self.plan.n_interface),
                n_boundary: Some(self.plan.n_boundary),
                min_inner: Some(self.plan.min_inner),
            },
            schedule: ScheduleSection {
                epochs: Some(self.schedule.epochs),
                resample_every: Some(self.schedule.resample_every),
                record_every: Some(self.schedule.record_every),
                eval_points: Some(self.schedule.eval_points),
                record_wall_time: Some(self.schedule.record_wall_time),
            },
            optimizer: Some(self.optimizer),
            seeds: SeedSection {
                init: Some(self.seeds.init),
                sample: Some(self.seeds.sample),
                eval: Some(self.seeds.eval),
            },
            modes: self.modes,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_config()).map_err(|e| Error::Config {
            path: self.output_dir.clone(),
            message: e.to_string(),
        })
    }

    /// Output directory, placed under `$DEEP_NITSCHE_OUTPUT_ROOT` when that
    /// is set and the configured path is relative.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => PathBuf::from(root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }
}
