//! Flat key-value experiment configuration, parsed from TOML files with a
//! closed key schema: unknown keys are errors that name the offending key.

use super::task::TaskSpec;
use super::HarnessError;
use crate::cola::{ColaSchedule, KnotUnit};
use crate::lora::DEFAULT_INIT_STD;
use crate::optim::AdamWConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LoraBaseline,
    Cola,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::LoraBaseline => "lora_baseline",
            Method::Cola => "cola",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub total_epochs: usize,
    #[serde(default)]
    pub knots: Vec<usize>,
    pub ranks: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_knot_unit")]
    pub knot_unit: KnotUnit,
}

fn default_alpha() -> f64 {
    16.0
}

fn default_knot_unit() -> KnotUnit {
    KnotUnit::Epochs
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Result<ColaSchedule, HarnessError> {
        let s = ColaSchedule {
            total_epochs: self.total_epochs,
            knots: self.knots.clone(),
            rank_per_segment: self.ranks.clone(),
            alpha: self.alpha,
            knot_unit: self.knot_unit,
        };
        s.validate()?;
        Ok(s)
    }

    /// Chain length 1 at the first segment's rank, for baseline comparisons.
    pub fn baseline_schedule(&self) -> Result<ColaSchedule, HarnessError> {
        Ok(ColaSchedule::baseline(
            self.total_epochs,
            self.ranks[0],
            self.alpha,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimSection {
    pub lr0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub restart_lr_at_knots: bool,
}

impl Default for OptimSection {
    fn default() -> Self {
        let a = AdamWConfig::default();
        Self {
            lr0: a.lr0,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            weight_decay: a.weight_decay,
            restart_lr_at_knots: false,
        }
    }
}

impl OptimSection {
    pub fn adamw(&self, lr0: f64) -> AdamWConfig {
        AdamWConfig {
            lr0,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }
}

fn default_lr_grid() -> Vec<f64> {
    vec![1e-3, 8e-4, 5e-4, 1e-4, 5e-5]
}

fn default_batch_size() -> usize {
    8
}

fn default_jobs() -> usize {
    1
}

fn default_init_std() -> f64 {
    DEFAULT_INIT_STD
}

/// One experiment: a task, a method, its schedule, and the sweep axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    pub method: Method,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub optim: OptimSection,
    #[serde(default = "default_lr_grid")]
    pub lr_grid: Vec<f64>,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    /// Also run the single-adapter baseline alongside a chained method.
    #[serde(default)]
    pub compare_with_baseline: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "need at least one seed"));
        }
        if self.lr_grid.is_empty() {
            return Err(invalid("lr_grid", "need at least one learning rate"));
        }
        if self.lr_grid.iter().any(|lr| !(*lr > 0.0)) {
            return Err(invalid("lr_grid", "learning rates must be positive"));
        }
        if !matches!(self.batch_size, 4 | 8) {
            return Err(invalid(
                "batch_size",
                &format!("must be 4 or 8, got {}", self.batch_size),
            ));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs", "must be >= 1"));
        }
        if !(self.init_std > 0.0) {
            return Err(invalid("init_std", "must be positive"));
        }
        self.schedule.to_schedule()?;
        Ok(())
    }
}

fn invalid(key: &str, reason: &str) -> HarnessError {
    HarnessError::InvalidConfig {
        key: key.into(),
        reason: reason.into(),
    }
}

// ---------------------------------------------------------------------------
// fw-demo configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FwObjectiveKind {
    Quadratic,
    Linear,
    Completion,
}

/// Configuration of one conditional-gradient demo run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwDemoConfig {
    pub objective: FwObjectiveKind,
    #[serde(default = "default_fw_dim")]
    pub d: usize,
    #[serde(default = "default_fw_dim")]
    pub k: usize,
    /// Ball radius; for quadratic/completion, 0 means "derive from the
    /// target so it sits in the interior".
    #[serde(default)]
    pub radius: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Rank of the generated target matrix.
    #[serde(default = "default_target_rank")]
    pub target_rank: usize,
    /// Gradient noise level (0 = exact gradients).
    #[serde(default)]
    pub noise_std: f64,
    /// Configured oracle slack added to the reported bound.
    #[serde(default)]
    pub oracle_eps: f64,
    /// Fraction of entries observed by the completion objective.
    #[serde(default = "default_observed_fraction")]
    pub observed_fraction: f64,
    /// Fixed step size; 0 selects the theorem step.
    #[serde(default)]
    pub step: f64,
    pub output_dir: PathBuf,
}

fn default_fw_dim() -> usize {
    20
}
fn default_horizon() -> usize {
    10_000
}
fn default_seed() -> u64 {
    7
}
fn default_target_rank() -> usize {
    3
}
fn default_observed_fraction() -> f64 {
    0.3
}

impl FwDemoConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be >= 1"));
        }
        if self.radius < 0.0 {
            return Err(invalid("radius", "must be >= 0"));
        }
        if self.objective == FwObjectiveKind::Linear && !(self.radius > 0.0) {
            return Err(invalid(
                "radius",
                "linear objective needs an explicit radius",
            ));
        }
        if !(self.step >= 0.0 && self.step <= 1.0) {
            return Err(invalid("step", "must lie in [0, 1] (0 = theorem step)"));
        }
        if self.objective == FwObjectiveKind::Linear && self.step == 0.0 {
            return Err(invalid(
                "step",
                "linear objective has zero curvature; give an explicit step",
            ));
        }
        if !(self.observed_fraction > 0.0 && self.observed_fraction <= 1.0) {
            return Err(invalid("observed_fraction", "must lie in (0, 1]"));
        }
        if self.target_rank == 0 || self.target_rank > self.d.min(self.k) {
            return Err(invalid("target_rank", "must lie in 1..=min(d, k)"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn read_to_string(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::ConfigRead {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = read_to_string(path)?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::ConfigParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_fw_config(path: &Path) -> Result<FwDemoConfig, HarnessError> {
    let text = read_to_string(path)?;
    let cfg: FwDemoConfig = toml::from_str(&text).map_err(|e| HarnessError::ConfigParse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::task::TaskKind;

    fn minimal_toml() -> &'static str {
        r#"
            method = "cola"
            seeds = [1, 2]
            output_dir = "out"

            [task]
            kind = "teacher_student"
            d = 16
            k = 16
            n_train = 64
            n_eval = 32
            n_test = 32

            [schedule]
            total_epochs = 5
            knots = [3]
            ranks = [8, 8]
        "#
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.lr_grid, vec![1e-3, 8e-4, 5e-4, 1e-4, 5e-5]);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.task.kind, TaskKind::TeacherStudent);
        assert_eq!(cfg.schedule.alpha, 16.0);
        assert_eq!(cfg.jobs, 1);
        assert!(!cfg.compare_with_baseline);
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = format!("{}\nno_such_key = 3\n", minimal_toml());
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("no_such_key"), "{err}");
    }

    #[test]
    fn unknown_nested_key_is_named() {
        let bad = minimal_toml().replace("[schedule]", "[schedule]\nbogus = 1\n");
        let err = toml::from_str::<ExperimentConfig>(&bad).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn batch_size_restricted() {
        let mut cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        cfg.batch_size = 16;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("batch_size"));
        cfg.batch_size = 4;
        cfg.validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg: ExperimentConfig = toml::from_str(minimal_toml()).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn fw_config_defaults_and_validation() {
        let cfg: FwDemoConfig = toml::from_str(
            r#"
                objective = "quadratic"
                output_dir = "out"
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.d, 20);
        assert_eq!(cfg.horizon, 10_000);

        let linear: FwDemoConfig = toml::from_str(
            r#"
                objective = "linear"
                output_dir = "out"
            "#,
        )
        .unwrap();
        assert!(linear.validate().is_err());
    }
}
