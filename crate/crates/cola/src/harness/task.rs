//! Synthetic desk-scale tasks with known structure.
//!
//! The teacher-student task plants an exact-rank weight update on a frozen
//! linear map, so the best achievable eval loss of a rank-limited adapter is
//! computable from the planted spectrum. Classification derives labels from
//! a perturbed teacher network. Matrix completion produces a low-rank target
//! with disjoint observed-entry masks and is consumed by the
//! conditional-gradient path, not the adapter trainer.

use super::HarnessError;
use crate::linalg::{DenseMatrix, SeededRng};
use crate::model::{Activation, Batch, Layer, LoraLinearModel, LossKind, Targets};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    TeacherStudent,
    SyntheticClassification,
    MatrixCompletion,
}

/// Generator parameters. `d` is the output dimension of the adapted weight,
/// `k` the input dimension; classification additionally uses `classes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default = "default_dim")]
    pub k: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    #[serde(default = "default_delta_rank")]
    pub target_delta_rank: usize,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_dim() -> usize {
    64
}
fn default_classes() -> usize {
    4
}
fn default_delta_rank() -> usize {
    8
}
fn default_n_train() -> usize {
    1000
}
fn default_n_eval() -> usize {
    500
}
fn default_n_test() -> usize {
    1000
}
fn default_seed() -> u64 {
    1
}

impl TaskSpec {
    pub fn teacher_student(d: usize, k: usize, target_delta_rank: usize) -> Self {
        Self {
            kind: TaskKind::TeacherStudent,
            d,
            k,
            classes: default_classes(),
            target_delta_rank,
            noise_std: 0.0,
            n_train: default_n_train(),
            n_eval: default_n_eval(),
            n_test: default_n_test(),
            seed: default_seed(),
        }
    }

    /// Short tag used in result rows.
    pub fn tag(&self) -> String {
        match self.kind {
            TaskKind::TeacherStudent => format!(
                "teacher_student[{}x{}|r{}]",
                self.d, self.k, self.target_delta_rank
            ),
            TaskKind::SyntheticClassification => {
                format!(
                    "synthetic_classification[{}x{}|c{}]",
                    self.d, self.k, self.classes
                )
            }
            TaskKind::MatrixCompletion => {
                format!(
                    "matrix_completion[{}x{}|r{}]",
                    self.d, self.k, self.target_delta_rank
                )
            }
        }
    }
}

/// Direction-aware evaluation metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Mean loss; lower is better.
    MseLoss,
    /// Classification accuracy in [0, 1]; higher is better.
    Accuracy,
}

impl MetricKind {
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            MetricKind::MseLoss => a < b,
            MetricKind::Accuracy => a > b,
        }
    }
}

/// Supervised task: a frozen model skeleton (no adapters yet) plus splits.
#[derive(Clone, Debug)]
pub struct SupervisedTask {
    pub spec: TaskSpec,
    pub model: LoraLinearModel,
    pub train: Batch,
    pub eval: Batch,
    pub test: Batch,
    /// Planted weight update on the first layer, when one exists.
    pub ground_truth_delta: Option<DenseMatrix>,
    pub metric: MetricKind,
}

/// Completion task consumed by the conditional-gradient solver.
#[derive(Clone, Debug)]
pub struct CompletionTask {
    pub spec: TaskSpec,
    pub target: DenseMatrix,
    pub train_mask: Vec<(usize, usize)>,
    pub eval_mask: Vec<(usize, usize)>,
    pub test_mask: Vec<(usize, usize)>,
    /// Trace norm of the target with a 20% feasibility margin.
    pub suggested_radius: f64,
}

#[derive(Clone, Debug)]
pub enum GeneratedTask {
    Supervised(SupervisedTask),
    Completion(CompletionTask),
}

impl GeneratedTask {
    pub fn supervised(self) -> Option<SupervisedTask> {
        match self {
            GeneratedTask::Supervised(t) => Some(t),
            GeneratedTask::Completion(_) => None,
        }
    }

    pub fn completion(self) -> Option<CompletionTask> {
        match self {
            GeneratedTask::Completion(t) => Some(t),
            GeneratedTask::Supervised(_) => None,
        }
    }
}

/// Exact-rank matrix from two Gaussian factors, rescaled to a fixed
/// Frobenius norm so task difficulty does not drift with dimension.
fn planted_low_rank(
    rng: &mut SeededRng,
    d: usize,
    k: usize,
    rank: usize,
    fro_norm: f64,
) -> Result<DenseMatrix, HarnessError> {
    let max = d.min(k);
    if rank == 0 || rank > max {
        return Err(HarnessError::InfeasibleRank { rank, max });
    }
    let p = DenseMatrix::gaussian(rng, d, rank, 1.0)?;
    let q = DenseMatrix::gaussian(rng, rank, k, 1.0)?;
    let raw = p.matmul(&q)?;
    let scale = fro_norm / raw.frobenius_norm();
    Ok(raw.scale(scale))
}

const PLANTED_DELTA_FRO: f64 = 2.0;

pub fn generate_task(spec: &TaskSpec) -> Result<GeneratedTask, HarnessError> {
    match spec.kind {
        TaskKind::TeacherStudent => generate_teacher_student(spec).map(GeneratedTask::Supervised),
        TaskKind::SyntheticClassification => {
            generate_classification(spec).map(GeneratedTask::Supervised)
        }
        TaskKind::MatrixCompletion => generate_completion(spec).map(GeneratedTask::Completion),
    }
}

fn generate_teacher_student(spec: &TaskSpec) -> Result<SupervisedTask, HarnessError> {
    let mut rng = SeededRng::new(spec.seed);
    let (d, k) = (spec.d, spec.k);
    let pretrained = DenseMatrix::gaussian(&mut rng, d, k, 1.0 / (k as f64).sqrt())?;
    let delta = planted_low_rank(&mut rng, d, k, spec.target_delta_rank, PLANTED_DELTA_FRO)?;
    let teacher = pretrained.add_scaled(&delta, 1.0)?;

    let split = |rng: &mut SeededRng, n: usize| -> Result<Batch, HarnessError> {
        let x = DenseMatrix::gaussian(rng, n, k, 1.0)?;
        let mut y = x.matmul_transposed(&teacher)?;
        if spec.noise_std > 0.0 {
            let noise = DenseMatrix::gaussian(rng, n, d, spec.noise_std)?;
            y = y.add_scaled(&noise, 1.0)?;
        }
        Ok(Batch::new(x, Targets::Values(y))?)
    };
    let train = split(&mut rng, spec.n_train)?;
    let eval = split(&mut rng, spec.n_eval)?;
    let test = split(&mut rng, spec.n_test)?;

    let model = LoraLinearModel::new(
        vec![Layer::frozen(pretrained, Activation::Identity)],
        LossKind::Mse,
    )?;
    Ok(SupervisedTask {
        spec: spec.clone(),
        model,
        train,
        eval,
        test,
        ground_truth_delta: Some(delta),
        metric: MetricKind::MseLoss,
    })
}

fn generate_classification(spec: &TaskSpec) -> Result<SupervisedTask, HarnessError> {
    let mut rng = SeededRng::new(spec.seed);
    let (d, k, c) = (spec.d, spec.k, spec.classes);
    // Two layers: k -> d (tanh) then d -> classes (identity logits).
    let w1 = DenseMatrix::gaussian(&mut rng, d, k, 1.0 / (k as f64).sqrt())?;
    let w2 = DenseMatrix::gaussian(&mut rng, c, d, 1.0 / (d as f64).sqrt())?;
    let delta = planted_low_rank(&mut rng, d, k, spec.target_delta_rank, PLANTED_DELTA_FRO)?;
    let teacher = LoraLinearModel::new(
        vec![
            Layer::frozen(w1.add_scaled(&delta, 1.0)?, Activation::Tanh),
            Layer::frozen(w2.clone(), Activation::Identity),
        ],
        LossKind::SoftmaxCrossEntropy,
    )?;

    let split = |rng: &mut SeededRng, n: usize| -> Result<Batch, HarnessError> {
        let x = DenseMatrix::gaussian(rng, n, k, 1.0)?;
        let mut logits = teacher.forward(&x)?;
        if spec.noise_std > 0.0 {
            let noise = DenseMatrix::gaussian(rng, n, c, spec.noise_std)?;
            logits = logits.add_scaled(&noise, 1.0)?;
        }
        let labels = (0..n)
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0usize;
                for (j, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        Ok(Batch::new(x, Targets::Classes(labels))?)
    };
    let train = split(&mut rng, spec.n_train)?;
    let eval = split(&mut rng, spec.n_eval)?;
    let test = split(&mut rng, spec.n_test)?;

    let model = LoraLinearModel::new(
        vec![
            Layer::frozen(w1, Activation::Tanh),
            Layer::frozen(w2, Activation::Identity),
        ],
        LossKind::SoftmaxCrossEntropy,
    )?;
    Ok(SupervisedTask {
        spec: spec.clone(),
        model,
        train,
        eval,
        test,
        ground_truth_delta: Some(delta),
        metric: MetricKind::Accuracy,
    })
}

pub fn generate_completion(spec: &TaskSpec) -> Result<CompletionTask, HarnessError> {
    let mut rng = SeededRng::new(spec.seed);
    let (d, k) = (spec.d, spec.k);
    let target = planted_low_rank(&mut rng, d, k, spec.target_delta_rank, PLANTED_DELTA_FRO)?;
    let cells = d * k;
    let requested = spec.n_train + spec.n_eval + spec.n_test;
    if requested > cells {
        return Err(HarnessError::MaskTooLarge { requested, cells });
    }
    let mut all: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    rng.shuffle(&mut all);
    let train_mask = all[..spec.n_train].to_vec();
    let eval_mask = all[spec.n_train..spec.n_train + spec.n_eval].to_vec();
    let test_mask = all[spec.n_train + spec.n_eval..requested].to_vec();
    let suggested_radius = 1.2 * target.trace_norm(1e-10, 20_000)?;
    Ok(CompletionTask {
        spec: spec.clone(),
        target,
        train_mask,
        eval_mask,
        test_mask,
        suggested_radius,
    })
}

/// Fraction of correctly argmax-classified samples.
pub fn accuracy(model: &LoraLinearModel, batch: &Batch) -> Result<f64, HarnessError> {
    let out = model.forward(&batch.inputs)?;
    let labels = match &batch.targets {
        Targets::Classes(c) => c,
        Targets::Values(_) => {
            return Err(HarnessError::InvalidConfig {
                key: "task.kind".into(),
                reason: "accuracy needs class targets".into(),
            })
        }
    };
    let mut hits = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let row = out.row(i);
        let mut best = 0usize;
        for (j, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = j;
            }
        }
        if best == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Task-appropriate score of a trained model on one split.
pub fn evaluate(
    model: &LoraLinearModel,
    batch: &Batch,
    metric: MetricKind,
) -> Result<f64, HarnessError> {
    match metric {
        MetricKind::MseLoss => Ok(model.loss(batch)?),
        MetricKind::Accuracy => accuracy(model, batch),
    }
}
