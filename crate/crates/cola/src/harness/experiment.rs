//! Seed x learning-rate sweeps over one experiment config, with best-by-eval
//! selection (test metrics are never consulted) and both summary
//! aggregations: best-per-seed-then-averaged and averaged-then-best.

use super::config::{ExperimentConfig, Method};
use super::task::{evaluate, generate_task, MetricKind, SupervisedTask};
use super::HarnessError;
use crate::cola::{run_cola, ColaDataset, ColaError, ColaSchedule, RunTrace, TrainParams};
use crate::linalg::SeededRng;
use crate::model::LoraLinearModel;
use serde::{Deserialize, Serialize};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Instant;

/// One trained run. Failed (diverged) runs carry NaN metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub method: String,
    pub schedule: String,
    pub seed: u64,
    pub eval: f64,
    pub test: f64,
    pub flops: f64,
    pub wall_time: f64,
    /// Grid point that produced this row (not part of the CSV schema).
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub method: String,
    pub aggregation: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub raw: Vec<ResultRow>,
    pub best: Vec<ResultRow>,
    pub summaries: Vec<SummaryRow>,
}

/// Everything produced by one (method, seed, lr) unit, including the trace
/// and final model for the persistence layer.
pub struct RunArtifact {
    pub row: ResultRow,
    pub trace: Option<RunTrace>,
    pub model: Option<LoraLinearModel>,
}

struct WorkUnit {
    index: usize,
    method: Method,
    schedule: ColaSchedule,
    seed: u64,
    lr: f64,
}

/// Run the sweep. Units execute on up to `cfg.jobs` worker threads, each
/// owning its model, optimizer, and RNG; rows are collected and sorted into
/// a thread-count-independent order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let (output, _) = run_experiment_with_artifacts(cfg)?;
    Ok(output)
}

pub fn run_experiment_with_artifacts(
    cfg: &ExperimentConfig,
) -> Result<(ExperimentOutput, Vec<RunArtifact>), HarnessError> {
    cfg.validate()?;
    if cfg.task.kind == crate::harness::task::TaskKind::MatrixCompletion {
        return Err(HarnessError::UnsupportedCombination {
            task: cfg.task.kind,
            method: cfg.method.tag().to_string(),
        });
    }
    let task = generate_task(&cfg.task)?.supervised().ok_or_else(|| {
        HarnessError::UnsupportedCombination {
            task: cfg.task.kind,
            method: cfg.method.tag().to_string(),
        }
    })?;
    let task = Arc::new(task);

    let mut methods: Vec<(Method, ColaSchedule)> = Vec::new();
    match cfg.method {
        Method::LoraBaseline => {
            methods.push((Method::LoraBaseline, cfg.schedule.baseline_schedule()?));
        }
        Method::Cola => {
            methods.push((Method::Cola, cfg.schedule.to_schedule()?));
            if cfg.compare_with_baseline {
                methods.push((Method::LoraBaseline, cfg.schedule.baseline_schedule()?));
            }
        }
    }

    let mut units = Vec::new();
    for (method, schedule) in &methods {
        for &seed in &cfg.seeds {
            for &lr in &cfg.lr_grid {
                units.push(WorkUnit {
                    index: units.len(),
                    method: *method,
                    schedule: schedule.clone(),
                    seed,
                    lr,
                });
            }
        }
    }

    let queue = Arc::new(Mutex::new(units));
    let (tx, rx) = mpsc::channel::<(usize, Result<RunArtifact, HarnessError>)>();
    let workers = cfg.jobs.min(queue.lock().expect("queue lock").len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let queue = Arc::clone(&queue);
            let tx = tx.clone();
            let task = Arc::clone(&task);
            let cfg = cfg.clone();
            scope.spawn(move || loop {
                let unit = { queue.lock().expect("queue lock").pop() };
                let Some(unit) = unit else { break };
                let index = unit.index;
                let artifact = run_unit(&cfg, &task, &unit);
                if tx.send((index, artifact)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut collected: Vec<(usize, RunArtifact)> = Vec::new();
    for (index, artifact) in rx {
        collected.push((index, artifact?));
    }
    collected.sort_by_key(|(index, _)| *index);
    let artifacts: Vec<RunArtifact> = collected.into_iter().map(|(_, a)| a).collect();

    let raw: Vec<ResultRow> = artifacts.iter().map(|a| a.row.clone()).collect();
    let best = select_best_rows(&raw, &cfg.seeds, task.metric);
    let mut summaries = Vec::new();
    for (method, _) in &methods {
        summaries.extend(summarize(&raw, &best, method.tag(), task.metric));
    }
    Ok((
        ExperimentOutput {
            raw,
            best,
            summaries,
        },
        artifacts,
    ))
}

fn run_unit(
    cfg: &ExperimentConfig,
    task: &SupervisedTask,
    unit: &WorkUnit,
) -> Result<RunArtifact, HarnessError> {
    let started = Instant::now();
    let mut rng = SeededRng::new(unit.seed);
    let model = task.model.clone().with_adapters(
        &mut rng,
        unit.schedule.rank_per_segment[0],
        unit.schedule.alpha,
        cfg.init_std,
    )?;
    let data = ColaDataset {
        train: task.train.clone(),
        eval: task.eval.clone(),
    };
    let params = TrainParams {
        adamw: cfg.optim.adamw(unit.lr),
        batch_size: cfg.batch_size,
        restart_lr_at_knots: cfg.optim.restart_lr_at_knots,
        init_std: cfg.init_std,
    };

    let base_row = ResultRow {
        task: task.spec.tag(),
        method: unit.method.tag().to_string(),
        schedule: unit.schedule.descriptor(),
        seed: unit.seed,
        eval: f64::NAN,
        test: f64::NAN,
        flops: f64::NAN,
        wall_time: 0.0,
        lr: unit.lr,
    };

    match run_cola(model, &data, &unit.schedule, params, &mut rng) {
        Ok(outcome) => {
            let eval = evaluate(&outcome.model, &task.eval, task.metric)?;
            let test = evaluate(&outcome.model, &task.test, task.metric)?;
            let row = ResultRow {
                eval,
                test,
                flops: outcome.trace.flops_total,
                wall_time: started.elapsed().as_secs_f64(),
                ..base_row
            };
            Ok(RunArtifact {
                row,
                trace: Some(outcome.trace),
                model: Some(outcome.model),
            })
        }
        Err(ColaError::Diverged { step, trace }) => {
            log::warn!(
                "seed {} lr {} diverged at step {step}; recording failed row",
                unit.seed,
                unit.lr
            );
            let row = ResultRow {
                flops: trace.flops_total,
                wall_time: started.elapsed().as_secs_f64(),
                ..base_row
            };
            Ok(RunArtifact {
                row,
                trace: Some(*trace),
                model: None,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Best grid point per (method, seed) by the eval column alone. NaN rows are
/// skipped; ties keep the earliest grid point.
pub fn select_best_rows(raw: &[ResultRow], seeds: &[u64], metric: MetricKind) -> Vec<ResultRow> {
    let mut methods: Vec<&str> = Vec::new();
    for r in raw {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut best = Vec::new();
    for method in methods {
        for &seed in seeds {
            let mut chosen: Option<&ResultRow> = None;
            for row in raw.iter().filter(|r| r.method == method && r.seed == seed) {
                if row.eval.is_nan() {
                    continue;
                }
                match chosen {
                    None => chosen = Some(row),
                    Some(c) => {
                        if metric.better(row.eval, c.eval) {
                            chosen = Some(row);
                        }
                    }
                }
            }
            if let Some(c) = chosen {
                best.push(c.clone());
            }
        }
    }
    best
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Two labeled aggregations over the sweep:
/// `best_per_seed_then_mean` averages each seed's best-by-eval test score;
/// `mean_per_lr_then_best` averages test scores per grid point first and
/// reports the grid point with the best mean eval score.
fn summarize(
    raw: &[ResultRow],
    best: &[ResultRow],
    method: &str,
    metric: MetricKind,
) -> Vec<SummaryRow> {
    let metric_name = match metric {
        MetricKind::MseLoss => "eval_mse",
        MetricKind::Accuracy => "accuracy",
    };
    let mut out = Vec::new();
    let task = raw
        .iter()
        .find(|r| r.method == method)
        .map(|r| r.task.clone())
        .unwrap_or_default();

    let best_tests: Vec<f64> = best
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.test)
        .collect();
    let (mean, std) = mean_std(&best_tests);
    out.push(SummaryRow {
        task: task.clone(),
        method: method.to_string(),
        aggregation: "best_per_seed_then_mean".into(),
        metric: metric_name.into(),
        mean,
        std,
        n: best_tests.len(),
        detail: "test metric of each seed's best-by-eval grid point".into(),
    });

    let mut lrs: Vec<f64> = Vec::new();
    for r in raw.iter().filter(|r| r.method == method) {
        if !lrs.contains(&r.lr) {
            lrs.push(r.lr);
        }
    }
    let mut best_lr: Option<(f64, f64, Vec<f64>)> = None;
    for &lr in &lrs {
        let evals: Vec<f64> = raw
            .iter()
            .filter(|r| r.method == method && r.lr == lr && !r.eval.is_nan())
            .map(|r| r.eval)
            .collect();
        if evals.is_empty() {
            continue;
        }
        let tests: Vec<f64> = raw
            .iter()
            .filter(|r| r.method == method && r.lr == lr && !r.test.is_nan())
            .map(|r| r.test)
            .collect();
        let (eval_mean, _) = mean_std(&evals);
        let replace = match &best_lr {
            None => true,
            Some((_, cur, _)) => metric.better(eval_mean, *cur),
        };
        if replace {
            best_lr = Some((lr, eval_mean, tests));
        }
    }
    if let Some((lr, _, tests)) = best_lr {
        let (mean, std) = mean_std(&tests);
        out.push(SummaryRow {
            task,
            method: method.to_string(),
            aggregation: "mean_per_lr_then_best".into(),
            metric: metric_name.into(),
            mean,
            std,
            n: tests.len(),
            detail: format!("lr={lr}"),
        });
    }
    out
}
