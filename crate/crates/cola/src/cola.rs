//! Chained adapter training: tune the current low-rank pair, tie a knot
//! (merge it into the frozen weights), extend the chain (fresh pair, reset
//! optimizer), repeat. An empty knot list degenerates to plain single-adapter
//! training. Also carries the training-cost ledger and small result
//! arithmetic used in reports.

use crate::linalg::SeededRng;
use crate::lora;
use crate::model::{Batch, LoraLinearModel, ModelDims, ModelError};
use crate::optim::{AdamWConfig, AdamWState, LrSchedule, OptimError};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ColaError {
    #[error("knots must be strictly increasing, got {knots:?}")]
    KnotsNotIncreasing { knots: Vec<usize> },
    #[error("knot {knot} outside the valid range 1..={max} ({unit:?})")]
    KnotOutOfRange {
        knot: usize,
        max: usize,
        unit: KnotUnit,
    },
    #[error("{segments} segments need {segments} ranks, got {got}")]
    RankCount { segments: usize, got: usize },
    #[error("total_epochs must be >= 1")]
    NoEpochs,
    #[error("segment rank must be >= 1")]
    ZeroRank,
    #[error("alpha must be positive, got {alpha}")]
    NonPositiveAlpha { alpha: f64 },
    #[error("batch size must be >= 1")]
    ZeroBatch,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("model has no adapters; install them before training")]
    NoAdapters,
    #[error("adapters have rank {found}, first chain segment expects {expected}")]
    SegmentRankMismatch { expected: usize, found: usize },
    #[error("extend_chain called while the current delta is nonzero; tie the knot first")]
    ExtendWithoutTie,
    #[error("non-finite training loss at step {step}; trace up to the failure is attached")]
    Diverged { step: u64, trace: Box<RunTrace> },
    #[error("relative gain needs a positive baseline, got {baseline}")]
    NonPositiveBaseline { baseline: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Lora(#[from] lora::LoraError),
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// Whether knot positions index epochs (default) or global optimizer steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotUnit {
    Epochs,
    Steps,
}

/// Knot positions plus one adapter rank per chain segment.
///
/// `knots.len() + 1 == rank_per_segment.len()`; an empty knot list is the
/// single-adapter baseline. Epoch knots must lie in `1..=total_epochs - 1`;
/// step knots are validated against the run's step budget when training
/// starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColaSchedule {
    pub total_epochs: usize,
    pub knots: Vec<usize>,
    pub rank_per_segment: Vec<usize>,
    pub alpha: f64,
    pub knot_unit: KnotUnit,
}

impl ColaSchedule {
    pub fn new(
        total_epochs: usize,
        knots: Vec<usize>,
        rank_per_segment: Vec<usize>,
        alpha: f64,
    ) -> Result<Self, ColaError> {
        let s = Self {
            total_epochs,
            knots,
            rank_per_segment,
            alpha,
            knot_unit: KnotUnit::Epochs,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_step_knots(
        total_epochs: usize,
        knots: Vec<usize>,
        rank_per_segment: Vec<usize>,
        alpha: f64,
    ) -> Result<Self, ColaError> {
        let s = Self {
            total_epochs,
            knots,
            rank_per_segment,
            alpha,
            knot_unit: KnotUnit::Steps,
        };
        s.validate()?;
        Ok(s)
    }

    /// Chain length 1: plain single-adapter training.
    pub fn baseline(total_epochs: usize, rank: usize, alpha: f64) -> Result<Self, ColaError> {
        Self::new(total_epochs, Vec::new(), vec![rank], alpha)
    }

    pub fn validate(&self) -> Result<(), ColaError> {
        if self.total_epochs == 0 {
            return Err(ColaError::NoEpochs);
        }
        if !(self.alpha > 0.0) {
            return Err(ColaError::NonPositiveAlpha { alpha: self.alpha });
        }
        if !self.knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(ColaError::KnotsNotIncreasing {
                knots: self.knots.clone(),
            });
        }
        if self.knot_unit == KnotUnit::Epochs {
            for &knot in &self.knots {
                if knot == 0 || knot >= self.total_epochs {
                    return Err(ColaError::KnotOutOfRange {
                        knot,
                        max: self.total_epochs.saturating_sub(1),
                        unit: self.knot_unit,
                    });
                }
            }
        } else if self.knots.first().is_some_and(|&k| k == 0) {
            return Err(ColaError::KnotOutOfRange {
                knot: 0,
                max: 0,
                unit: self.knot_unit,
            });
        }
        let segments = self.knots.len() + 1;
        if self.rank_per_segment.len() != segments {
            return Err(ColaError::RankCount {
                segments,
                got: self.rank_per_segment.len(),
            });
        }
        if self.rank_per_segment.contains(&0) {
            return Err(ColaError::ZeroRank);
        }
        Ok(())
    }

    pub fn segments(&self) -> usize {
        self.rank_per_segment.len()
    }

    /// Comma-free descriptor used in result tables.
    pub fn descriptor(&self) -> String {
        let ranks: Vec<String> = self
            .rank_per_segment
            .iter()
            .map(|r| r.to_string())
            .collect();
        if self.knots.is_empty() {
            return format!("lora[rank={}]", ranks.join(";"));
        }
        let knots: Vec<String> = self.knots.iter().map(|k| k.to_string()).collect();
        let unit = match self.knot_unit {
            KnotUnit::Epochs => "e",
            KnotUnit::Steps => "s",
        };
        format!(
            "cola[knots{}={}][ranks={}]",
            unit,
            knots.join(";"),
            ranks.join(";")
        )
    }
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub global_step: u64,
    pub epoch: usize,
    pub segment_index: usize,
    pub lr: f64,
    pub train_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub eval_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotEvent {
    pub step: u64,
    pub merged_delta_frobenius: f64,
}

/// Full evidence trail of one training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
    pub knot_events: Vec<KnotEvent>,
    pub flops_total: f64,
}

impl RunTrace {
    pub fn final_eval_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.eval_loss)
    }
}

// ---------------------------------------------------------------------------
// Knot operations
// ---------------------------------------------------------------------------

/// Merge every adapter into its frozen weight and zero the adapter delta.
/// The model's forward map is unchanged up to rounding.
pub fn tie_knot(model: &mut LoraLinearModel) -> Result<(), ColaError> {
    let layers = model.adapted_layers();
    if layers.is_empty() {
        return Err(ColaError::NoAdapters);
    }
    for layer in layers {
        model.merge_layer_in_place(layer)?;
    }
    Ok(())
}

/// Replace every adapter with a fresh one of `new_rank` and reset the
/// optimizer. Requires the current deltas to be zero (i.e. [`tie_knot`] has
/// run); the loss immediately after equals the loss immediately before.
pub fn extend_chain(
    model: &mut LoraLinearModel,
    opt: &mut AdamWState,
    rng: &mut SeededRng,
    new_rank: usize,
    init_std: f64,
) -> Result<(), ColaError> {
    let layers = model.adapted_layers();
    if layers.is_empty() {
        return Err(ColaError::NoAdapters);
    }
    for &layer in &layers {
        let ad = model.adapter(layer).expect("listed as adapted");
        if !ad.b().is_zero() {
            return Err(ColaError::ExtendWithoutTie);
        }
    }
    for layer in layers {
        let fresh = {
            let ad = model.adapter(layer).expect("listed as adapted");
            lora::reinit(ad, rng, new_rank, init_std)?
        };
        model.replace_adapter(layer, fresh);
    }
    opt.reset(model)?;
    Ok(())
}

/// Total Frobenius mass of the current adapter deltas, over all layers.
fn delta_frobenius(model: &LoraLinearModel) -> f64 {
    model
        .adapted_layers()
        .into_iter()
        .map(|i| {
            let d = lora::effective_delta(model.adapter(i).expect("adapted"));
            let n = d.frobenius_norm();
            n * n
        })
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

/// Training inputs: full train split plus the held-out eval split scored
/// once per epoch.
#[derive(Clone, Debug)]
pub struct ColaDataset {
    pub train: Batch,
    pub eval: Batch,
}

/// Knobs of the minibatch loop around the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub adamw: AdamWConfig,
    pub batch_size: usize,
    /// Restart the linear decay at every knot instead of spanning the full
    /// run. The default (false) keeps one global schedule.
    pub restart_lr_at_knots: bool,
    pub init_std: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            adamw: AdamWConfig::default(),
            batch_size: 8,
            restart_lr_at_knots: false,
            init_std: lora::DEFAULT_INIT_STD,
        }
    }
}

#[derive(Debug)]
pub struct ColaOutcome {
    pub model: LoraLinearModel,
    pub trace: RunTrace,
}

/// Stepwise driver behind [`run_cola`]. `advance_epoch` trains one epoch,
/// records the eval loss, and fires any knot scheduled at the boundary;
/// tests and examples can inspect the model and optimizer between epochs.
pub struct ColaRun<'a> {
    model: LoraLinearModel,
    opt: AdamWState,
    schedule: &'a ColaSchedule,
    params: TrainParams,
    data: &'a ColaDataset,
    rng: &'a mut SeededRng,
    lr: LrSchedule,
    steps_per_epoch: u64,
    total_steps: u64,
    epoch: usize,
    global_step: u64,
    segment: usize,
    segment_start_step: u64,
    trace: RunTrace,
}

/// What `advance_epoch` observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub eval_loss: f64,
    pub knot_fired: bool,
}

impl<'a> ColaRun<'a> {
    pub fn new(
        model: LoraLinearModel,
        data: &'a ColaDataset,
        schedule: &'a ColaSchedule,
        params: TrainParams,
        rng: &'a mut SeededRng,
    ) -> Result<Self, ColaError> {
        schedule.validate()?;
        if params.batch_size == 0 {
            return Err(ColaError::ZeroBatch);
        }
        let n = data.train.len();
        if n == 0 {
            return Err(ColaError::EmptyDataset);
        }
        let adapted = model.adapted_layers();
        if adapted.is_empty() {
            return Err(ColaError::NoAdapters);
        }
        let first_rank = schedule.rank_per_segment[0];
        for &layer in &adapted {
            let found = model.adapter(layer).expect("adapted").rank();
            if found != first_rank {
                return Err(ColaError::SegmentRankMismatch {
                    expected: first_rank,
                    found,
                });
            }
        }
        let steps_per_epoch = (n as u64).div_ceil(params.batch_size as u64);
        let total_steps = steps_per_epoch * schedule.total_epochs as u64;
        if schedule.knot_unit == KnotUnit::Steps {
            for &knot in &schedule.knots {
                if knot as u64 >= total_steps {
                    return Err(ColaError::KnotOutOfRange {
                        knot,
                        max: (total_steps - 1) as usize,
                        unit: KnotUnit::Steps,
                    });
                }
            }
        }
        let opt = AdamWState::new(&model, params.adamw)?;
        let lr = LrSchedule::linear(params.adamw.lr0, total_steps);
        Ok(Self {
            model,
            opt,
            schedule,
            params,
            data,
            rng,
            lr,
            steps_per_epoch,
            total_steps,
            epoch: 0,
            global_step: 0,
            segment: 0,
            segment_start_step: 0,
            trace: RunTrace::default(),
        })
    }

    pub fn model(&self) -> &LoraLinearModel {
        &self.model
    }

    pub fn optimizer(&self) -> &AdamWState {
        &self.opt
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn segment(&self) -> usize {
        self.segment
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.schedule.total_epochs
    }

    pub fn into_outcome(self) -> ColaOutcome {
        ColaOutcome {
            model: self.model,
            trace: self.trace,
        }
    }

    fn current_lr(&self) -> f64 {
        if self.params.restart_lr_at_knots {
            // Decay over the current segment only.
            let seg_end = self.segment_end_step();
            let seg_len = seg_end - self.segment_start_step;
            let local = self.global_step - self.segment_start_step;
            LrSchedule::linear(self.params.adamw.lr0, seg_len).lr_at(local)
        } else {
            self.lr.lr_at(self.global_step)
        }
    }

    fn segment_end_step(&self) -> u64 {
        match self.schedule.knot_unit {
            KnotUnit::Epochs => self
                .schedule
                .knots
                .get(self.segment)
                .map(|&e| e as u64 * self.steps_per_epoch)
                .unwrap_or(self.total_steps),
            KnotUnit::Steps => self
                .schedule
                .knots
                .get(self.segment)
                .map(|&s| s as u64)
                .unwrap_or(self.total_steps),
        }
    }

    fn fire_knot(&mut self) -> Result<(), ColaError> {
        let merged = delta_frobenius(&self.model);
        tie_knot(&mut self.model)?;
        let next_rank = self.schedule.rank_per_segment[self.segment + 1];
        extend_chain(
            &mut self.model,
            &mut self.opt,
            self.rng,
            next_rank,
            self.params.init_std,
        )?;
        self.segment += 1;
        self.segment_start_step = self.global_step;
        self.trace.knot_events.push(KnotEvent {
            step: self.global_step,
            merged_delta_frobenius: merged,
        });
        Ok(())
    }

    /// Train one epoch. Returns the eval loss and whether a knot fired at
    /// this boundary. On a non-finite loss the error carries no trace; use
    /// [`run_cola`] for the packaged variant.
    pub fn advance_epoch(&mut self) -> Result<EpochReport, ColaError> {
        assert!(
            !self.is_finished(),
            "advance_epoch called after the last epoch"
        );
        self.epoch += 1;
        let n = self.data.train.len();
        let mut order: Vec<usize> = (0..n).collect();
        self.rng.shuffle(&mut order);

        let dims = self.model.dims();
        for chunk in order.chunks(self.params.batch_size) {
            let batch = self.data.train.select_rows(chunk);
            let lr = self.current_lr();
            let (loss, grads) = self.model.backward(&batch)?;
            self.global_step += 1;
            self.trace.steps.push(StepRecord {
                global_step: self.global_step,
                epoch: self.epoch,
                segment_index: self.segment,
                lr,
                train_loss: loss,
            });
            self.trace.flops_total += step_flops(
                &dims,
                chunk.len(),
                self.schedule.rank_per_segment[self.segment],
            );
            if !loss.is_finite() {
                return Err(ColaError::Diverged {
                    step: self.global_step,
                    trace: Box::new(std::mem::take(&mut self.trace)),
                });
            }
            self.opt.step(&mut self.model, &grads, lr)?;
            if self.schedule.knot_unit == KnotUnit::Steps
                && self.segment < self.schedule.knots.len()
                && self.schedule.knots[self.segment] as u64 == self.global_step
            {
                self.fire_knot()?;
            }
        }

        let eval_loss = self.model.loss(&self.data.eval)?;
        self.trace.epochs.push(EpochRecord {
            epoch: self.epoch,
            eval_loss,
        });

        let mut knot_fired = false;
        if self.schedule.knot_unit == KnotUnit::Epochs
            && self.segment < self.schedule.knots.len()
            && self.schedule.knots[self.segment] == self.epoch
        {
            self.fire_knot()?;
            knot_fired = true;
        }
        Ok(EpochReport {
            epoch: self.epoch,
            eval_loss,
            knot_fired,
        })
    }
}

/// Run the full chained-training loop and return the final model plus the
/// complete trace. A non-finite loss aborts with the trace up to failure
/// attached to the error.
pub fn run_cola(
    model: LoraLinearModel,
    data: &ColaDataset,
    schedule: &ColaSchedule,
    params: TrainParams,
    rng: &mut SeededRng,
) -> Result<ColaOutcome, ColaError> {
    let mut run = ColaRun::new(model, data, schedule, params, rng)?;
    while !run.is_finished() {
        run.advance_epoch()?;
    }
    Ok(run.into_outcome())
}

// ---------------------------------------------------------------------------
// Training-cost ledger
// ---------------------------------------------------------------------------

/// Analytic training cost of a schedule and its saving against running the
/// first segment's rank for the whole budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub total: f64,
    pub saved_vs_fixed_rank: f64,
}

/// Multiply-add pairs count as 2 flops; backward costs twice the forward
/// pass, so one training step is 3x the forward cost. Activation and loss
/// flops are ignored. Absolute numbers are model-relative; differences and
/// ratios are the meaningful outputs.
fn per_sample_step_flops(dims: &ModelDims, rank: usize) -> f64 {
    let mut fwd = 0.0;
    for l in &dims.layers {
        fwd += 2.0 * (l.out_dim * l.in_dim) as f64;
        if l.adapted {
            fwd += 2.0 * rank as f64 * (l.out_dim + l.in_dim) as f64;
        }
    }
    3.0 * fwd
}

fn step_flops(dims: &ModelDims, samples: usize, rank: usize) -> f64 {
    samples as f64 * per_sample_step_flops(dims, rank)
}

/// Analytic flop count for a schedule. Matches what [`run_cola`] accumulates
/// in its trace for the same shapes and batch layout.
pub fn training_flops(
    schedule: &ColaSchedule,
    dims: &ModelDims,
    dataset_size: usize,
    batch_size: usize,
) -> Result<FlopsReport, ColaError> {
    schedule.validate()?;
    if batch_size == 0 {
        return Err(ColaError::ZeroBatch);
    }
    if dataset_size == 0 {
        return Err(ColaError::EmptyDataset);
    }

    let mut total = 0.0;
    match schedule.knot_unit {
        KnotUnit::Epochs => {
            // Every epoch touches each sample once, so partial batches do not
            // change per-epoch totals.
            let mut boundaries = vec![0usize];
            boundaries.extend_from_slice(&schedule.knots);
            boundaries.push(schedule.total_epochs);
            for (seg, w) in boundaries.windows(2).enumerate() {
                let epochs = (w[1] - w[0]) as f64;
                total += epochs
                    * dataset_size as f64
                    * per_sample_step_flops(dims, schedule.rank_per_segment[seg]);
            }
        }
        KnotUnit::Steps => {
            let full = dataset_size / batch_size;
            let rem = dataset_size % batch_size;
            let steps_per_epoch = full + usize::from(rem > 0);
            let mut segment = 0usize;
            let mut global_step = 0u64;
            for _ in 0..schedule.total_epochs {
                for s in 0..steps_per_epoch {
                    let samples = if s < full { batch_size } else { rem };
                    global_step += 1;
                    total += step_flops(dims, samples, schedule.rank_per_segment[segment]);
                    if segment < schedule.knots.len()
                        && schedule.knots[segment] as u64 == global_step
                    {
                        segment += 1;
                    }
                }
            }
        }
    }

    let fixed = schedule.total_epochs as f64
        * dataset_size as f64
        * per_sample_step_flops(dims, schedule.rank_per_segment[0]);
    Ok(FlopsReport {
        total,
        saved_vs_fixed_rank: fixed - total,
    })
}

/// Percent improvement of `ours` over `baseline`.
pub fn relative_gain(baseline: f64, ours: f64) -> Result<f64, ColaError> {
    if !(baseline > 0.0) {
        return Err(ColaError::NonPositiveBaseline { baseline });
    }
    Ok((ours - baseline) / baseline * 100.0)
}
