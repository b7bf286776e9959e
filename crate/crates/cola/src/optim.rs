//! AdamW over adapter parameters, with a linear learning-rate schedule and a
//! full state reset used when a fresh adapter chain segment begins.

use crate::linalg::DenseMatrix;
use crate::model::{GradSet, LoraLinearModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum OptimError {
    #[error("gradient set covers layers {got:?}, optimizer is bound to layers {bound:?}")]
    LayerMismatch { got: Vec<usize>, bound: Vec<usize> },
    #[error("gradient for layer {layer} is {gr}x{gc}, parameter is {pr}x{pc}")]
    GradShape {
        layer: usize,
        gr: usize,
        gc: usize,
        pr: usize,
        pc: usize,
    },
    #[error("non-finite gradient on layer {layer}")]
    NonFiniteGrad { layer: usize },
    #[error("learning rate must be >= 0, got {lr}")]
    NegativeLr { lr: f64 },
    #[error("model has no adapters to optimize")]
    NoAdapters,
}

/// AdamW hyperparameters. `weight_decay` defaults to 0; nonzero values are
/// applied decoupled, i.e. added to the normalized moment step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct MomentSlot {
    layer: usize,
    m_a: DenseMatrix,
    v_a: DenseMatrix,
    m_b: DenseMatrix,
    v_b: DenseMatrix,
}

/// First/second moments for every adapter matrix plus the shared step count.
///
/// `reset` zeroes the moments and the counter and re-binds the slot shapes
/// to the model's current adapters, which may have a new rank.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    cfg: AdamWConfig,
    step_count: u64,
    slots: Vec<MomentSlot>,
}

impl AdamWState {
    pub fn new(model: &LoraLinearModel, cfg: AdamWConfig) -> Result<Self, OptimError> {
        let mut state = Self {
            cfg,
            step_count: 0,
            slots: Vec::new(),
        };
        state.bind(model)?;
        Ok(state)
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.cfg
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    fn bind(&mut self, model: &LoraLinearModel) -> Result<(), OptimError> {
        let layers = model.adapted_layers();
        if layers.is_empty() {
            return Err(OptimError::NoAdapters);
        }
        self.slots = layers
            .into_iter()
            .map(|layer| {
                let ad = model.adapter(layer).expect("listed as adapted");
                MomentSlot {
                    layer,
                    m_a: DenseMatrix::zeros(ad.a().rows(), ad.a().cols()),
                    v_a: DenseMatrix::zeros(ad.a().rows(), ad.a().cols()),
                    m_b: DenseMatrix::zeros(ad.b().rows(), ad.b().cols()),
                    v_b: DenseMatrix::zeros(ad.b().rows(), ad.b().cols()),
                }
            })
            .collect();
        Ok(())
    }

    /// Zero all moments and the step counter; re-bind to the model's current
    /// adapter shapes. Idempotent.
    pub fn reset(&mut self, model: &LoraLinearModel) -> Result<(), OptimError> {
        self.step_count = 0;
        self.bind(model)
    }

    /// Largest absolute moment entry; zero right after a reset.
    pub fn max_abs_moment(&self) -> f64 {
        self.slots.iter().fold(0.0, |acc, s| {
            acc.max(s.m_a.max_abs())
                .max(s.v_a.max_abs())
                .max(s.m_b.max_abs())
                .max(s.v_b.max_abs())
        })
    }

    /// One AdamW update of every adapter matrix at learning rate `lr_t`:
    /// moments are updated with `beta1`/`beta2`, bias-corrected, and the
    /// parameter moves by `lr_t * (m_hat / (sqrt(v_hat) + eps) + wd * p)`.
    pub fn step(
        &mut self,
        model: &mut LoraLinearModel,
        grads: &GradSet,
        lr_t: f64,
    ) -> Result<(), OptimError> {
        if lr_t < 0.0 {
            return Err(OptimError::NegativeLr { lr: lr_t });
        }
        let got: Vec<usize> = grads.layers.iter().map(|g| g.layer).collect();
        let bound: Vec<usize> = self.slots.iter().map(|s| s.layer).collect();
        if got != bound {
            return Err(OptimError::LayerMismatch { got, bound });
        }
        for g in &grads.layers {
            if !g.grad_a.is_finite() || !g.grad_b.is_finite() {
                return Err(OptimError::NonFiniteGrad { layer: g.layer });
            }
        }

        self.step_count += 1;
        let t = self.step_count;
        for (slot, g) in self.slots.iter_mut().zip(&grads.layers) {
            let ad = model
                .adapter_mut(slot.layer)
                .expect("bound layer has adapter");
            check_shape(slot.layer, &g.grad_a, ad.a())?;
            check_shape(slot.layer, &g.grad_b, ad.b())?;
            adamw_update(
                ad.a_mut().data_mut(),
                g.grad_a.data(),
                slot.m_a.data_mut(),
                slot.v_a.data_mut(),
                t,
                &self.cfg,
                lr_t,
            );
            adamw_update(
                ad.b_mut().data_mut(),
                g.grad_b.data(),
                slot.m_b.data_mut(),
                slot.v_b.data_mut(),
                t,
                &self.cfg,
                lr_t,
            );
        }
        Ok(())
    }
}

fn check_shape(layer: usize, grad: &DenseMatrix, param: &DenseMatrix) -> Result<(), OptimError> {
    if grad.shape() != param.shape() {
        return Err(OptimError::GradShape {
            layer,
            gr: grad.rows(),
            gc: grad.cols(),
            pr: param.rows(),
            pc: param.cols(),
        });
    }
    Ok(())
}

/// The scalar AdamW rule applied elementwise.
fn adamw_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamWConfig,
    lr: f64,
) {
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..param.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * param[i]);
    }
}

// ---------------------------------------------------------------------------
// Learning-rate schedule
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    LinearDecay,
}

/// `lr(t) = lr0 * max(0, 1 - t / total_steps)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub kind: ScheduleKind,
    pub lr0: f64,
    pub total_steps: u64,
}

impl LrSchedule {
    pub fn linear(lr0: f64, total_steps: u64) -> Self {
        Self {
            kind: ScheduleKind::LinearDecay,
            lr0,
            total_steps,
        }
    }

    pub fn lr_at(&self, t: u64) -> f64 {
        match self.kind {
            ScheduleKind::LinearDecay => {
                if self.total_steps == 0 {
                    return 0.0;
                }
                let frac = 1.0 - t as f64 / self.total_steps as f64;
                self.lr0 * frac.max(0.0)
            }
        }
    }
}
