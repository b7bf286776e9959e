//! Desk-scale trainable models: stacks of frozen dense linear maps with
//! optional low-rank adapters, exact forward passes, and analytic gradients
//! with respect to adapter parameters only.
//!
//! Data is row-per-sample: a batch of `n` inputs is `n x in_dim`, a layer
//! with frozen weight `W` (`d x k`) maps it to `n x d` via `x W^T`, and the
//! adapter path adds `(alpha/rank) * x a^T b^T`. Losses are means over the
//! batch so learning rates transfer across batch sizes. Frozen weights never
//! receive gradients; only the adapter pair does.

use crate::linalg::{DenseMatrix, LinalgError, SeededRng};
use crate::lora::{self, LoraAdapter, LoraError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("layer {layer} outputs {out_dim} features but layer {next} expects {next_in}")]
    LayerCompose {
        layer: usize,
        out_dim: usize,
        next: usize,
        next_in: usize,
    },
    #[error("adapter on layer {layer} is {ad}x{ak} for a {d}x{k} frozen weight")]
    AdapterShape {
        layer: usize,
        ad: usize,
        ak: usize,
        d: usize,
        k: usize,
    },
    #[error("model has no layers")]
    EmptyModel,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("input has {got} features, model expects {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("batch has {inputs} input rows but {targets} target rows")]
    TargetRows { inputs: usize, targets: usize },
    #[error("targets have {got} values per sample, model outputs {expected}")]
    TargetDim { expected: usize, got: usize },
    #[error("{loss:?} loss cannot consume {targets} targets")]
    TargetKind {
        loss: LossKind,
        targets: &'static str,
    },
    #[error("class index {class} out of range for {classes} classes (sample {row})")]
    ClassOutOfRange {
        row: usize,
        class: usize,
        classes: usize,
    },
    #[error(transparent)]
    Lora(#[from] LoraError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            // Subgradient at 0 is taken as 0, matching `derivative`.
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    SoftmaxCrossEntropy,
}

/// One frozen linear map, its optional adapter, and the activation applied
/// to this layer's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub frozen: DenseMatrix,
    pub adapter: Option<LoraAdapter>,
    pub activation: Activation,
}

impl Layer {
    pub fn frozen(frozen: DenseMatrix, activation: Activation) -> Self {
        Self {
            frozen,
            adapter: None,
            activation,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.frozen.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.frozen.cols()
    }
}

/// Regression values or class indices, matching the model's loss kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Values(DenseMatrix),
    Classes(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: DenseMatrix,
    pub targets: Targets,
}

impl Batch {
    pub fn new(inputs: DenseMatrix, targets: Targets) -> Result<Self, ModelError> {
        let n = inputs.rows();
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        let t = match &targets {
            Targets::Values(v) => v.rows(),
            Targets::Classes(c) => c.len(),
        };
        if t != n {
            return Err(ModelError::TargetRows {
                inputs: n,
                targets: t,
            });
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Gather the given sample rows into a new batch.
    pub fn select_rows(&self, idx: &[usize]) -> Batch {
        let k = self.inputs.cols();
        let mut data = Vec::with_capacity(idx.len() * k);
        for &i in idx {
            data.extend_from_slice(self.inputs.row(i));
        }
        let inputs = DenseMatrix::new(idx.len(), k, data).expect("gather preserves row length");
        let targets = match &self.targets {
            Targets::Values(v) => {
                let c = v.cols();
                let mut t = Vec::with_capacity(idx.len() * c);
                for &i in idx {
                    t.extend_from_slice(v.row(i));
                }
                Targets::Values(
                    DenseMatrix::new(idx.len(), c, t).expect("gather preserves row length"),
                )
            }
            Targets::Classes(cs) => Targets::Classes(idx.iter().map(|&i| cs[i]).collect()),
        };
        Batch { inputs, targets }
    }
}

/// Per-layer adapter gradients produced by [`LoraLinearModel::backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdapterGrads {
    pub layer: usize,
    pub grad_a: DenseMatrix,
    pub grad_b: DenseMatrix,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradSet {
    pub layers: Vec<AdapterGrads>,
}

/// Stack of frozen linear layers with adapter injection.
#[derive(Clone, Debug, PartialEq)]
pub struct LoraLinearModel {
    layers: Vec<Layer>,
    loss_kind: LossKind,
}

/// Static shape info consumed by the training-cost ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDims {
    pub layers: Vec<LayerDims>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerDims {
    pub out_dim: usize,
    pub in_dim: usize,
    pub adapted: bool,
}

struct ForwardCache {
    /// Input to each layer (the activation of the previous one).
    inputs: Vec<DenseMatrix>,
    /// Pre-activation of each layer.
    preacts: Vec<DenseMatrix>,
    output: DenseMatrix,
}

impl LoraLinearModel {
    pub fn new(layers: Vec<Layer>, loss_kind: LossKind) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        for i in 0..layers.len() {
            if let Some(ad) = &layers[i].adapter {
                let (d, k) = layers[i].frozen.shape();
                if (ad.out_dim(), ad.in_dim()) != (d, k) {
                    return Err(ModelError::AdapterShape {
                        layer: i,
                        ad: ad.out_dim(),
                        ak: ad.in_dim(),
                        d,
                        k,
                    });
                }
            }
            if i + 1 < layers.len() && layers[i].out_dim() != layers[i + 1].in_dim() {
                return Err(ModelError::LayerCompose {
                    layer: i,
                    out_dim: layers[i].out_dim(),
                    next: i + 1,
                    next_in: layers[i + 1].in_dim(),
                });
            }
        }
        Ok(Self { layers, loss_kind })
    }

    /// Install fresh adapters of the given rank on every layer.
    pub fn with_adapters(
        mut self,
        rng: &mut SeededRng,
        rank: usize,
        alpha: f64,
        init_std: f64,
    ) -> Result<Self, ModelError> {
        for layer in &mut self.layers {
            let (d, k) = layer.frozen.shape();
            layer.adapter = Some(lora::init_adapter(rng, d, k, rank, alpha, init_std)?);
        }
        Ok(self)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim()
    }

    pub fn adapter(&self, layer: usize) -> Option<&LoraAdapter> {
        self.layers[layer].adapter.as_ref()
    }

    pub fn adapter_mut(&mut self, layer: usize) -> Option<&mut LoraAdapter> {
        self.layers[layer].adapter.as_mut()
    }

    pub fn adapted_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.adapter.as_ref().map(|_| i))
            .collect()
    }

    /// Clone with every adapter dropped; forward then uses frozen weights only.
    pub fn without_adapters(&self) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer {
                frozen: l.frozen.clone(),
                adapter: None,
                activation: l.activation,
            })
            .collect();
        Self {
            layers,
            loss_kind: self.loss_kind,
        }
    }

    /// Clone with every adapter merged into its frozen weight and dropped.
    pub fn merged(&self) -> Result<Self, ModelError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let frozen = match &l.adapter {
                Some(ad) => lora::merge_into(&l.frozen, ad)?,
                None => l.frozen.clone(),
            };
            layers.push(Layer {
                frozen,
                adapter: None,
                activation: l.activation,
            });
        }
        Ok(Self {
            layers,
            loss_kind: self.loss_kind,
        })
    }

    /// Merge the adapter of one layer into its frozen weight in place,
    /// then zero the adapter's `b` so the delta stops contributing.
    pub(crate) fn merge_layer_in_place(&mut self, layer: usize) -> Result<(), ModelError> {
        if let Some(ad) = self.layers[layer].adapter.as_ref() {
            let merged = lora::merge_into(&self.layers[layer].frozen, ad)?;
            self.layers[layer].frozen = merged;
        }
        if let Some(ad) = self.layers[layer].adapter.as_mut() {
            ad.zero_b();
        }
        Ok(())
    }

    pub(crate) fn replace_adapter(&mut self, layer: usize, adapter: LoraAdapter) {
        self.layers[layer].adapter = Some(adapter);
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            layers: self
                .layers
                .iter()
                .map(|l| LayerDims {
                    out_dim: l.out_dim(),
                    in_dim: l.in_dim(),
                    adapted: l.adapter.is_some(),
                })
                .collect(),
        }
    }

    fn forward_cached(&self, x: &DenseMatrix) -> Result<ForwardCache, ModelError> {
        if x.cols() != self.input_dim() {
            return Err(ModelError::InputDim {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let mut h = x.clone();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut s = h.matmul_transposed(&layer.frozen)?;
            if let Some(ad) = &layer.adapter {
                let xa = h.matmul_transposed(ad.a())?;
                let xab = xa.matmul_transposed(ad.b())?;
                s = s.add_scaled(&xab, ad.scaling())?;
            }
            inputs.push(h);
            let mut act = s.clone();
            for v in act.data_mut() {
                *v = layer.activation.apply(*v);
            }
            preacts.push(s);
            h = act;
        }
        Ok(ForwardCache {
            inputs,
            preacts,
            output: h,
        })
    }

    /// Model output (last layer activation, pre-loss), `n x out_dim`.
    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix, ModelError> {
        Ok(self.forward_cached(x)?.output)
    }

    pub fn loss(&self, batch: &Batch) -> Result<f64, ModelError> {
        let out = self.forward(&batch.inputs)?;
        let (loss, _) = loss_and_grad(self.loss_kind, &out, &batch.targets, false)?;
        Ok(loss)
    }

    /// Loss plus gradients of the adapter parameters.
    ///
    /// With `G` the loss gradient at a layer's pre-activation and `X` the
    /// layer input, the effective-weight gradient is `G^T X` and the adapter
    /// pair receives `grad_b = s * (G^T X) a^T`, `grad_a = s * b^T (G^T X)`
    /// with `s = alpha / rank`. Frozen weights get no gradient storage.
    pub fn backward(&self, batch: &Batch) -> Result<(f64, GradSet), ModelError> {
        let cache = self.forward_cached(&batch.inputs)?;
        let (loss, grad) = loss_and_grad(self.loss_kind, &cache.output, &batch.targets, true)?;
        let mut g = grad.expect("gradient requested");

        let mut grads: Vec<AdapterGrads> = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            // Push the output gradient through the activation.
            let pre = &cache.preacts[idx];
            {
                let gd = g.data_mut();
                for (gv, pv) in gd.iter_mut().zip(pre.data()) {
                    *gv *= layer.activation.derivative(*pv);
                }
            }
            if let Some(ad) = &layer.adapter {
                let gw = g.t_matmul(&cache.inputs[idx])?; // d x k
                let grad_b = gw.matmul_transposed(ad.a())?.scale(ad.scaling());
                let grad_a = ad.b().t_matmul(&gw)?.scale(ad.scaling());
                grads.push(AdapterGrads {
                    layer: idx,
                    grad_a,
                    grad_b,
                });
            }
            if idx > 0 {
                // Input gradient: g W + s (g b) a.
                let mut gx = g.matmul(&layer.frozen)?;
                if let Some(ad) = &layer.adapter {
                    let gb = g.matmul(ad.b())?;
                    let gba = gb.matmul(ad.a())?;
                    gx = gx.add_scaled(&gba, ad.scaling())?;
                }
                g = gx;
            }
        }
        grads.reverse();
        Ok((loss, GradSet { layers: grads }))
    }
}

/// Mean loss over the batch, optionally with the gradient at the output.
fn loss_and_grad(
    kind: LossKind,
    output: &DenseMatrix,
    targets: &Targets,
    want_grad: bool,
) -> Result<(f64, Option<DenseMatrix>), ModelError> {
    let n = output.rows();
    if n == 0 {
        return Err(ModelError::EmptyBatch);
    }
    let inv_n = 1.0 / n as f64;
    match (kind, targets) {
        (LossKind::Mse, Targets::Values(y)) => {
            if y.rows() != n {
                return Err(ModelError::TargetRows {
                    inputs: n,
                    targets: y.rows(),
                });
            }
            if y.cols() != output.cols() {
                return Err(ModelError::TargetDim {
                    expected: output.cols(),
                    got: y.cols(),
                });
            }
            let mut loss = 0.0;
            let mut grad = want_grad.then(|| DenseMatrix::zeros(n, output.cols()));
            for (idx, (o, t)) in output.data().iter().zip(y.data()).enumerate() {
                let diff = o - t;
                loss += 0.5 * diff * diff;
                if let Some(g) = grad.as_mut() {
                    g.data_mut()[idx] = diff * inv_n;
                }
            }
            Ok((loss * inv_n, grad))
        }
        (LossKind::SoftmaxCrossEntropy, Targets::Classes(classes)) => {
            if classes.len() != n {
                return Err(ModelError::TargetRows {
                    inputs: n,
                    targets: classes.len(),
                });
            }
            let c = output.cols();
            let mut loss = 0.0;
            let mut grad = want_grad.then(|| DenseMatrix::zeros(n, c));
            for (i, &label) in classes.iter().enumerate() {
                if label >= c {
                    return Err(ModelError::ClassOutOfRange {
                        row: i,
                        class: label,
                        classes: c,
                    });
                }
                let row = output.row(i);
                let max = row.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
                let mut denom = 0.0;
                for &z in row {
                    denom += (z - max).exp();
                }
                loss -= row[label] - max - denom.ln();
                if let Some(g) = grad.as_mut() {
                    for (j, &z) in row.iter().enumerate() {
                        let p = (z - max).exp() / denom;
                        let indicator = if j == label { 1.0 } else { 0.0 };
                        g.set(i, j, (p - indicator) * inv_n);
                    }
                }
            }
            Ok((loss * inv_n, grad))
        }
        (LossKind::Mse, Targets::Classes(_)) => Err(ModelError::TargetKind {
            loss: kind,
            targets: "class indices",
        }),
        (LossKind::SoftmaxCrossEntropy, Targets::Values(_)) => Err(ModelError::TargetKind {
            loss: kind,
            targets: "dense values",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model(w: f64, a: f64, b: f64) -> LoraLinearModel {
        let mut rng = SeededRng::new(0);
        let mut layer = Layer::frozen(DenseMatrix::from_rows(&[&[w]]), Activation::Identity);
        let mut ad = lora::init_adapter(&mut rng, 1, 1, 1, 1.0, 0.02).unwrap();
        ad.a_mut().data_mut()[0] = a;
        ad.b_mut().data_mut()[0] = b;
        layer.adapter = Some(ad);
        LoraLinearModel::new(vec![layer], LossKind::Mse).unwrap()
    }

    #[test]
    fn fresh_adapters_do_not_change_forward() {
        let mut rng = SeededRng::new(9);
        let frozen = DenseMatrix::gaussian(&mut rng, 4, 6, 0.5).unwrap();
        let base =
            LoraLinearModel::new(vec![Layer::frozen(frozen, Activation::Tanh)], LossKind::Mse)
                .unwrap();
        let adapted = base.clone().with_adapters(&mut rng, 2, 16.0, 0.02).unwrap();
        let x = DenseMatrix::gaussian(&mut rng, 3, 6, 1.0).unwrap();
        assert_eq!(base.forward(&x).unwrap(), adapted.forward(&x).unwrap());
    }

    #[test]
    fn scalar_forward_hand_example() {
        // W=1, A=2, B=0, alpha/r=1, x=1 -> output 1.
        let m = scalar_model(1.0, 2.0, 0.0);
        let x = DenseMatrix::from_rows(&[&[1.0]]);
        let out = m.forward(&x).unwrap();
        assert_eq!(out.get(0, 0), 1.0);
    }

    #[test]
    fn scalar_backward_hand_example() {
        // pred=1, target=0 => G=1, grad_b = scale*G*a = 2, grad_a = scale*b^T*G = 0.
        let m = scalar_model(1.0, 2.0, 0.0);
        let batch = Batch::new(
            DenseMatrix::from_rows(&[&[1.0]]),
            Targets::Values(DenseMatrix::from_rows(&[&[0.0]])),
        )
        .unwrap();
        let (loss, grads) = m.backward(&batch).unwrap();
        assert_eq!(loss, 0.5);
        assert_eq!(grads.layers.len(), 1);
        assert_eq!(grads.layers[0].grad_b.get(0, 0), 2.0);
        assert_eq!(grads.layers[0].grad_a.get(0, 0), 0.0);
    }

    #[test]
    fn zero_b_forces_zero_grad_a() {
        let mut rng = SeededRng::new(21);
        let frozen1 = DenseMatrix::gaussian(&mut rng, 5, 6, 0.5).unwrap();
        let frozen2 = DenseMatrix::gaussian(&mut rng, 3, 5, 0.5).unwrap();
        let model = LoraLinearModel::new(
            vec![
                Layer::frozen(frozen1, Activation::Tanh),
                Layer::frozen(frozen2, Activation::Identity),
            ],
            LossKind::Mse,
        )
        .unwrap()
        .with_adapters(&mut rng, 2, 16.0, 0.02)
        .unwrap();
        let batch = Batch::new(
            DenseMatrix::gaussian(&mut rng, 4, 6, 1.0).unwrap(),
            Targets::Values(DenseMatrix::gaussian(&mut rng, 4, 3, 1.0).unwrap()),
        )
        .unwrap();
        let (_, grads) = model.backward(&batch).unwrap();
        for g in &grads.layers {
            assert!(g.grad_a.is_zero(), "grad_a must vanish while b is zero");
            assert!(!g.grad_b.is_zero(), "grad_b should be nonzero generically");
        }
    }

    #[test]
    fn mse_loss_zero_when_exact() {
        let m = scalar_model(1.0, 0.5, 0.0);
        let batch = Batch::new(
            DenseMatrix::from_rows(&[&[2.0]]),
            Targets::Values(DenseMatrix::from_rows(&[&[2.0]])),
        )
        .unwrap();
        assert_eq!(m.loss(&batch).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let mut rng = SeededRng::new(3);
        let frozen = DenseMatrix::zeros(5, 4);
        let model = LoraLinearModel::new(
            vec![Layer::frozen(frozen, Activation::Identity)],
            LossKind::SoftmaxCrossEntropy,
        )
        .unwrap();
        let batch = Batch::new(
            DenseMatrix::gaussian(&mut rng, 6, 4, 1.0).unwrap(),
            Targets::Classes(vec![0, 1, 2, 3, 4, 0]),
        )
        .unwrap();
        // Zero weights give uniform logits, so the loss is ln(C).
        let loss = model.loss(&batch).unwrap();
        assert!((loss - 5.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn class_out_of_range_is_reported() {
        let frozen = DenseMatrix::zeros(3, 4);
        let model = LoraLinearModel::new(
            vec![Layer::frozen(frozen, Activation::Identity)],
            LossKind::SoftmaxCrossEntropy,
        )
        .unwrap();
        let batch = Batch::new(
            DenseMatrix::zeros(2, 4)
                .add_scaled(&DenseMatrix::zeros(2, 4), 0.0)
                .unwrap(),
            Targets::Classes(vec![0, 3]),
        )
        .unwrap();
        let err = model.loss(&batch).unwrap_err();
        assert!(matches!(
            err,
            ModelError::ClassOutOfRange {
                row: 1,
                class: 3,
                classes: 3
            }
        ));
    }

    #[test]
    fn layer_composition_checked() {
        let l1 = Layer::frozen(DenseMatrix::zeros(4, 6), Activation::Identity);
        let l2 = Layer::frozen(DenseMatrix::zeros(3, 5), Activation::Identity);
        let err = LoraLinearModel::new(vec![l1, l2], LossKind::Mse).unwrap_err();
        assert!(matches!(err, ModelError::LayerCompose { layer: 0, .. }));
    }

    #[test]
    fn merged_equals_without_adapters_after_zero_delta() {
        let mut rng = SeededRng::new(14);
        let model = LoraLinearModel::new(
            vec![Layer::frozen(
                DenseMatrix::gaussian(&mut rng, 4, 4, 0.3).unwrap(),
                Activation::Identity,
            )],
            LossKind::Mse,
        )
        .unwrap()
        .with_adapters(&mut rng, 2, 8.0, 0.02)
        .unwrap();
        // Fresh adapters have zero delta, so merging changes nothing.
        let merged = model.merged().unwrap();
        let plain = model.without_adapters();
        assert_eq!(merged, plain);
    }
}
