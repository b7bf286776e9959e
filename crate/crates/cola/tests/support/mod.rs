//! Shared test oracles, independent of the library's computation paths:
//! a one-sided Jacobi SVD, central finite differences, and a scalar AdamW
//! reference loop.

#![allow(dead_code)]

use cola::linalg::{DenseMatrix, SeededRng};
use cola::model::{Activation, Batch, Layer, LoraLinearModel, LossKind, Targets};

/// Full singular value decomposition by one-sided Jacobi rotations.
/// Returns singular values in descending order with matching left/right
/// singular vectors as columns.
pub fn jacobi_svd(m: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    if m.rows() < m.cols() {
        let (s, v, u) = jacobi_svd(&m.transpose());
        return (s, u, v);
    }
    let rows = m.rows();
    let n = m.cols();
    // Work on columns of A; accumulate right rotations in V.
    let mut u: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..rows).map(|i| m.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _sweep in 0..120 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = dot(&u[i], &u[i]);
                let b = dot(&u[j], &u[j]);
                let c = dot(&u[i], &u[j]);
                if c.abs() <= 1e-30 || c.abs() <= 1e-15 * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..rows {
                    let (ui, uj) = (u[i][r], u[j][r]);
                    u[i][r] = cs * ui - sn * uj;
                    u[j][r] = sn * ui + cs * uj;
                }
                for r in 0..n {
                    let (vi, vj) = (v[i][r], v[j][r]);
                    v[i][r] = cs * vi - sn * vj;
                    v[j][r] = sn * vi + cs * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut triples: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..n)
        .map(|j| {
            let sigma = dot(&u[j], &u[j]).sqrt();
            let uc = if sigma > 0.0 {
                u[j].iter().map(|x| x / sigma).collect()
            } else {
                u[j].clone()
            };
            (sigma, uc, v[j].clone())
        })
        .collect();
    triples.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));
    let svs = triples.iter().map(|t| t.0).collect();
    let us = triples.iter().map(|t| t.1.clone()).collect();
    let vs = triples.into_iter().map(|t| t.2).collect();
    (svs, us, vs)
}

pub fn jacobi_singular_values(m: &DenseMatrix) -> Vec<f64> {
    jacobi_svd(m).0
}

/// Scale-floored relative error used by the gradient checks: exact relative
/// error for entries of typical size, absolute error 1e-3-scaled below it.
pub fn scaled_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Max scaled relative error between analytic adapter gradients and central
/// finite differences with the given step.
pub fn finite_diff_max_err(model: &LoraLinearModel, batch: &Batch, h: f64) -> f64 {
    let (_, grads) = model.backward(batch).expect("backward");
    let mut worst = 0.0f64;
    for g in &grads.layers {
        for (which, grad) in [(0, &g.grad_a), (1, &g.grad_b)] {
            for idx in 0..grad.data().len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                {
                    let ad = plus.adapter_mut(g.layer).unwrap();
                    let m = if which == 0 { ad.a_mut() } else { ad.b_mut() };
                    m.data_mut()[idx] += h;
                }
                {
                    let ad = minus.adapter_mut(g.layer).unwrap();
                    let m = if which == 0 { ad.a_mut() } else { ad.b_mut() };
                    m.data_mut()[idx] -= h;
                }
                let numeric = (plus.loss(batch).unwrap() - minus.loss(batch).unwrap()) / (2.0 * h);
                worst = worst.max(scaled_rel_err(grad.data()[idx], numeric));
            }
        }
    }
    worst
}

/// Independently coded scalar AdamW trajectory.
pub fn reference_adamw_scalar(
    p0: f64,
    grads: &[f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
) -> f64 {
    let mut p = p0;
    let mut m = 0.0;
    let mut v = 0.0;
    for (i, &g) in grads.iter().enumerate() {
        let t = (i + 1) as i32;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        let m_hat = m / (1.0 - beta1.powi(t));
        let v_hat = v / (1.0 - beta2.powi(t));
        p -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * p);
    }
    p
}

/// Random two-layer model with adapters everywhere. When `activation` has a
/// kink (relu), inputs/weights are redrawn until every pre-activation is
/// well away from it so finite differences stay valid.
pub fn random_two_layer(
    rng: &mut SeededRng,
    loss: LossKind,
    activation: Activation,
) -> (LoraLinearModel, Batch) {
    let (n, k, h, d) = (4usize, 6usize, 5usize, 4usize);
    loop {
        let w1 = DenseMatrix::gaussian(rng, h, k, 0.6).unwrap();
        let w2 = DenseMatrix::gaussian(rng, d, h, 0.6).unwrap();
        let mut model = LoraLinearModel::new(
            vec![
                Layer::frozen(w1, activation),
                Layer::frozen(w2, Activation::Identity),
            ],
            loss,
        )
        .unwrap()
        .with_adapters(rng, 2, 16.0, 0.02)
        .unwrap();
        // Give the adapters nonzero mass so both factors get exercised.
        for layer in model.adapted_layers() {
            let ad = model.adapter_mut(layer).unwrap();
            for x in ad.b_mut().data_mut() {
                *x = 0.05 * rng.next_gaussian();
            }
        }
        let inputs = DenseMatrix::gaussian(rng, n, k, 1.0).unwrap();
        let targets = match loss {
            LossKind::Mse => Targets::Values(DenseMatrix::gaussian(rng, n, d, 1.0).unwrap()),
            LossKind::SoftmaxCrossEntropy => {
                Targets::Classes((0..n).map(|_| rng.next_below(d as u64) as usize).collect())
            }
        };
        let batch = Batch::new(inputs, targets).unwrap();
        if activation == Activation::Relu {
            // Pre-activations of layer 1 must clear the kink by a margin.
            let pre = batch
                .inputs
                .matmul_transposed(&model.layers()[0].frozen)
                .unwrap();
            if pre.data().iter().any(|x| x.abs() < 1e-3) {
                continue;
            }
        }
        return (model, batch);
    }
}

/// Mean and n-1 sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
