//! Analytic adapter gradients against central finite differences on a
//! random two-layer model, for both losses.

use cola::linalg::{DenseMatrix, SeededRng};
use cola::model::{Activation, Batch, Layer, LoraLinearModel, LossKind, Targets};

fn check(loss: LossKind) {
    let mut rng = SeededRng::new(7);
    let mut model = LoraLinearModel::new(
        vec![
            Layer::frozen(
                DenseMatrix::gaussian(&mut rng, 5, 6, 0.6).unwrap(),
                Activation::Tanh,
            ),
            Layer::frozen(
                DenseMatrix::gaussian(&mut rng, 4, 5, 0.6).unwrap(),
                Activation::Identity,
            ),
        ],
        loss,
    )
    .unwrap()
    .with_adapters(&mut rng, 2, 16.0, 0.02)
    .unwrap();
    for layer in model.adapted_layers() {
        for x in model.adapter_mut(layer).unwrap().b_mut().data_mut() {
            *x = 0.05 * rng.next_gaussian();
        }
    }

    let inputs = DenseMatrix::gaussian(&mut rng, 4, 6, 1.0).unwrap();
    let targets = match loss {
        LossKind::Mse => Targets::Values(DenseMatrix::gaussian(&mut rng, 4, 4, 1.0).unwrap()),
        LossKind::SoftmaxCrossEntropy => Targets::Classes(vec![0, 3, 1, 2]),
    };
    let batch = Batch::new(inputs, targets).unwrap();

    let (value, grads) = model.backward(&batch).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for g in &grads.layers {
        for (which, grad) in [(0usize, &g.grad_a), (1, &g.grad_b)] {
            for idx in 0..grad.data().len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                for (m, sign) in [(&mut plus, 1.0), (&mut minus, -1.0)] {
                    let ad = m.adapter_mut(g.layer).unwrap();
                    let f = if which == 0 { ad.a_mut() } else { ad.b_mut() };
                    f.data_mut()[idx] += sign * h;
                }
                let numeric =
                    (plus.loss(&batch).unwrap() - minus.loss(&batch).unwrap()) / (2.0 * h);
                let analytic = grad.data()[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    println!("{loss:?}: loss {value:.6}, {checked} entries checked, max rel err {worst:.3e}");
}

fn main() {
    check(LossKind::Mse);
    check(LossKind::SoftmaxCrossEntropy);
}
