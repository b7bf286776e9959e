//! Fast invariant battery behind `cola selftest`: exercises the load-bearing
//! identities of every subsystem in a few seconds and reports one line each.

use crate::cola::{
    extend_chain, relative_gain, run_cola, tie_knot, training_flops, ColaDataset, ColaSchedule,
    TrainParams,
};
use crate::frankwolfe::objectives::QuadraticDistance;
use crate::frankwolfe::{run_fw, verify_theorem_bound, FwConfig, TraceNormBall};
use crate::linalg::{DenseMatrix, SeededRng};
use crate::model::{Activation, Batch, Layer, LoraLinearModel, LossKind, Targets};
use crate::optim::{AdamWConfig, AdamWState};

#[derive(Clone, Debug)]
pub struct SelfTest {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> SelfTest {
    SelfTest {
        name,
        passed,
        detail,
    }
}

fn random_model(rng: &mut SeededRng, rank: usize) -> LoraLinearModel {
    let l1 = Layer::frozen(
        DenseMatrix::gaussian(rng, 6, 8, 0.4).unwrap(),
        Activation::Tanh,
    );
    let l2 = Layer::frozen(
        DenseMatrix::gaussian(rng, 4, 6, 0.4).unwrap(),
        Activation::Identity,
    );
    LoraLinearModel::new(vec![l1, l2], LossKind::Mse)
        .unwrap()
        .with_adapters(rng, rank, 16.0, 0.02)
        .unwrap()
}

fn randomize_adapters(model: &mut LoraLinearModel, rng: &mut SeededRng) {
    for layer in model.adapted_layers() {
        let ad = model.adapter_mut(layer).unwrap();
        for x in ad.b_mut().data_mut() {
            *x = 0.05 * rng.next_gaussian();
        }
    }
}

fn merge_equivalence() -> SelfTest {
    let mut rng = SeededRng::new(101);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut model = random_model(&mut rng, 2);
        randomize_adapters(&mut model, &mut rng);
        let merged = model.merged().unwrap();
        let x = DenseMatrix::gaussian(&mut rng, 5, 8, 1.0).unwrap();
        let a = model.forward(&x).unwrap();
        let b = merged.forward(&x).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            worst = worst.max((p - q).abs());
        }
    }
    check(
        "merge_equivalence",
        worst <= 1e-10,
        format!("max |diff| = {worst:.3e}"),
    )
}

fn zero_start_identity() -> SelfTest {
    let mut rng = SeededRng::new(102);
    let model = random_model(&mut rng, 2);
    let frozen = model.without_adapters();
    let batch = Batch::new(
        DenseMatrix::gaussian(&mut rng, 6, 8, 1.0).unwrap(),
        Targets::Values(DenseMatrix::gaussian(&mut rng, 6, 4, 1.0).unwrap()),
    )
    .unwrap();
    let a = model.loss(&batch).unwrap();
    let b = frozen.loss(&batch).unwrap();
    check(
        "zero_start_identity",
        a.to_bits() == b.to_bits(),
        format!("adapted {a} vs frozen {b}"),
    )
}

fn gradient_spot_check() -> SelfTest {
    let mut rng = SeededRng::new(103);
    let mut model = random_model(&mut rng, 2);
    randomize_adapters(&mut model, &mut rng);
    let batch = Batch::new(
        DenseMatrix::gaussian(&mut rng, 4, 8, 1.0).unwrap(),
        Targets::Values(DenseMatrix::gaussian(&mut rng, 4, 4, 1.0).unwrap()),
    )
    .unwrap();
    let (_, grads) = model.backward(&batch).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for g in &grads.layers {
        for idx in [0usize, g.grad_a.data().len() - 1] {
            let analytic = g.grad_a.data()[idx];
            let mut plus = model.clone();
            plus.adapter_mut(g.layer).unwrap().a_mut().data_mut()[idx] += h;
            let mut minus = model.clone();
            minus.adapter_mut(g.layer).unwrap().a_mut().data_mut()[idx] -= h;
            let numeric = (plus.loss(&batch).unwrap() - minus.loss(&batch).unwrap()) / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((analytic - numeric).abs() / scale);
        }
    }
    check(
        "gradient_finite_difference",
        worst <= 1e-5,
        format!("max rel err = {worst:.3e}"),
    )
}

fn knot_transparency() -> SelfTest {
    let mut rng = SeededRng::new(104);
    let mut model = random_model(&mut rng, 2);
    randomize_adapters(&mut model, &mut rng);
    let mut opt = AdamWState::new(&model, AdamWConfig::default()).unwrap();
    let batch = Batch::new(
        DenseMatrix::gaussian(&mut rng, 6, 8, 1.0).unwrap(),
        Targets::Values(DenseMatrix::gaussian(&mut rng, 6, 4, 1.0).unwrap()),
    )
    .unwrap();
    let before = model.loss(&batch).unwrap();
    tie_knot(&mut model).unwrap();
    extend_chain(&mut model, &mut opt, &mut rng, 2, 0.02).unwrap();
    let after = model.loss(&batch).unwrap();
    let moments = opt.max_abs_moment();
    check(
        "knot_transparency",
        (before - after).abs() <= 1e-10 && moments == 0.0,
        format!("loss {before} -> {after}, max moment {moments}"),
    )
}

fn chain_run_smoke() -> SelfTest {
    let mut rng = SeededRng::new(105);
    let w = DenseMatrix::gaussian(&mut rng, 5, 6, 0.5).unwrap();
    let make = |rng: &mut SeededRng, n: usize| {
        let x = DenseMatrix::gaussian(rng, n, 6, 1.0).unwrap();
        let y = x.matmul_transposed(&w).unwrap();
        Batch::new(x, Targets::Values(y)).unwrap()
    };
    let data = ColaDataset {
        train: make(&mut rng, 32),
        eval: make(&mut rng, 16),
    };
    let model = LoraLinearModel::new(
        vec![Layer::frozen(
            DenseMatrix::gaussian(&mut rng, 5, 6, 0.1).unwrap(),
            Activation::Identity,
        )],
        LossKind::Mse,
    )
    .unwrap()
    .with_adapters(&mut rng, 2, 16.0, 0.02)
    .unwrap();
    let schedule = ColaSchedule::new(3, vec![1, 2], vec![2, 2, 2], 16.0).unwrap();
    let mut run_rng = SeededRng::new(1);
    match run_cola(
        model,
        &data,
        &schedule,
        TrainParams::default(),
        &mut run_rng,
    ) {
        Ok(out) => {
            let knots_ok = out.trace.knot_events.len() == 2;
            let finite = out.trace.steps.iter().all(|s| s.train_loss.is_finite());
            check(
                "chain_run",
                knots_ok && finite,
                format!(
                    "{} steps, {} knots",
                    out.trace.steps.len(),
                    out.trace.knot_events.len()
                ),
            )
        }
        Err(e) => check("chain_run", false, e.to_string()),
    }
}

fn flops_linearity() -> SelfTest {
    let dims = crate::model::ModelDims {
        layers: vec![crate::model::LayerDims {
            out_dim: 64,
            in_dim: 64,
            adapted: true,
        }],
    };
    let saved = |r2: usize| {
        let s = ColaSchedule::new(5, vec![3], vec![8, r2], 16.0).unwrap();
        training_flops(&s, &dims, 1000, 8)
            .unwrap()
            .saved_vs_fixed_rank
    };
    let ok = saved(8) == 0.0 && saved(4) == 2.0 * saved(6) && saved(2) == 3.0 * saved(6);
    check(
        "flops_ledger",
        ok,
        format!(
            "saved(6)={}, saved(4)={}, saved(2)={}",
            saved(6),
            saved(4),
            saved(2)
        ),
    )
}

fn fw_bound_smoke() -> SelfTest {
    let mut rng = SeededRng::new(106);
    let dims = 10;
    let target = {
        let p = DenseMatrix::gaussian(&mut rng, dims, 3, 1.0).unwrap();
        let q = DenseMatrix::gaussian(&mut rng, 3, dims, 1.0).unwrap();
        let raw = p.matmul(&q).unwrap();
        raw.scale(1.0 / raw.frobenius_norm())
    };
    let radius = 2.0 * target.trace_norm(1e-10, 20_000).unwrap();
    let ball = TraceNormBall::new(radius, dims, dims).unwrap();
    let obj = QuadraticDistance {
        target: target.clone(),
    };
    let sigma1 = target.top_singular_pair(1e-12, 20_000).unwrap().sigma;
    let m_bound = obj.max_over_ball(radius, sigma1);
    let cfg = FwConfig::theorem(2000, 1.0, m_bound);
    match run_fw(&obj, &ball, &cfg, None, &mut rng) {
        Ok(trace) => {
            let report = verify_theorem_bound(&trace, &cfg, &ball);
            check(
                "fw_bound",
                report.passed,
                format!("avg gap {:.4e} <= {:.4e}", report.lhs, report.rhs),
            )
        }
        Err(e) => check("fw_bound", false, e.to_string()),
    }
}

fn relative_gain_fixtures() -> SelfTest {
    let pairs = [
        (56.53, 60.19, 6.47),
        (93.16, 93.32, 0.17),
        (70.70, 72.08, 1.95),
        (72.49, 74.15, 2.29),
    ];
    let mut worst = 0.0f64;
    for (base, ours, expect) in pairs {
        let got = relative_gain(base, ours).unwrap();
        worst = worst.max((got - expect).abs());
    }
    check(
        "relative_gain",
        worst <= 0.01,
        format!("max |diff| = {worst:.4}"),
    )
}

fn determinism_micro() -> SelfTest {
    let stream = |n: usize| {
        let mut rng = SeededRng::new(7777);
        (0..n)
            .map(|_| rng.next_gaussian().to_bits())
            .collect::<Vec<_>>()
    };
    check(
        "seeded_determinism",
        stream(256) == stream(256),
        "256 draws bit-compared".into(),
    )
}

/// Run the whole battery.
pub fn run_selftests() -> Vec<SelfTest> {
    vec![
        determinism_micro(),
        merge_equivalence(),
        zero_start_identity(),
        gradient_spot_check(),
        knot_transparency(),
        chain_run_smoke(),
        flops_linearity(),
        fw_bound_smoke(),
        relative_gain_fixtures(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn battery_is_green() {
        for t in super::run_selftests() {
            assert!(t.passed, "{}: {}", t.name, t.detail);
        }
    }
}
