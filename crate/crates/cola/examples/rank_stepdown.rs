//! Rank step-down ablation: first segment at rank 8, second segment at rank
//! 8/6/4/2. Lower second ranks cost fewer training flops; quality holds up
//! on a planted update whose tail the second segment cleans up.

use cola::cola::{run_cola, training_flops, ColaDataset, ColaSchedule, TrainParams};
use cola::harness::task::{generate_task, TaskSpec};
use cola::linalg::SeededRng;
use cola::optim::AdamWConfig;

fn main() {
    let spec = TaskSpec::teacher_student(64, 64, 8);
    let task = generate_task(&spec)
        .expect("task")
        .supervised()
        .expect("supervised");
    let data = ColaDataset {
        train: task.train.clone(),
        eval: task.eval.clone(),
    };

    println!(
        "{:<26} {:>14} {:>14} {:>14}",
        "schedule", "eval (5 seeds)", "flops", "saved"
    );
    for r2 in [8usize, 6, 4, 2] {
        let schedule = ColaSchedule::new(5, vec![3], vec![8, r2], 16.0).expect("schedule");
        let mut finals = Vec::new();
        let mut dims = None;
        for seed in 1..=5u64 {
            let mut rng = SeededRng::new(seed);
            let model = task
                .model
                .clone()
                .with_adapters(&mut rng, 8, 16.0, 0.02)
                .expect("adapters");
            dims = Some(model.dims());
            let params = TrainParams {
                adamw: AdamWConfig {
                    lr0: 1e-3,
                    ..AdamWConfig::default()
                },
                ..TrainParams::default()
            };
            let out = run_cola(model, &data, &schedule, params, &mut rng).expect("run");
            finals.push(out.trace.final_eval_loss().unwrap());
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let ledger =
            training_flops(&schedule, &dims.unwrap(), task.train.len(), 8).expect("ledger");
        println!(
            "{:<26} {:>14.6} {:>14.4e} {:>14.4e}",
            schedule.descriptor(),
            mean,
            ledger.total,
            ledger.saved_vs_fixed_rank
        );
    }
}
