//! Chain-length ablation: train chains of length 1, 2, and 3 on the
//! teacher-student task at equal epoch budget and report mean/std of the
//! final eval loss over five seeds. Longer chains accumulate rank past a
//! single adapter's capacity, so the mean loss should fall with length.
//!
//! Run with `cargo run --example chain_length_trend [lr]`.

use cola::cola::{run_cola, ColaDataset, ColaSchedule, TrainParams};
use cola::harness::task::{generate_task, TaskSpec};
use cola::linalg::SeededRng;
use cola::optim::AdamWConfig;

fn main() {
    let lr: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-3);

    let spec = TaskSpec::teacher_student(64, 64, 8);
    let task = generate_task(&spec)
        .expect("task")
        .supervised()
        .expect("supervised");
    let data = ColaDataset {
        train: task.train.clone(),
        eval: task.eval.clone(),
    };

    let configs: Vec<(usize, ColaSchedule)> = vec![
        (1, ColaSchedule::baseline(5, 2, 16.0).unwrap()),
        (2, ColaSchedule::new(5, vec![3], vec![2, 2], 16.0).unwrap()),
        (
            3,
            ColaSchedule::new(5, vec![2, 4], vec![2, 2, 2], 16.0).unwrap(),
        ),
        (
            4,
            ColaSchedule::new(5, vec![2, 3, 4], vec![2, 2, 2, 2], 16.0).unwrap(),
        ),
    ];

    println!("teacher-student 64x64, planted rank 8, adapter rank 2, lr {lr}");
    println!(
        "{:<7} {:>12} {:>12}   per-seed final eval loss",
        "length", "mean", "std"
    );
    for (len, schedule) in &configs {
        let mut finals = Vec::new();
        for seed in 1..=5u64 {
            let mut rng = SeededRng::new(seed);
            let model = task
                .model
                .clone()
                .with_adapters(&mut rng, schedule.rank_per_segment[0], schedule.alpha, 0.02)
                .expect("adapters");
            let params = TrainParams {
                adamw: AdamWConfig {
                    lr0: lr,
                    ..AdamWConfig::default()
                },
                batch_size: 8,
                ..TrainParams::default()
            };
            let out = run_cola(model, &data, schedule, params, &mut rng).expect("run");
            finals.push(out.trace.final_eval_loss().expect("epochs recorded"));
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        let var =
            finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (finals.len() - 1) as f64;
        let detail: Vec<String> = finals.iter().map(|v| format!("{v:.5}")).collect();
        println!(
            "{:<7} {:>12.6} {:>12.6}   [{}]",
            len,
            mean,
            var.sqrt(),
            detail.join(" ")
        );
    }
}
