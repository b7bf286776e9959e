//! One chained training run, end to end: watch the eval loss fall across
//! segments and inspect the knot events and the flop ledger.

use cola::cola::{run_cola, training_flops, ColaDataset, ColaSchedule, TrainParams};
use cola::harness::task::{generate_task, TaskSpec};
use cola::linalg::SeededRng;

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

    // Three segments of rank 2 across five epochs, knots after epochs 2 and 4.
    let schedule = ColaSchedule::new(5, vec![2, 4], vec![2, 2, 2], 16.0).expect("schedule");
    let mut rng = SeededRng::new(1);
    let model = task
        .model
        .clone()
        .with_adapters(&mut rng, 2, 16.0, 0.02)
        .expect("adapters");

    let out = run_cola(model, &data, &schedule, TrainParams::default(), &mut rng).expect("run");

    println!("epoch  eval_loss");
    for e in &out.trace.epochs {
        println!("{:>5}  {:.6}", e.epoch, e.eval_loss);
    }
    println!();
    for (i, k) in out.trace.knot_events.iter().enumerate() {
        println!(
            "knot {} at step {}: merged delta with ||.||_F = {:.4}",
            i + 1,
            k.step,
            k.merged_delta_frobenius
        );
    }
    let ledger = training_flops(&schedule, &out.model.dims(), task.train.len(), 8).expect("ledger");
    println!();
    println!("flops (trace)  : {:.4e}", out.trace.flops_total);
    println!("flops (ledger) : {:.4e}", ledger.total);
}
