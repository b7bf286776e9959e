//! Full harness pipeline from code: build a config, run the seed x lr
//! sweep with the single-adapter baseline alongside, and print where the
//! result files land.

use cola::harness::report::{emit_results, OutputFormat};
use cola::harness::run_experiment;

fn main() {
    let out_dir = std::env::temp_dir().join("cola_sweep_example");
    let toml = format!(
        r#"
            method = "cola"
            seeds = [1, 2, 3]
            lr_grid = [1e-3, 5e-4]
            batch_size = 8
            jobs = 2
            output_dir = "{}"
            compare_with_baseline = true

            [task]
            kind = "teacher_student"
            d = 64
            k = 64
            target_delta_rank = 8
            n_train = 1000
            n_eval = 500
            n_test = 500
            seed = 5

            [schedule]
            total_epochs = 5
            knots = [2, 4]
            ranks = [2, 2, 2]
        "#,
        out_dir.display()
    );
    let cfg: cola::harness::ExperimentConfig = toml::from_str(&toml).expect("config");
    cfg.validate().expect("valid");

    let output = run_experiment(&cfg).expect("sweep");
    emit_results(
        &output,
        &cfg,
        &cfg.output_dir,
        &[OutputFormat::Csv, OutputFormat::Json],
    )
    .expect("emit");

    println!(
        "{} raw rows, {} best rows -> {}",
        output.raw.len(),
        output.best.len(),
        out_dir.display()
    );
    for s in &output.summaries {
        println!(
            "{:<14} {:<24} {}: {:.6} +/- {:.6} (n={})",
            s.method, s.aggregation, s.metric, s.mean, s.std, s.n
        );
    }
}
