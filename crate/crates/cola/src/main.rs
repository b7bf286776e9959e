//! Thin command-line entry: dispatches into the library and prints results.

use clap::{Args, Parser, Subcommand};
use cola::cola::{training_flops, ColaSchedule};
use cola::frankwolfe::objectives::{
    LinearForm, MaskedCompletion, QuadraticDistance, WithGradientNoise,
};
use cola::frankwolfe::{
    run_fw, verify_theorem_bound, FwConfig, FwObjective, StepMode, TraceNormBall,
};
use cola::harness::config::FwObjectiveKind;
use cola::harness::experiment::run_experiment_with_artifacts;
use cola::harness::report::{emit_artifacts, emit_results, write_fw_trace, OutputFormat};
use cola::harness::task::{generate_completion, TaskKind, TaskSpec};
use cola::harness::{load_experiment_config, load_fw_config, selftest};
use cola::linalg::{DenseMatrix, SeededRng};
use cola::model::{LayerDims, ModelDims};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cola",
    about = "Chained low-rank adapter training and conditional-gradient experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Replace the config's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Redirect all outputs.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for the sweep.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment sweep from a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the conditional-gradient demo and verify the average-gap bound.
    FwDemo {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the training-cost ledger for a schedule.
    Flops {
        /// Total training epochs.
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        /// Knot epochs, comma separated (empty for the single-adapter baseline).
        #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "3")]
        knots: Vec<usize>,
        /// Rank per segment, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "8,8")]
        ranks: Vec<usize>,
        /// Output dimension of the adapted weight.
        #[arg(long, default_value_t = 64)]
        d: usize,
        /// Input dimension of the adapted weight.
        #[arg(long, default_value_t = 64)]
        k: usize,
        /// Identical adapted layers in the stack.
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 1000)]
        n_train: usize,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        /// Also print the rank step-down table over second ranks 8, 6, 4, 2.
        #[arg(long)]
        table: bool,
    },
    /// Run the built-in invariant battery.
    Selftest,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        Command::Run { config, overrides } => cmd_run(&config, &overrides),
        Command::FwDemo { config, overrides } => cmd_fw_demo(&config, &overrides),
        Command::Flops {
            epochs,
            knots,
            ranks,
            d,
            k,
            layers,
            n_train,
            batch_size,
            table,
        } => cmd_flops(
            epochs, knots, ranks, d, k, layers, n_train, batch_size, table,
        ),
        Command::Selftest => cmd_selftest(),
    }
}

fn cmd_run(config: &Path, overrides: &Overrides) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut cfg = load_experiment_config(config)?;
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(jobs) = overrides.jobs {
        cfg.jobs = jobs.max(1);
    }
    cfg.validate()?;

    let (output, artifacts) = run_experiment_with_artifacts(&cfg)?;
    emit_results(
        &output,
        &cfg,
        &cfg.output_dir,
        &[OutputFormat::Csv, OutputFormat::Json],
    )?;
    emit_artifacts(&artifacts, &output, &cfg.output_dir)?;

    println!(
        "wrote {} raw rows and {} best rows to {}",
        output.raw.len(),
        output.best.len(),
        cfg.output_dir.display()
    );
    for s in &output.summaries {
        println!(
            "{} {} [{}] {}: {:.6} +/- {:.6} (n={}) {}",
            s.task, s.method, s.aggregation, s.metric, s.mean, s.std, s.n, s.detail
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fw_demo(
    config: &Path,
    overrides: &Overrides,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut cfg = load_fw_config(config)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;

    let mut rng = SeededRng::new(cfg.seed);

    // Build the target/objective and its analytic constants.
    let (objective, ball, beta, m_bound): (Box<dyn FwObjective>, TraceNormBall, f64, f64) =
        match cfg.objective {
            FwObjectiveKind::Quadratic => {
                let p = DenseMatrix::gaussian(&mut rng, cfg.d, cfg.target_rank, 1.0)?;
                let q = DenseMatrix::gaussian(&mut rng, cfg.target_rank, cfg.k, 1.0)?;
                let raw = p.matmul(&q)?;
                let target = raw.scale(2.0 / raw.frobenius_norm());
                let radius = if cfg.radius > 0.0 {
                    cfg.radius
                } else {
                    2.0 * target.trace_norm(1e-10, 20_000)?
                };
                let ball = TraceNormBall::new(radius, cfg.d, cfg.k)?;
                let obj = QuadraticDistance {
                    target: target.clone(),
                };
                let sigma1 = target.top_singular_pair(1e-12, 20_000)?.sigma;
                let m = obj.max_over_ball(radius, sigma1);
                (Box::new(obj), ball, 1.0, m)
            }
            FwObjectiveKind::Linear => {
                let c = DenseMatrix::gaussian(&mut rng, cfg.d, cfg.k, 1.0)?;
                let ball = TraceNormBall::new(cfg.radius, cfg.d, cfg.k)?;
                // |<C, W>| <= sigma1(C) * radius over the ball.
                let sigma1 = c.top_singular_pair(1e-12, 20_000)?.sigma;
                let m = sigma1 * cfg.radius;
                (Box::new(LinearForm { c }), ball, 1.0, m)
            }
            FwObjectiveKind::Completion => {
                let spec = TaskSpec {
                    kind: TaskKind::MatrixCompletion,
                    d: cfg.d,
                    k: cfg.k,
                    n_train: ((cfg.d * cfg.k) as f64 * cfg.observed_fraction) as usize,
                    n_eval: (cfg.d * cfg.k) / 10,
                    n_test: 0,
                    seed: cfg.seed,
                    ..TaskSpec::teacher_student(cfg.d, cfg.k, cfg.target_rank)
                };
                let task = generate_completion(&spec)?;
                let radius = if cfg.radius > 0.0 {
                    cfg.radius
                } else {
                    task.suggested_radius
                };
                let ball = TraceNormBall::new(radius, cfg.d, cfg.k)?;
                let obj = MaskedCompletion {
                    target: task.target.clone(),
                    mask: task.train_mask.clone(),
                };
                // Safe bound: 0.5 (radius + ||target on mask||_F)^2.
                let mut masked = 0.0;
                for &(i, j) in &task.train_mask {
                    let v = task.target.get(i, j);
                    masked += v * v;
                }
                let m = 0.5 * (radius + masked.sqrt()).powi(2);
                (Box::new(obj), ball, 1.0, m)
            }
        };

    let step_mode = if cfg.step > 0.0 {
        StepMode::Custom(vec![cfg.step])
    } else {
        StepMode::Theorem
    };
    let fw_cfg = FwConfig {
        oracle_eps: cfg.oracle_eps,
        step_mode,
        ..FwConfig::theorem(cfg.horizon, beta, m_bound)
    };

    let trace = if cfg.noise_std > 0.0 {
        struct Boxed<'a>(&'a dyn FwObjective);
        impl FwObjective for Boxed<'_> {
            fn loss(&self, w: &DenseMatrix) -> f64 {
                self.0.loss(w)
            }
            fn gradient(&self, w: &DenseMatrix, rng: &mut SeededRng) -> DenseMatrix {
                self.0.gradient(w, rng)
            }
        }
        let noisy = WithGradientNoise {
            inner: Boxed(objective.as_ref()),
            std: cfg.noise_std,
        };
        run_fw(&noisy, &ball, &fw_cfg, None, &mut rng)?
    } else {
        run_fw(objective.as_ref(), &ball, &fw_cfg, None, &mut rng)?
    };

    write_fw_trace(&trace, &cfg.output_dir)?;
    let report = verify_theorem_bound(&trace, &fw_cfg, &ball);
    println!(
        "T={} beta={beta} M={m_bound:.6} D={} eps_cfg={} eps_cert={:.3e}",
        report.horizon,
        ball.diameter(),
        cfg.oracle_eps,
        trace.eps_certified_mean
    );
    println!(
        "average gap {:.6e} <= bound {:.6e}: {}",
        report.lhs,
        report.rhs,
        report.verdict()
    );
    println!(
        "final loss {:.6e}",
        trace.steps.last().map(|s| s.loss).unwrap_or(f64::NAN)
    );
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_flops(
    epochs: usize,
    knots: Vec<usize>,
    ranks: Vec<usize>,
    d: usize,
    k: usize,
    layers: usize,
    n_train: usize,
    batch_size: usize,
    table: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let dims = ModelDims {
        layers: (0..layers.max(1))
            .map(|_| LayerDims {
                out_dim: d,
                in_dim: k,
                adapted: true,
            })
            .collect(),
    };
    let schedule = ColaSchedule::new(epochs, knots.clone(), ranks.clone(), 16.0)?;
    let report = training_flops(&schedule, &dims, n_train, batch_size)?;
    println!("schedule {}", schedule.descriptor());
    println!("total training flops:  {:.6e}", report.total);
    println!(
        "saved vs fixed rank {}: {:.6e}",
        ranks[0], report.saved_vs_fixed_rank
    );

    if table {
        println!();
        println!("{:<24} {:>18} {:>18}", "schedule", "total", "saved");
        for r2 in [8usize, 6, 4, 2] {
            let knot = knots.first().copied().unwrap_or(epochs.div_ceil(2));
            let s = ColaSchedule::new(epochs, vec![knot], vec![ranks[0], r2], 16.0)?;
            let rep = training_flops(&s, &dims, n_train, batch_size)?;
            println!(
                "{:<24} {:>18.6e} {:>18.6e}",
                s.descriptor(),
                rep.total,
                rep.saved_vs_fixed_rank
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest() -> Result<ExitCode, Box<dyn std::error::Error>> {
    let results = selftest::run_selftests();
    let mut all_ok = true;
    for t in &results {
        let mark = if t.passed { "PASS" } else { "FAIL" };
        println!("{mark} {:<28} {}", t.name, t.detail);
        all_ok &= t.passed;
    }
    if all_ok {
        println!("selftest: {} checks passed", results.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
