use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use teso::bench::run_suite;
use teso::config::ExperimentConfig;
use teso::objective::{mean_std, sample_replications, Candidate};
use teso::optimizer::run;
use teso::output;
use teso::queue::{QueueModel, WaitMode};
use teso::{Error, Result, Stream};

#[derive(Parser)]
#[command(name = "teso", version, about = "Tabu/elite-memory search for noisy simulation optimization")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum parallel macro-replications.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides `suite.output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Waiting-time measure: `queue` (excludes service) or `sojourn`.
    #[arg(long, global = true)]
    wait_mode: Option<WaitMode>,
    /// Parameter override `section.key=value`, e.g. `teso.trials=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization and write its trial trace.
    Optimize,
    /// Run the four-algorithm ablation suite.
    Bench,
    /// Tabulate the closed-form objective on a grid.
    Oracle(OracleArgs),
    /// Replicate the queue simulation at one service rate.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    servers: Option<u32>,
    #[arg(long)]
    cost: Option<f64>,
    #[arg(long)]
    mu_min: Option<f64>,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    /// Query a single service rate instead of a grid.
    #[arg(long)]
    mu: Option<f64>,
    /// Print only the argmin/min lines.
    #[arg(long)]
    summary_only: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
}


fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load_with_overrides(common.config.as_deref(), &common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(jobs) = common.jobs {
        cfg.suite.jobs = jobs;
    }
    if let Some(out) = &common.out {
        cfg.suite.output_dir = out.clone();
    }
    if let Some(mode) = common.wait_mode {
        cfg.queue.wait_mode = mode;
    }
    Ok(cfg)
}

fn optimize(cfg: &ExperimentConfig) -> Result<()> {
    let model = &cfg.queue;
    let result = run(&cfg.teso, model, &model.decision_space())?;
    let dir = &cfg.suite.output_dir;
    output::ensure_dir(dir)?;
    let mut buf = Vec::new();
    output::write_trace(&mut buf, &result)?;
    let trace = dir.join("trace.csv");
    output::write_file(&trace, &buf)?;
    output::write_file(&dir.join("config.toml"), cfg.to_toml_string().as_bytes())?;
    println!("seed = {}", cfg.seed);
    println!("x_best = {}", result.x_best.first());
    println!("f_best = {}", result.f_best);
    println!("trials_used = {}", result.trials_used);
    println!("evaluations_used = {}", result.evaluations_used);
    println!("terminated_early = {}", result.terminated_early);
    println!("trace = {}", trace.display());
    Ok(())
}

fn bench(cfg: &ExperimentConfig) -> Result<()> {
    let model = &cfg.queue;
    let summary = run_suite(&cfg.algorithm_specs(), model, &model.decision_space(), &cfg.suite_options())?;
    let dir = &cfg.suite.output_dir;
    let files = output::write_suite(dir, &summary)?;
    output::write_file(&dir.join("config.toml"), cfg.to_toml_string().as_bytes())?;
    println!("seed = {}", cfg.seed);
    print!("{}", output::summary_table(&summary));
    for a in &summary.algorithms {
        for (m, msg) in &a.failures {
            eprintln!("warning: {} macro {m} failed: {msg}", a.variant.name());
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn oracle(cfg: &ExperimentConfig, args: &OracleArgs) -> Result<()> {
    let model = QueueModel {
        lambda: args.lambda.unwrap_or(cfg.queue.lambda),
        servers: args.servers.unwrap_or(cfg.queue.servers),
        cost: args.cost.unwrap_or(cfg.queue.cost),
        ..cfg.queue.clone()
    };
    if let Some(mu) = args.mu {
        println!("mu,queue_wait,objective");
        println!("{mu},{},{}", model.analytic_queue_wait(mu)?, model.analytic_objective(mu)?);
        return Ok(());
    }
    let lo = args.mu_min.unwrap_or(model.mu_lower);
    let hi = args.mu_max.unwrap_or(model.mu_upper);
    let grid = model.analytic_grid(lo, hi, args.step)?;
    println!("# wait_mode = {}", model.wait_mode.as_str());
    if !args.summary_only {
        println!("mu,objective");
        for (mu, j) in &grid.points {
            println!("{mu},{j}");
        }
    }
    println!("# argmin = {}", output::sig6(grid.argmin));
    println!("# min = {}", output::sig6(grid.min));
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, args: &SimulateArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::InvalidParameter("--reps must be at least 1".into()));
    }
    let model = &cfg.queue;
    model.check_stable(args.mu)?;
    let sim = QueueModel {
        mu_lower: model.mu_lower.min(args.mu),
        mu_upper: model.mu_upper.max(args.mu),
        ..model.clone()
    };
    let stream = Stream::new(cfg.seed);
    let xs = sample_replications(&WaitOnly(&sim), &Candidate::scalar(args.mu), stream, 0..args.reps)?;
    let (mean, sd) = mean_std(&xs);
    let analytic = match sim.wait_mode {
        WaitMode::QueueWait => sim.analytic_queue_wait(args.mu)?,
        WaitMode::Sojourn => sim.analytic_queue_wait(args.mu)? + 1.0 / args.mu,
    };
    println!("seed = {}", cfg.seed);
    println!("mu = {}", args.mu);
    println!("reps = {}", args.reps);
    println!("mean_wait = {mean}");
    println!("std = {sd}");
    println!("se = {}", sd / (args.reps as f64).sqrt());
    println!("analytic_wait = {analytic}");
    Ok(())
}

/// Simulated wait without the cost term.
struct WaitOnly<'a>(&'a QueueModel);

impl teso::StochasticObjective for WaitOnly<'_> {
    fn sample(&self, x: &Candidate, stream: Stream) -> Result<f64> {
        self.0.simulate_wait(x.first(), stream)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli.common).and_then(|cfg| match &cli.command {
        Command::Optimize => optimize(&cfg),
        Command::Bench => bench(&cfg),
        Command::Oracle(a) => oracle(&cfg, a),
        Command::Simulate(a) => simulate(&cfg, a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
