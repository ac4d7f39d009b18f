use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locomo::pipeline::{self, Overrides, RunConfig, RunReport};
use locomo::Error;

#[derive(Parser)]
#[command(name = "locomo", version, about = "Two-stage legged locomotion training pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the config's seed list with one seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for logs, checkpoints and plots.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit wall-clock fields so reruns produce identical logs.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Reject any override of table constants.
    #[arg(long, global = true)]
    paper_repro: bool,
}

#[derive(Subcommand)]
enum Command {
    /// PPO with gait rewards on flat ground.
    TrainStage1,
    /// Record the experience dataset with a trained Stage-I policy.
    RecordExperience {
        /// Stage-I checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Dataset file to write.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Curriculum PPO with the configured reward mode.
    TrainStage2 {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Distill a Stage-II teacher into the recurrent student.
    Distill {
        /// Stage-II checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Tracking error of teacher and student per terrain type.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        student: Option<PathBuf>,
    },
    /// Render SVG charts from a run log.
    Plot {
        /// JSONL log to read.
        log: Option<PathBuf>,
    },
    /// Print the contents of an experience dataset.
    InspectDataset {
        dataset: Option<PathBuf>,
    },
}

fn load(common: &Common) -> locomo::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides { seed: common.seed, out: common.out.clone(), deterministic: common.deterministic, paper_repro: common.paper_repro });
    Ok(cfg)
}

fn set(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

fn report(r: &RunReport) {
    for o in &r.outcomes {
        let metrics: Vec<String> = o.metrics.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        let scale = o.style_scale.map(|s| format!(" x{s}")).unwrap_or_default();
        println!("seed {} {}{scale}: {}", o.seed, o.reward_mode.label(), metrics.join(" "));
        if let Some(a) = &o.artifact {
            println!("  wrote {}", a.display());
        }
    }
    println!("log: {}", r.log.display());
}

fn run(command: Command, common: &Common) -> locomo::Result<()> {
    let mut cfg = load(common)?;
    match command {
        Command::TrainStage1 => report(&pipeline::run_stage1(&cfg)?),
        Command::RecordExperience { checkpoint, dataset } => {
            set(&mut cfg.paths.checkpoint, checkpoint);
            set(&mut cfg.paths.dataset, dataset);
            report(&pipeline::run_record(&cfg)?);
        }
        Command::TrainStage2 { dataset } => {
            set(&mut cfg.paths.dataset, dataset);
            report(&pipeline::run_stage2(&cfg)?);
        }
        Command::Distill { checkpoint } => {
            set(&mut cfg.paths.checkpoint, checkpoint);
            report(&pipeline::run_distill(&cfg)?);
        }
        Command::Eval { checkpoint, student } => {
            set(&mut cfg.paths.checkpoint, checkpoint);
            set(&mut cfg.paths.student, student);
            report(&pipeline::run_eval(&cfg)?);
        }
        Command::Plot { log } => {
            set(&mut cfg.paths.log, log);
            report(&pipeline::run_plot(&cfg)?);
        }
        Command::InspectDataset { dataset } => {
            set(&mut cfg.paths.dataset, dataset);
            let (r, text) = pipeline::run_inspect(&cfg)?;
            print!("{text}");
            println!("log: {}", r.log.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
