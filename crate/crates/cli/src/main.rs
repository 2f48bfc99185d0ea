use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medflow_cli::config::PipelineConfig;
use medflow_cli::stages::{run_all, run_stage, Stage};
use medflow_cli::validate::{validate_panel, ValidationInputs};
use medflow_cli::{io, CliError};

#[derive(Parser)]
#[command(name = "medflow", version, about = "Longitudinal interventional mediation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML pipeline configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed applied to every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic cohort (panel, baseline, outcome, residences).
    Simulate,
    /// k-nearest-neighbor shares and disadvantage scores per wave.
    Neighborhoods,
    /// Stabilized inverse probability weights.
    Weights,
    /// Outcome and mediator marginal structural models.
    Fit,
    /// Interventional direct and indirect effects with bootstrap intervals.
    Effects,
    /// Simulated unmeasured confounders.
    Sensitivity,
    /// Exact effects on discrete two-wave models versus the pipeline.
    Oracle,
    /// Tables and series from earlier outputs.
    Report,
    /// Every stage enabled in the config.
    All,
    /// Check input files and print the findings as JSON.
    Validate,
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let cfg = load_config(&cli.common)?;
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let stage = match cli.command {
        Command::Simulate => Stage::Simulate,
        Command::Neighborhoods => Stage::Neighborhoods,
        Command::Weights => Stage::Weights,
        Command::Fit => Stage::Fit,
        Command::Effects => Stage::Effects,
        Command::Sensitivity => Stage::Sensitivity,
        Command::Oracle => Stage::Oracle,
        Command::Report => Stage::Report,
        Command::All => {
            run_all(&cfg)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::Validate => {
            let optional = |p: &std::path::Path| Some(cfg.input(p)).filter(|p| p.exists());
            let inputs = ValidationInputs {
                panel: cfg.input(&cfg.files.panel),
                baseline: cfg.input(&cfg.files.baseline),
                outcome: cfg.input(&cfg.files.outcome),
                residences: optional(&cfg.files.residences),
                neighborhoods: optional(&cfg.files.neighborhoods),
            };
            let report = validate_panel(&inputs)?;
            print!("{}", io::canonical_json(&report)?);
            return Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    run_stage(stage, &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MEDFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
