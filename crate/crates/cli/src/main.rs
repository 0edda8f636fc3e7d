use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netbaseline_cli::{
    cmd_decompose, cmd_experiment, cmd_metrics, cmd_simulate, CliError, ExperimentConfig,
    FlagOverrides, Method, Preset, Result,
};

#[derive(Parser)]
#[command(
    name = "netbaseline",
    version,
    about = "Baseline extraction for network traffic matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config layered over the preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled settings: paper or desk.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// spcp_tfc, spcp or pca.
    #[arg(long, global = true, value_name = "NAME")]
    method: Option<String>,
    #[arg(long, global = true, value_name = "X")]
    beta: Option<f64>,
    #[arg(long, global = true, value_name = "X")]
    alpha: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset with its manifest.
    Simulate,
    /// Decompose one matrix file.
    Decompose { input: PathBuf },
    /// Simulate, decompose with every method, score and summarize.
    Experiment,
    /// Re-score the saved outputs of an experiment.
    Metrics,
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let preset = common
        .preset
        .as_deref()
        .map(str::parse::<Preset>)
        .transpose()?;
    let flags = FlagOverrides {
        seed: common.seed,
        out: common.out.clone(),
        method: common
            .method
            .as_deref()
            .map(str::parse::<Method>)
            .transpose()?,
        beta: common.beta,
        alpha: common.alpha,
        parallelism: common.parallelism,
    };
    ExperimentConfig::load(preset, common.config.as_deref(), &flags)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load(&cli.common)?;
    match cli.command {
        Command::Simulate => {
            let manifest = cmd_simulate(&cfg)?;
            println!(
                "wrote {} sets to {}",
                manifest.sets.len(),
                cfg.output_dir.display()
            );
        }
        Command::Decompose { input } => {
            let method = cfg.methods[0];
            let record = cmd_decompose(&input, method, &cfg, &cfg.output_dir)?;
            println!(
                "{method}: {} iterations, hf residual {:e}",
                record.trace.iterations, record.trace.hf_residual
            );
        }
        Command::Experiment => {
            let out = cmd_experiment(&cfg)?;
            for g in &out.summary.groups {
                println!(
                    "{} alpha={} beta={}: nrmse median {:.4}",
                    g.method,
                    g.alpha,
                    g.beta.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
                    g.nrmse_median
                );
            }
        }
        Command::Metrics => {
            let out = cmd_metrics(&cfg.output_dir)?;
            println!("re-scored {} runs", out.reports.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_status(&e))
        }
    }
}

fn exit_status(e: &CliError) -> u8 {
    e.exit_code() as u8
}
