use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ifpc_cli::config::PipelineConfig;
use ifpc_cli::pipeline::{run_pipeline, RunOptions, Stage};
use ifpc_cli::plant::{generate_demo_plant, PlantDocument, DEMO_SEED};
use ifpc_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "ifpc", version, about = "Decentralized flight/propulsion controller design pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic demo plant document.
    DemoPlant {
        /// Plant generator seed.
        #[arg(long, default_value_t = DEMO_SEED)]
        seed: u64,
        /// Output file.
        #[arg(long, default_value = "demo-plant.json")]
        out: PathBuf,
    },
    /// Centralized GA + H-infinity design.
    Synth(Common),
    /// Interface selection and subcontroller construction.
    Partition(Common),
    /// Error curves and robustness margins.
    Analyze(Common),
    /// Step response comparison.
    Simulate(Common),
    /// Rewrite the report from stored stage results.
    Report(Common),
    /// Full pipeline.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Plant document; the demo plant when omitted.
    #[arg(long)]
    plant: Option<PathBuf>,
    /// Pipeline configuration document; defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides both GA seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse stored stage results with matching fingerprints.
    #[arg(long)]
    resume: bool,
}

fn execute(common: Common, until: Stage, resume: bool) -> CliResult<()> {
    let doc = match &common.plant {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            PlantDocument::from_json(&text, &p.display().to_string())?
        }
        None => generate_demo_plant(DEMO_SEED),
    };
    let mut config = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config = config.with_seed(seed);
    }
    let out_dir = common.out.clone().unwrap_or_else(|| config.out_dir.clone());
    let opts = RunOptions { until, resume: resume || common.resume, out_dir };
    let out = run_pipeline(&doc, &config, &opts)?;
    eprintln!("wrote {} files to {}", out.manifest.files.len(), opts.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DemoPlant { seed, out } => generate_demo_plant(seed).write(&out),
        // single-stage commands build on whatever earlier stages are stored
        Command::Synth(c) => execute(c, Stage::Synth, true),
        Command::Partition(c) => execute(c, Stage::Partition, true),
        Command::Analyze(c) => execute(c, Stage::Analyze, true),
        Command::Simulate(c) => execute(c, Stage::Simulate, true),
        Command::Report(c) => execute(c, Stage::Report, true),
        Command::Run(c) => execute(c, Stage::Report, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
