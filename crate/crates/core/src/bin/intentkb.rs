use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intentkb::pipeline::{Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "intentkb", version, about = "Run the intent KB pipeline stages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Acquire(Common),
    Categorize(Common),
    Cluster(Common),
    Build(Common),
    Eval(Common),
    RunAll(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> intentkb::Result<()> {
    let (stage, common) = match cli.command {
        Command::Acquire(c) => (Some(Stage::Acquire), c),
        Command::Categorize(c) => (Some(Stage::Categorize), c),
        Command::Cluster(c) => (Some(Stage::Cluster), c),
        Command::Build(c) => (Some(Stage::Build), c),
        Command::Eval(c) => (Some(Stage::Eval), c),
        Command::RunAll(c) => (None, c),
    };
    let mut config = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = common.out {
        config.out_dir = out;
    }
    let mut pipeline = Pipeline::new(config);
    let reports = match stage {
        Some(s) => vec![pipeline.run_stage(s)?],
        None => pipeline.run_all()?.reports,
    };
    for r in reports {
        println!("{}\t{} ms\t{}", r.stage, r.duration_ms, r.outputs.join(","));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
