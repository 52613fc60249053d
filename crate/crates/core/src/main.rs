use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use synthscene::pipeline::{dry_run, load_config, Generator, Mode, PipelineError};

/// Generate a labeled synthetic image dataset from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "synthscene", version)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Override the configured mode.
    #[arg(long, value_parser = ["replay", "random"])]
    mode: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Validate inputs and print the frame count without writing anything.
    #[arg(long)]
    dry_run: bool,
}

fn run(args: Args) -> Result<(), PipelineError> {
    let mut config = load_config(&args.config)?.config;
    if let Some(m) = args.mode.as_deref() {
        config.mode = if m == "replay" {
            Mode::Replay
        } else {
            Mode::Random
        };
    }
    if let Some(o) = args.output {
        config.output_dir = o;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.validate()?;
    if args.dry_run {
        println!("{}", dry_run(&config)?);
        return Ok(());
    }
    let report = Generator::new(config)?.run()?;
    log::info!(
        "generated {} frames in {:.2?} ({} subtractor passes)",
        report.frames,
        report.wall_time,
        report.subtractor_invocations
    );
    for (writer, files) in &report.writer_files {
        log::info!("{writer}: {files} files");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNTHSCENE_LOG", "info"))
        .format_timestamp(None)
        .init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
