//! Full replay run: pose log in, images plus Darknet, COCO and keypoint
//! labels out.
//!
//! `cargo run --release --example replay_dataset -- [config.json] [out_dir]`

use std::path::PathBuf;
use synthscene::pipeline::{dry_run, load_config, Generator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config_path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/replay/config.json")
    });
    let loaded = load_config(&config_path)?;
    for warning in &loaded.warnings {
        println!("note: {warning}");
    }
    let mut config = loaded.config;
    config.output_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("synthscene-replay"));
    println!("{} frames planned", dry_run(&config)?);

    let out = config.output_dir.clone();
    let mut next = 25;
    let report = Generator::new(config)?
        .on_progress(move |p| {
            while p >= next {
                println!("{next}%");
                next += 25;
            }
        })
        .run()?;
    println!(
        "{} frames in {:.2?}, {} subtractor passes, {} background trainings",
        report.frames, report.wall_time, report.subtractor_invocations, report.background_trainings
    );
    for (writer, files) in &report.writer_files {
        println!("  {writer}: {files} files");
    }
    println!("output in {}", out.display());
    Ok(())
}
