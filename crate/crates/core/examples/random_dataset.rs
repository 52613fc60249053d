//! Random-placement run: objects dropped at collision-free poses on an
//! occupancy map and viewed by a fixed top-down camera.
//!
//! `cargo run --release --example random_dataset -- [seed]`

use std::fs;
use std::path::PathBuf;
use synthscene::pipeline::{load_config, Generator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/random/config.json");
    let mut config = load_config(&demo)?.config;
    if let Some(seed) = std::env::args().nth(1) {
        config.seed = seed.parse()?;
    }
    config.output_dir = std::env::temp_dir().join(format!("synthscene-random-{}", config.seed));
    let out = config.output_dir.clone();
    let report = Generator::new(config)?.run()?;
    println!("{} datapoints in {:.2?}", report.frames, report.wall_time);
    for f in 0..report.frames.min(3) {
        let labels = fs::read_to_string(out.join(format!("darknet/frame_{f:06}.txt")))?;
        println!("frame {f}:\n{labels}");
    }
    println!("output in {}", out.display());
    Ok(())
}
