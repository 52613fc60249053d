//! Build a transform tree from a JSON Lines pose log and replay it at a
//! fixed frame rate with interpolated lookups.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use synthscene::scene_timeline::{parse_pose_log, sample_times, ReplayClock};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/replay/poses.jsonl")
        });
    let tree = parse_pose_log(BufReader::new(File::open(&path)?))?;
    println!("frames: {:?}", tree.frames());

    let robots = ["rover", "drone", "pallet"];
    let range = tree.valid_time_range(&robots)?;
    println!("valid over [{}, {}] s", range.start, range.end);
    let clock = ReplayClock {
        start_time: range.start,
        end_time: range.end,
        frame_rate: 4.0,
    };
    println!("{} frames at {} Hz", clock.frame_count(), clock.frame_rate);
    for t in sample_times(&clock) {
        // each robot relative to the camera, not the world
        let cam_drone = tree.lookup_transform("camera", "drone", t)?;
        let p = cam_drone.translation;
        println!(
            "t={t:5.2}  drone in camera frame ({:+.3}, {:+.3}, {:+.3})",
            p.x, p.y, p.z
        );
    }
    match tree.lookup_transform("world", "rover", range.end + 1.0) {
        Err(e) => println!("past the log: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
