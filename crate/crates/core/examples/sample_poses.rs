//! Seeded collision-free placement of round robots on the demo room map.
//!
//! Each accepted disc is marked occupied so later robots avoid it.

use std::path::PathBuf;
use synthscene::occupancy_map::{load_map_file, Cell, Occupancy};
use synthscene::pose_sampler::{footprint_is_free, mark_disc_occupied, FootprintSpec, PoseSampler};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sidecar = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/random/map.json");
    let mut map = load_map_file(&sidecar)?;
    let seed = std::env::args().nth(1).map_or(Ok(42), |s| s.parse())?;
    let mut sampler = PoseSampler::new(seed, 1000);
    let mut centers = Vec::new();
    for (i, radius) in [0.3, 0.25, 0.25, 0.2, 0.15].into_iter().enumerate() {
        let footprint = FootprintSpec::new(radius)?;
        let placed = sampler.sample_pose(&map, &footprint)?;
        let r = footprint.radius_cells(map.resolution());
        assert!(footprint_is_free(&map, placed.cell, r));
        mark_disc_occupied(&mut map, placed.cell, r);
        println!(
            "robot {i}: r={radius} m at ({:.2}, {:.2}) yaw {:+.3} rad, cell {:?}",
            placed.pose.x, placed.pose.y, placed.pose.theta, placed.cell
        );
        centers.push(placed.cell);
    }
    println!("{} cell draws", sampler.draws());
    for row in (0..map.height() as i64).rev().step_by(2) {
        let line: String = (0..map.width() as i64)
            .map(|col| {
                let cell = Cell::new(col, row);
                if let Some(i) = centers.iter().position(|c| *c == cell) {
                    char::from(b'0' + i as u8)
                } else {
                    match map.get(cell).unwrap() {
                        Occupancy::Free => ' ',
                        Occupancy::Occupied => '#',
                        Occupancy::Unknown => '?',
                    }
                }
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
