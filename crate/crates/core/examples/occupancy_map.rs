//! Parse a PGM raster, classify it into a grid and query free space.
//!
//! Runs on the bundled demo room, or on a map sidecar given as the first
//! argument: `cargo run --example occupancy_map -- path/to/map.json`.

use std::path::PathBuf;
use synthscene::occupancy_map::{
    encode_pgm, load_map, load_map_file, parse_pgm, Cell, MapMetadata, MapOrigin, Occupancy,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 6x4 raster built in memory: white is free, black occupied, 205 unknown.
    let pixels = [
        0, 0, 0, 0, 0, 0, //
        0, 254, 254, 205, 254, 0, //
        0, 254, 0, 205, 254, 0, //
        0, 0, 0, 0, 0, 0,
    ];
    let raster = parse_pgm(&encode_pgm(6, 4, &pixels))?;
    let meta = MapMetadata::new(
        0.5,
        MapOrigin {
            x: -1.0,
            y: -1.0,
            theta: 0.0,
        },
    );
    let map = load_map(&meta, &raster)?;
    // Raster row 0 is the top edge; grid row 0 is the bottom edge.
    for row in (0..map.height() as i64).rev() {
        let line: String = (0..map.width() as i64)
            .map(|col| match map.get(Cell::new(col, row)).unwrap() {
                Occupancy::Free => '.',
                Occupancy::Occupied => '#',
                Occupancy::Unknown => '?',
            })
            .collect();
        println!("{line}");
    }
    let cell = Cell::new(1, 2);
    let (x, y) = map.cell_to_world(cell);
    println!(
        "cell {cell:?} center at ({x:.2}, {y:.2}), free: {}",
        map.is_free(cell)
    );
    println!(
        "world (0.3, 0.1) is cell {:?}",
        map.world_to_cell(0.3, 0.1)?
    );
    println!("world (9, 9) is {:?}", map.world_to_cell(9.0, 9.0));

    let sidecar = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/random/map.json"));
    let room = load_map_file(&sidecar)?;
    let unknown = room
        .cells()
        .iter()
        .filter(|c| **c == Occupancy::Unknown)
        .count();
    println!(
        "{}: {}x{} cells at {} m, {} free, {unknown} unknown",
        sidecar.display(),
        room.width(),
        room.height(),
        room.resolution(),
        room.free_count()
    );
    Ok(())
}
