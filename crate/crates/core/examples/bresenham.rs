//! Integer lines and circles on a grid, drawn as ASCII.

use std::collections::BTreeSet;
use synthscene::occupancy_map::Cell;
use synthscene::pose_sampler::{bresenham_circle, bresenham_line};

fn draw(cells: &BTreeSet<Cell>, half: i64) {
    for row in (-half..=half).rev() {
        let line: String = (-half..=half)
            .map(|col| {
                if cells.contains(&Cell::new(col, row)) {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("{line}");
    }
}

fn main() {
    let line = bresenham_line(Cell::new(-7, -3), Cell::new(6, 4));
    println!("line with {} cells:", line.len());
    draw(&line.into_iter().collect(), 8);

    for r in [3, 7] {
        let circle: BTreeSet<Cell> = bresenham_circle(Cell::new(0, 0), r).into_iter().collect();
        println!("\ncircle r={r}, {} cells:", circle.len());
        draw(&circle, 8);
    }
}
