//! Random collision-free placement on an occupancy grid.
//!
//! A candidate cell is drawn uniformly over the whole grid and rejected
//! unless the object's footprint fits: the center must be free, every cell
//! on every Bresenham line from the center to the Bresenham circle of the
//! safety radius must be free, and finally the full disc of that radius must
//! be free. The disc pass closes the gaps radial lines leave at some radii.
//! Accepted cells get an orientation drawn uniformly from (-pi, pi].

use crate::occupancy_map::{Cell, GridMap, Occupancy};
use crate::rng::{rng_from_seed, SceneRng};
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("no free pose found after {attempts} attempts")]
    NoFreePose { attempts: u32 },
    #[error("safety radius must be positive, got {0}")]
    InvalidRadius(f64),
}

/// Planar pose; `theta` lies in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintSpec {
    pub safety_radius: f64,
}

impl FootprintSpec {
    pub fn new(safety_radius: f64) -> Result<Self, SamplerError> {
        if safety_radius > 0.0 && safety_radius.is_finite() {
            Ok(Self { safety_radius })
        } else {
            Err(SamplerError::InvalidRadius(safety_radius))
        }
    }

    /// Radius in whole cells, rounded up.
    pub fn radius_cells(&self, resolution: f64) -> i64 {
        (self.safety_radius / resolution).ceil() as i64
    }
}

/// Cells of the segment from `p0` to `p1`, inclusive, as 8-connected steps.
///
/// Ties are broken identically regardless of direction, so the cell set of
/// `(a, b)` always equals that of `(b, a)`.
pub fn bresenham_line(p0: Cell, p1: Cell) -> Vec<Cell> {
    if p1 < p0 {
        let mut cells = bresenham_line(p1, p0);
        cells.reverse();
        return cells;
    }
    let dx = (p1.col - p0.col).abs();
    let dy = -(p1.row - p0.row).abs();
    let sx = if p0.col < p1.col { 1 } else { -1 };
    let sy = if p0.row < p1.row { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (p0.col, p0.row);
    let mut cells = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        cells.push(Cell::new(x, y));
        if x == p1.col && y == p1.row {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    cells
}

/// Perimeter cells of the midpoint circle of radius `r`, sorted and unique.
pub fn bresenham_circle(center: Cell, r: i64) -> Vec<Cell> {
    assert!(r >= 0, "negative circle radius");
    let mut cells = Vec::with_capacity(8 * r.max(1) as usize);
    let (mut x, mut y) = (r, 0i64);
    // err tracks x^2 + y^2 - r^2 evaluated at the midpoint (x - 1/2, y + 1)
    let mut err = 1 - r;
    while x >= y {
        for (dx, dy) in [
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            cells.push(Cell::new(center.col + dx, center.row + dy));
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    cells.sort();
    cells.dedup();
    cells
}

/// Cells within Euclidean distance `radius` of `center`.
pub fn disc_cells(center: Cell, radius: i64) -> impl Iterator<Item = Cell> {
    let r2 = radius * radius;
    (-radius..=radius).flat_map(move |dy| {
        (-radius..=radius)
            .filter(move |dx| dx * dx + dy * dy <= r2)
            .map(move |dx| Cell::new(center.col + dx, center.row + dy))
    })
}

/// Perimeter-and-radial-lines check followed by the filled-disc check.
pub fn footprint_is_free(map: &GridMap, center: Cell, radius: i64) -> bool {
    if !map.is_free(center) {
        return false;
    }
    let radial_clear = bresenham_circle(center, radius.max(0))
        .into_iter()
        .all(|edge| {
            bresenham_line(center, edge)
                .into_iter()
                .all(|c| map.is_free(c))
        });
    radial_clear && disc_cells(center, radius.max(0)).all(|c| map.is_free(c))
}

/// Marks every cell of the disc as occupied (cells off the grid are ignored).
pub fn mark_disc_occupied(map: &mut GridMap, center: Cell, radius: i64) {
    for c in disc_cells(center, radius) {
        map.set(c, Occupancy::Occupied);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub cell: Cell,
    pub pose: Pose2D,
}

/// Seeded rejection sampler. Every cell draw increments `draws`, whether or
/// not it is accepted, so the stream position is a pure function of history.
#[derive(Debug, Clone)]
pub struct PoseSampler {
    rng: SceneRng,
    max_attempts: u32,
    draws: u64,
}

impl PoseSampler {
    pub fn new(seed: u64, max_attempts: u32) -> Self {
        Self {
            rng: rng_from_seed(seed),
            max_attempts: max_attempts.max(1),
            draws: 0,
        }
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_attempts
    }

    /// Total cell draws made so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform orientation in (-pi, pi].
    pub fn sample_theta(&mut self) -> f64 {
        let u: f64 = self.rng.random();
        PI - 2.0 * PI * u
    }

    pub fn sample_pose(
        &mut self,
        map: &GridMap,
        footprint: &FootprintSpec,
    ) -> Result<Placement, SamplerError> {
        let radius = footprint.radius_cells(map.resolution());
        let n = (map.width() * map.height()) as u64;
        for _ in 0..self.max_attempts {
            let idx = self.rng.random_range(0..n);
            self.draws += 1;
            let cell = Cell::new(
                (idx % map.width() as u64) as i64,
                (idx / map.width() as u64) as i64,
            );
            if !footprint_is_free(map, cell, radius) {
                continue;
            }
            let theta = self.sample_theta();
            let (x, y) = map.cell_to_world(cell);
            return Ok(Placement {
                cell,
                pose: Pose2D { x, y, theta },
            });
        }
        Err(SamplerError::NoFreePose {
            attempts: self.max_attempts,
        })
    }
}
