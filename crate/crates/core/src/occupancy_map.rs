//! Occupancy-grid maps in the map-server layout: a PGM raster plus a JSON
//! sidecar carrying resolution, origin and occupancy thresholds.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unsupported PGM maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("PGM sample {value} exceeds maxval {maxval}")]
    SampleOutOfRange { value: u32, maxval: u32 },
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(
        "invalid thresholds: need 0 <= free_thresh ({free}) < occupied_thresh ({occupied}) <= 1"
    )]
    InvalidThresholds { free: f64, occupied: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad map metadata {path}: {source}")]
    Metadata {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// 8-bit grayscale raster, row-major, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayRaster {
    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        let tok = self
            .token()
            .ok_or_else(|| PgmError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                PgmError::MalformedHeader(format!(
                    "{what} is not a nonnegative integer: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

/// Parses a binary (`P5`) or ASCII (`P2`) graymap with maxval <= 255.
///
/// Samples are rescaled to the full 0..=255 range when maxval < 255.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayRaster, PgmError> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    let binary = match rd.token() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(other) => {
            return Err(PgmError::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
        None => return Err(PgmError::MalformedHeader("empty stream".into())),
    };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!(
            "nonpositive dimensions {width}x{height}"
        )));
    }
    let maxval = rd.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    let expected = width * height;
    let mut raw = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates maxval from the data.
        let start = rd.pos + 1;
        let data = bytes.get(start..).unwrap_or(&[]);
        if data.len() < expected {
            return Err(PgmError::TruncatedData {
                expected,
                found: data.len(),
            });
        }
        raw.extend(data[..expected].iter().map(|&b| b as u32));
    } else {
        while raw.len() < expected {
            match rd.token() {
                Some(tok) => {
                    let v = std::str::from_utf8(tok)
                        .ok()
                        .and_then(|s| s.parse::<u32>().ok())
                        .ok_or_else(|| {
                            PgmError::MalformedHeader(format!(
                                "non-numeric sample {:?}",
                                String::from_utf8_lossy(tok)
                            ))
                        })?;
                    raw.push(v);
                }
                None => {
                    return Err(PgmError::TruncatedData {
                        expected,
                        found: raw.len(),
                    })
                }
            }
        }
    }
    let mut pixels = Vec::with_capacity(expected);
    for v in raw {
        if v > maxval {
            return Err(PgmError::SampleOutOfRange { value: v, maxval });
        }
        pixels.push(if maxval == 255 {
            v as u8
        } else {
            ((v * 255 + maxval / 2) / maxval) as u8
        });
    }
    Ok(GrayRaster {
        width,
        height,
        pixels,
    })
}

/// Binary `P5` encoding, maxval 255.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count mismatch");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Free,
    Occupied,
    Unknown,
}

/// Integer grid coordinate. Signed so that raster algorithms can step past
/// the map edge; such cells are simply reported as not free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: i64,
    pub row: i64,
}

impl Cell {
    pub const fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }
}

impl From<(i64, i64)> for Cell {
    fn from((col, row): (i64, i64)) -> Self {
        Cell::new(col, row)
    }
}

/// World pose of the outer corner of cell (0, 0), serialized `[x, y, theta]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct MapOrigin {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl From<[f64; 3]> for MapOrigin {
    fn from(v: [f64; 3]) -> Self {
        MapOrigin {
            x: v[0],
            y: v[1],
            theta: v[2],
        }
    }
}

impl From<MapOrigin> for [f64; 3] {
    fn from(o: MapOrigin) -> Self {
        [o.x, o.y, o.theta]
    }
}

pub const DEFAULT_FREE_THRESH: f64 = 0.196;
pub const DEFAULT_OCCUPIED_THRESH: f64 = 0.65;

fn default_free_thresh() -> f64 {
    DEFAULT_FREE_THRESH
}

fn default_occupied_thresh() -> f64 {
    DEFAULT_OCCUPIED_THRESH
}

/// JSON sidecar describing how to interpret a map raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub image_path: String,
    pub resolution: f64,
    #[serde(default)]
    pub origin: MapOrigin,
    #[serde(default = "default_occupied_thresh")]
    pub occupied_thresh: f64,
    #[serde(default = "default_free_thresh")]
    pub free_thresh: f64,
    #[serde(default)]
    pub negate: bool,
}

impl MapMetadata {
    pub fn new(resolution: f64, origin: MapOrigin) -> Self {
        Self {
            image_path: String::new(),
            resolution,
            origin,
            occupied_thresh: DEFAULT_OCCUPIED_THRESH,
            free_thresh: DEFAULT_FREE_THRESH,
            negate: false,
        }
    }

    /// Occupancy of a single gray value under these thresholds.
    pub fn classify(&self, gray: u8) -> Occupancy {
        let g = gray as f64 / 255.0;
        let p = if self.negate { g } else { 1.0 - g };
        if p >= self.occupied_thresh {
            Occupancy::Occupied
        } else if p <= self.free_thresh {
            Occupancy::Free
        } else {
            Occupancy::Unknown
        }
    }

    fn validate(&self) -> Result<(), MapError> {
        let ok = 0.0 <= self.free_thresh
            && self.free_thresh < self.occupied_thresh
            && self.occupied_thresh <= 1.0;
        if !ok {
            return Err(MapError::InvalidThresholds {
                free: self.free_thresh,
                occupied: self.occupied_thresh,
            });
        }
        if !(self.resolution > 0.0) {
            return Err(MapError::InvalidMap(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

/// Immutable-by-convention occupancy raster. Cell row 0 is the bottom
/// (lowest y) row of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    origin: MapOrigin,
    cells: Vec<Occupancy>,
}

impl GridMap {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: MapOrigin,
        cells: Vec<Occupancy>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::InvalidMap("empty grid".into()));
        }
        if cells.len() != width * height {
            return Err(MapError::InvalidMap(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        if !(resolution > 0.0) {
            return Err(MapError::InvalidMap(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }

    pub fn filled(width: usize, height: usize, resolution: f64, value: Occupancy) -> Self {
        Self::new(
            width,
            height,
            resolution,
            MapOrigin::default(),
            vec![value; width * height],
        )
        .expect("valid filled map")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> MapOrigin {
        self.origin
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    fn index(&self, cell: Cell) -> Option<usize> {
        let in_bounds = cell.col >= 0
            && cell.row >= 0
            && (cell.col as usize) < self.width
            && (cell.row as usize) < self.height;
        in_bounds.then(|| cell.row as usize * self.width + cell.col as usize)
    }

    pub fn get(&self, cell: Cell) -> Option<Occupancy> {
        self.index(cell).map(|i| self.cells[i])
    }

    /// Returns false when the cell is outside the grid.
    pub fn set(&mut self, cell: Cell, value: Occupancy) -> bool {
        match self.index(cell) {
            Some(i) => {
                self.cells[i] = value;
                true
            }
            None => false,
        }
    }

    /// Out-of-bounds and unknown cells are not free.
    pub fn is_free(&self, cell: Cell) -> bool {
        self.get(cell) == Some(Occupancy::Free)
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Occupancy::Free).count()
    }

    /// Metric world position of the cell center.
    pub fn cell_to_world(&self, cell: Cell) -> (f64, f64) {
        let lx = (cell.col as f64 + 0.5) * self.resolution;
        let ly = (cell.row as f64 + 0.5) * self.resolution;
        let (s, c) = self.origin.theta.sin_cos();
        (
            self.origin.x + c * lx - s * ly,
            self.origin.y + s * lx + c * ly,
        )
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Result<Cell, MapError> {
        let dx = x - self.origin.x;
        let dy = y - self.origin.y;
        let (s, c) = self.origin.theta.sin_cos();
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let col = (lx / self.resolution).floor();
        let row = (ly / self.resolution).floor();
        let inside =
            col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64;
        if !inside {
            return Err(MapError::OutOfBounds { x, y });
        }
        Ok(Cell::new(col as i64, row as i64))
    }
}

/// Builds a grid from a raster; raster row 0 (top) becomes the highest cell row.
pub fn load_map(meta: &MapMetadata, raster: &GrayRaster) -> Result<GridMap, MapError> {
    meta.validate()?;
    if raster.width == 0 || raster.height == 0 {
        return Err(MapError::InvalidMap("empty raster".into()));
    }
    let mut cells = Vec::with_capacity(raster.width * raster.height);
    for row in 0..raster.height {
        let raster_row = raster.height - 1 - row;
        for col in 0..raster.width {
            cells.push(meta.classify(raster.get(col, raster_row)));
        }
    }
    GridMap::new(
        raster.width,
        raster.height,
        meta.resolution,
        meta.origin,
        cells,
    )
}

/// Reads a sidecar JSON file and the raster it names (relative paths are
/// resolved against the sidecar's directory).
pub fn load_map_file(sidecar: &Path) -> Result<GridMap, MapError> {
    let text = fs::read_to_string(sidecar).map_err(|source| MapError::Io {
        path: sidecar.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| MapError::Metadata {
            path: sidecar.to_path_buf(),
            source,
        })?;
    for key in ["occupied_thresh", "free_thresh"] {
        if value.get(key).is_none() {
            log::warn!(
                "{}: `{key}` not set, using map-server default",
                sidecar.display()
            );
        }
    }
    let meta: MapMetadata = serde_json::from_value(value).map_err(|source| MapError::Metadata {
        path: sidecar.to_path_buf(),
        source,
    })?;
    let image = resolve_relative(sidecar, &meta.image_path);
    let bytes = fs::read(&image).map_err(|source| MapError::Io {
        path: image.clone(),
        source,
    })?;
    load_map(&meta, &parse_pgm(&bytes)?)
}

pub(crate) fn resolve_relative(anchor_file: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        anchor_file
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}
