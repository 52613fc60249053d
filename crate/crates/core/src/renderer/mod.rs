//! Deterministic software camera.
//!
//! Cuboids are split into 12 triangles, z-buffered, and flat shaded with a
//! single directional light over a fixed checkerboard. The same coverage
//! pass also yields an object-ID buffer, which serves as an exact oracle for
//! the background-subtraction masks.

mod background;
mod raster;

pub use background::{
    filter_mask_with_bbox, isolated_object_masks, subtract, train_background, BackgroundModel,
    BackgroundSubtractor, SubtractorParams,
};
pub use raster::SceneObject;

use crate::camera_projection::CameraModel;
use crate::geometry::{Transform, Vec3};
use crate::rng::rng_from_seed;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("frame dimensions {found:?} do not match {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("background model needs at least one training frame")]
    NoTrainingFrames,
}

/// Checkerboard square size in pixels.
pub const CHECKER_SIZE: usize = 16;
pub const CHECKER_DARK: u8 = 40;
pub const CHECKER_LIGHT: u8 = 64;

/// Per-class base colors; all are bright enough that a shaded face never
/// falls within the subtraction floor of the checkerboard.
pub const PALETTE: [[u8; 3]; 6] = [
    [255, 200, 80],
    [120, 230, 255],
    [255, 150, 220],
    [200, 255, 140],
    [240, 180, 255],
    [255, 255, 255],
];

const AMBIENT: f64 = 0.6;
const DIFFUSE: f64 = 0.4;

fn light_direction() -> Vec3 {
    // towards the light, camera frame (+y is down, so -y is up)
    Vec3::new(-0.4, -0.7, -0.6).normalized()
}

/// RGB image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Frame {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// Rec. 601 luma of pixel `index`.
    pub fn luminance(&self, index: usize) -> f64 {
        let p = &self.rgb[3 * index..3 * index + 3];
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    }

    /// Binary `P6` encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

/// Boolean per-pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set pixels as `(x, y)`.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    /// Inclusive pixel bounds `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        self.pixels().fold(None, |acc, (x, y)| {
            Some(match acc {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            })
        })
    }

    /// Intersection over union; two empty masks count as identical.
    pub fn iou(&self, other: &Mask) -> f64 {
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// `P5` bytes, 0 = background, 255 = object.
    pub fn to_pgm(&self) -> Vec<u8> {
        let px: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        crate::occupancy_map::encode_pgm(self.width, self.height, &px)
    }
}

/// Per-pixel index of the nearest visible object, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBuffer {
    pub width: usize,
    pub height: usize,
    pub ids: Vec<Option<u32>>,
}

impl IdBuffer {
    pub fn mask_for(&self, object: u32) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.ids.iter().map(|&id| id == Some(object)).collect(),
        }
    }

    pub fn covered(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.ids.iter().map(Option::is_some).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderOptions {
    pub noise_sigma: f64,
    pub seed: u64,
}

pub fn checkerboard(width: usize, height: usize) -> Frame {
    let mut rgb = Vec::with_capacity(3 * width * height);
    for y in 0..height {
        for x in 0..width {
            let v = if (x / CHECKER_SIZE + y / CHECKER_SIZE).is_multiple_of(2) {
                CHECKER_DARK
            } else {
                CHECKER_LIGHT
            };
            rgb.extend([v, v, v]);
        }
    }
    Frame { width, height, rgb }
}

fn shade(class_id: u32, normal: Vec3) -> [u8; 3] {
    let base = PALETTE[class_id as usize % PALETTE.len()];
    let intensity = AMBIENT + DIFFUSE * normal.dot(light_direction()).max(0.0);
    base.map(|c| (c as f64 * intensity).round().clamp(0.0, 255.0) as u8)
}

pub fn render_scene(objects: &[SceneObject], cam: &CameraModel, options: &RenderOptions) -> Frame {
    let coverage = raster::rasterize(objects, cam);
    let mut frame = checkerboard(coverage.width, coverage.height);
    for (i, frag) in coverage.fragments.iter().enumerate() {
        if let Some(f) = frag {
            let color = shade(objects[f.object as usize].class_id, f.normal);
            frame.rgb[3 * i..3 * i + 3].copy_from_slice(&color);
        }
    }
    if options.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, options.noise_sigma).expect("finite sigma");
        let mut rng = rng_from_seed(options.seed);
        for c in frame.rgb.iter_mut() {
            let v = *c as f64 + normal.sample(&mut rng);
            *c = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    frame
}

pub fn render_id_buffer(objects: &[SceneObject], cam: &CameraModel) -> IdBuffer {
    let coverage = raster::rasterize(objects, cam);
    IdBuffer {
        width: coverage.width,
        height: coverage.height,
        ids: coverage
            .fragments
            .iter()
            .map(|f| f.map(|f| f.object))
            .collect(),
    }
}

/// Everything known about one generated frame.
#[derive(Debug, Clone)]
pub struct SceneSnapshot {
    pub time: f64,
    pub objects: Vec<ObjectState>,
    pub camera: CameraModel,
    pub frame: Frame,
    /// Present iff segmentation ran for this frame.
    pub masks: Option<Vec<Mask>>,
    /// Projected cuboid corners per object (None for corners behind the camera).
    pub projected_vertices: Vec<[Option<(f64, f64)>; 8]>,
    pub projected_keypoints: Vec<Vec<Option<(f64, f64)>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub name: String,
    pub class_id: u32,
    pub world_pose: Transform,
    pub visible: bool,
}
