//! Single-Gaussian per-pixel background model and the one-object-at-a-time
//! mask protocol.

use super::{render_scene, Frame, Mask, RenderError, RenderOptions, SceneObject};
use crate::camera_projection::{project_cuboid_to_rect, CameraModel, PixelRect};
use crate::rng::{derive_seed, stream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    /// Population variance.
    pub variance: Vec<f64>,
    pub trained_frames: usize,
}

/// A pixel is foreground when `(lum - mean)^2 > k * variance + tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractorParams {
    pub k: f64,
    pub tau: f64,
}

impl Default for SubtractorParams {
    fn default() -> Self {
        Self { k: 9.0, tau: 225.0 }
    }
}

pub fn train_background(frames: &[Frame]) -> Result<BackgroundModel, RenderError> {
    let first = frames.first().ok_or(RenderError::NoTrainingFrames)?;
    let (width, height) = (first.width, first.height);
    let n = width * height;
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    for f in frames {
        if (f.width, f.height) != (width, height) {
            return Err(RenderError::DimensionMismatch {
                expected: (width, height),
                found: (f.width, f.height),
            });
        }
        for i in 0..n {
            let l = f.luminance(i);
            sum[i] += l;
            sum_sq[i] += l * l;
        }
    }
    let count = frames.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let variance = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| (sq / count - m * m).max(0.0))
        .collect();
    Ok(BackgroundModel {
        width,
        height,
        mean,
        variance,
        trained_frames: frames.len(),
    })
}

pub fn subtract(
    model: &BackgroundModel,
    frame: &Frame,
    params: &SubtractorParams,
) -> Result<Mask, RenderError> {
    if (frame.width, frame.height) != (model.width, model.height) {
        return Err(RenderError::DimensionMismatch {
            expected: (model.width, model.height),
            found: (frame.width, frame.height),
        });
    }
    let bits = (0..model.width * model.height)
        .map(|i| {
            let d = frame.luminance(i) - model.mean[i];
            d * d > params.k * model.variance[i] + params.tau
        })
        .collect();
    Ok(Mask {
        width: model.width,
        height: model.height,
        bits,
    })
}

/// Keeps only set pixels whose centers fall inside `rect`.
pub fn filter_mask_with_bbox(mask: &Mask, rect: &PixelRect) -> Mask {
    let bits = mask
        .bits
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let (x, y) = (i % mask.width, i / mask.width);
            b && rect.contains(x as f64 + 0.5, y as f64 + 0.5)
        })
        .collect();
    Mask {
        width: mask.width,
        height: mask.height,
        bits,
    }
}

/// A trained model plus a count of how many frames it has been applied to.
#[derive(Debug, Clone)]
pub struct BackgroundSubtractor {
    model: BackgroundModel,
    params: SubtractorParams,
    applications: u64,
}

impl BackgroundSubtractor {
    pub fn new(model: BackgroundModel, params: SubtractorParams) -> Self {
        Self {
            model,
            params,
            applications: 0,
        }
    }

    pub fn model(&self) -> &BackgroundModel {
        &self.model
    }

    pub fn applications(&self) -> u64 {
        self.applications
    }

    pub fn apply(&mut self, frame: &Frame) -> Result<Mask, RenderError> {
        self.applications += 1;
        subtract(&self.model, frame, &self.params)
    }
}

/// Renders each object alone, subtracts the background and filters the
/// result with the object's projected box. Masks are amodal: an object
/// hidden behind another in the full scene still gets its whole silhouette.
///
/// `options.seed` is the frame's base seed; each solo render derives its own
/// noise stream from it.
pub fn isolated_object_masks(
    objects: &[SceneObject],
    cam: &CameraModel,
    subtractor: &mut BackgroundSubtractor,
    options: &RenderOptions,
) -> Result<Vec<Mask>, RenderError> {
    let mut solo: Vec<SceneObject> = objects
        .iter()
        .map(|o| SceneObject {
            visible: false,
            ..*o
        })
        .collect();
    let mut masks = Vec::with_capacity(objects.len());
    for (i, obj) in objects.iter().enumerate() {
        solo[i].visible = obj.visible;
        let render_opts = RenderOptions {
            noise_sigma: options.noise_sigma,
            seed: derive_seed(options.seed, stream::ISOLATION_NOISE, i as u64),
        };
        let frame = render_scene(&solo, cam, &render_opts);
        solo[i].visible = false;
        let raw = subtractor.apply(&frame)?;
        let rect = if obj.visible {
            project_cuboid_to_rect(cam, &obj.shape, &cam.object_in_camera(&obj.pose))
        } else {
            None
        };
        masks.push(match rect {
            Some(r) => filter_mask_with_bbox(&raw, &r),
            None => Mask::empty(raw.width, raw.height),
        });
    }
    Ok(masks)
}
