//! Synthetic image datasets with exact labels.
//!
//! Object motion comes either from a recorded pose log replayed at a fixed
//! frame rate, or from random collision-free placement on an occupancy map.
//! Each frame is rendered by a deterministic software camera and handed to a
//! set of label writers (Darknet boxes, COCO instance masks, projected
//! keypoints).
//!
//! ```no_run
//! use synthscene::pipeline::{load_config, Generator};
//!
//! let loaded = load_config("config.json".as_ref())?;
//! let report = Generator::new(loaded.config)?.run()?;
//! println!("{} frames", report.frames);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera_projection;
pub mod format_writers;
pub mod geometry;
pub mod occupancy_map;
pub mod pipeline;
pub mod pose_sampler;
pub mod renderer;
pub mod rng;
pub mod scene_timeline;

pub use geometry::{Quat, Transform, Vec3};
