//! Pluggable label writers.
//!
//! Every writer implements three operations: [`FormatWriter::write_scene`]
//! is called once per frame in frame order, [`FormatWriter::finalize`] once
//! after the last frame, and [`FormatWriter::requires_segmentation`] tells
//! the pipeline whether per-object masks must be computed at all. The
//! shared geometry helpers live in [`crate::camera_projection`] and arrive
//! pre-applied in [`LabelInputs`].

mod coco;
mod darknet;
mod keypoints;

pub use coco::{encode_rle, CocoWriter, RleCounts};
pub use darknet::DarknetWriter;
pub use keypoints::KeypointWriter;

use crate::camera_projection::{CameraModel, DarknetBox, PixelRect};
use crate::renderer::Mask;
use std::path::{Component, Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WriterError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("frame {frame}: object `{object}` has no mask but the writer needs one")]
    MissingMask { frame: usize, object: String },
    #[error("writer `{writer}`: {source}")]
    InWriter {
        writer: String,
        #[source]
        source: Box<WriterError>,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WriterError + '_ {
    move |source| WriterError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-object label data for one frame.
#[derive(Debug, Clone)]
pub struct ObjectLabel {
    pub name: String,
    pub class_id: u32,
    /// Projected-cuboid rectangle clamped to the image; None if not visible.
    pub rect: Option<PixelRect>,
    pub darknet: Option<DarknetBox>,
    pub vertices: [Option<(f64, f64)>; 8],
    pub keypoints: Vec<Option<(f64, f64)>>,
    pub mask: Option<Mask>,
}

/// Everything a writer sees for one frame.
#[derive(Debug, Clone)]
pub struct LabelInputs {
    pub frame_index: usize,
    pub time: f64,
    /// Location of the already written frame image.
    pub image_path: PathBuf,
    pub image_width: u32,
    pub image_height: u32,
    pub camera: CameraModel,
    /// In registration order.
    pub objects: Vec<ObjectLabel>,
}

pub trait FormatWriter {
    /// Short identifier used in diagnostics.
    fn name(&self) -> &str;

    fn requires_segmentation(&self) -> bool;

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError>;

    fn finalize(&mut self) -> Result<(), WriterError>;
}

struct Registered {
    writer: Box<dyn FormatWriter>,
    output_dir: PathBuf,
}

/// Writers in registration order, which is also invocation order.
#[derive(Default)]
pub struct WriterRegistry {
    entries: Vec<Registered>,
}

impl WriterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, output_dir: impl Into<PathBuf>, writer: Box<dyn FormatWriter>) {
        self.entries.push(Registered {
            writer,
            output_dir: output_dir.into(),
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(name, output directory)` per writer.
    pub fn outputs(&self) -> impl Iterator<Item = (&str, &Path)> {
        self.entries
            .iter()
            .map(|e| (e.writer.name(), e.output_dir.as_path()))
    }

    pub fn any_requires_segmentation(&self) -> bool {
        self.entries
            .iter()
            .any(|e| e.writer.requires_segmentation())
    }

    pub fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        for e in &mut self.entries {
            e.writer
                .write_scene(inputs)
                .map_err(|source| WriterError::InWriter {
                    writer: e.writer.name().to_string(),
                    source: Box::new(source),
                })?;
        }
        Ok(())
    }

    pub fn finalize(&mut self) -> Result<(), WriterError> {
        for e in &mut self.entries {
            e.writer
                .finalize()
                .map_err(|source| WriterError::InWriter {
                    writer: e.writer.name().to_string(),
                    source: Box::new(source),
                })?;
        }
        Ok(())
    }
}

/// `path` expressed relative to directory `base`, purely lexically.
pub fn relative_path(base: &Path, path: &Path) -> PathBuf {
    fn norm(p: &Path) -> Vec<Component<'_>> {
        p.components().filter(|c| *c != Component::CurDir).collect()
    }
    let (b, p) = (norm(base), norm(path));
    let common = b.iter().zip(&p).take_while(|(x, y)| x == y).count();
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    for c in &p[common..] {
        out.push(c.as_os_str());
    }
    out
}

/// Forward-slash rendering of a relative path for label files.
pub(crate) fn portable(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}
