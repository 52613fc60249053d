use super::{io_err, portable, relative_path, FormatWriter, LabelInputs, WriterError};
use crate::renderer::Mask;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

/// Uncompressed COCO RLE: column-major run lengths starting with a zero run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleCounts {
    pub counts: Vec<u64>,
    /// `[height, width]`.
    pub size: [u64; 2],
}

pub fn encode_rle(mask: &Mask) -> RleCounts {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for x in 0..mask.width {
        for y in 0..mask.height {
            let bit = mask.get(x, y);
            if bit != current {
                counts.push(run);
                run = 0;
                current = bit;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleCounts {
        counts,
        size: [mask.height as u64, mask.width as u64],
    }
}

#[derive(Debug, Serialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize)]
struct CocoCategory {
    id: u32,
    name: String,
}

#[derive(Debug, Serialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    category_id: u32,
    bbox: [u64; 4],
    area: u64,
    segmentation: RleCounts,
    iscrowd: u8,
}

#[derive(Debug, Serialize)]
struct CocoDocument<'a> {
    images: &'a [CocoImage],
    categories: Vec<CocoCategory>,
    annotations: &'a [CocoAnnotation],
}

/// Accumulates every frame and writes a single `annotations.json` on
/// finalize. Keys appear in the order images, categories, annotations.
/// Category ids are the objects' class ids; the first object name seen for a
/// class names the category.
pub struct CocoWriter {
    dir: PathBuf,
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: BTreeMap<u32, String>,
}

impl CocoWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, WriterError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            images: Vec::new(),
            annotations: Vec::new(),
            categories: BTreeMap::new(),
        })
    }
}

impl FormatWriter for CocoWriter {
    fn name(&self) -> &str {
        "coco"
    }

    fn requires_segmentation(&self) -> bool {
        true
    }

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        let image_id = self.images.len() as u64 + 1;
        self.images.push(CocoImage {
            id: image_id,
            file_name: portable(&relative_path(&self.dir, &inputs.image_path)),
            width: inputs.image_width,
            height: inputs.image_height,
        });
        for obj in &inputs.objects {
            self.categories
                .entry(obj.class_id)
                .or_insert_with(|| obj.name.clone());
            let mask = obj.mask.as_ref().ok_or_else(|| WriterError::MissingMask {
                frame: inputs.frame_index,
                object: obj.name.clone(),
            })?;
            let Some((x0, y0, x1, y1)) = mask.bounds() else {
                continue;
            };
            self.annotations.push(CocoAnnotation {
                id: self.annotations.len() as u64 + 1,
                image_id,
                category_id: obj.class_id,
                bbox: [
                    x0 as u64,
                    y0 as u64,
                    (x1 - x0 + 1) as u64,
                    (y1 - y0 + 1) as u64,
                ],
                area: mask.count() as u64,
                segmentation: encode_rle(mask),
                iscrowd: 0,
            });
        }
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), WriterError> {
        let doc = CocoDocument {
            images: &self.images,
            categories: self
                .categories
                .iter()
                .map(|(&id, name)| CocoCategory {
                    id,
                    name: name.clone(),
                })
                .collect(),
            annotations: &self.annotations,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("COCO document serializes");
        text.push('\n');
        let path = self.dir.join("annotations.json");
        fs::write(&path, text).map_err(io_err(&path))
    }
}
