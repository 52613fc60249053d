use super::{io_err, portable, relative_path, FormatWriter, LabelInputs, WriterError};
use std::fs;
use std::path::PathBuf;

/// One `frame_%06d.txt` per frame (`class cx cy w h`, six decimals) and a
/// `train_list.txt` of image paths relative to the output directory.
pub struct DarknetWriter {
    dir: PathBuf,
    images: Vec<String>,
}

impl DarknetWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, WriterError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self {
            dir,
            images: Vec::new(),
        })
    }

    pub fn label_body(inputs: &LabelInputs) -> String {
        inputs
            .objects
            .iter()
            .filter_map(|o| o.darknet)
            .map(|b| format!("{b}\n"))
            .collect()
    }
}

impl FormatWriter for DarknetWriter {
    fn name(&self) -> &str {
        "darknet"
    }

    fn requires_segmentation(&self) -> bool {
        false
    }

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        let path = self
            .dir
            .join(format!("frame_{:06}.txt", inputs.frame_index));
        fs::write(&path, Self::label_body(inputs)).map_err(io_err(&path))?;
        self.images
            .push(portable(&relative_path(&self.dir, &inputs.image_path)));
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), WriterError> {
        let path = self.dir.join("train_list.txt");
        let body: String = self.images.iter().map(|p| format!("{p}\n")).collect();
        fs::write(&path, body).map_err(io_err(&path))
    }
}
