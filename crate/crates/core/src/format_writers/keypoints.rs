use super::{io_err, FormatWriter, LabelInputs, WriterError};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

/// `frame_%06d_keypoints.txt`: one line per object,
/// `<class_id> <name> u1 v1 u2 v2 ...`, in image pixels. Keypoints behind
/// the near plane are written as `nan nan`.
pub struct KeypointWriter {
    dir: PathBuf,
}

impl KeypointWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, WriterError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn body(inputs: &LabelInputs) -> String {
        let mut out = String::new();
        for obj in &inputs.objects {
            write!(out, "{} {}", obj.class_id, obj.name).unwrap();
            for kp in &obj.keypoints {
                match kp {
                    Some((u, v)) => write!(out, " {u:.6} {v:.6}").unwrap(),
                    None => out.push_str(" nan nan"),
                }
            }
            out.push('\n');
        }
        out
    }
}

impl FormatWriter for KeypointWriter {
    fn name(&self) -> &str {
        "keypoints"
    }

    fn requires_segmentation(&self) -> bool {
        false
    }

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        let path = self
            .dir
            .join(format!("frame_{:06}_keypoints.txt", inputs.frame_index));
        fs::write(&path, Self::body(inputs)).map_err(io_err(&path))
    }

    fn finalize(&mut self) -> Result<(), WriterError> {
        Ok(())
    }
}
