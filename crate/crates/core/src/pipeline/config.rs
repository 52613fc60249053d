//! JSON run configuration.
//!
//! Required fields are checked up front and reported together. Optional
//! fields fall back to the defaults below with one warning each; unknown
//! top-level keys produce a warning and are otherwise ignored.
//!
//! | field                      | default      |
//! |----------------------------|--------------|
//! | `frame_rate`               | 10 Hz        |
//! | `seed`                     | 0            |
//! | `noise_sigma`              | 0            |
//! | `output_dir`               | `output`     |
//! | `world_frame`              | `world`      |
//! | `max_attempts`             | 1000         |
//! | `segmentation.num_bg_frames` | 10         |
//! | `segmentation.k`           | 9            |
//! | `segmentation.tau`         | 225          |
//! | `segmentation.masks`       | `isolated`   |

use crate::camera_projection::{CameraModel, CuboidShape, DEFAULT_NEAR_PLANE};
use crate::geometry::{Transform, Vec3};
use crate::occupancy_map::resolve_relative;
use crate::renderer::SubtractorParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("missing required field(s): {}", .0.join(", "))]
    MissingRequired(Vec<String>),
    #[error("field `{field}` has the wrong type: {message}")]
    TypeMismatch { field: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Replay,
    Random,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Replay => "replay",
            Mode::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    /// Child frame name in the pose log.
    pub name: String,
    pub class_id: u32,
    pub cuboid: CuboidShape,
    /// Meters; required in random mode.
    #[serde(default)]
    pub safety_radius: Option<f64>,
    /// Object-frame points.
    #[serde(default)]
    pub keypoints: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default = "default_near")]
    pub near_plane: f64,
    /// Literal `T_world_camera`; takes precedence over `frame`.
    #[serde(default)]
    pub pose: Option<Transform>,
    /// Pose-log frame carrying the camera pose (replay mode).
    #[serde(default)]
    pub frame: Option<String>,
}

fn default_near() -> f64 {
    DEFAULT_NEAR_PLANE
}

impl CameraSpec {
    pub fn model(&self, pose: Transform) -> CameraModel {
        CameraModel {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            pose,
            near_plane: self.near_plane,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WriterKind {
    Darknet,
    Coco,
    Keypoints,
}

impl WriterKind {
    pub fn default_subdir(&self) -> &'static str {
        match self {
            WriterKind::Darknet => "darknet",
            WriterKind::Coco => "coco",
            WriterKind::Keypoints => "keypoints",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WriterParams {
    /// Output subdirectory under `output_dir`.
    #[serde(default)]
    pub subdir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriterSpec {
    pub kind: WriterKind,
    #[serde(default)]
    pub params: WriterParams,
}

/// How per-object masks are produced when a writer asks for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Each object rendered alone through the background subtractor
    /// (amodal masks).
    Isolated,
    /// Depth-ordered id buffer of the full scene (visible pixels only).
    /// Not part of the canonical generation procedure.
    Visibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub num_bg_frames: usize,
    pub k: f64,
    pub tau: f64,
    pub masks: MaskMode,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        let p = SubtractorParams::default();
        Self {
            num_bg_frames: 10,
            k: p.k,
            tau: p.tau,
            masks: MaskMode::Isolated,
        }
    }
}

impl SegmentationConfig {
    pub fn subtractor_params(&self) -> SubtractorParams {
        SubtractorParams {
            k: self.k,
            tau: self.tau,
        }
    }
}

pub const DEFAULT_FRAME_RATE: f64 = 10.0;
pub const DEFAULT_OUTPUT_DIR: &str = "output";
pub const DEFAULT_WORLD_FRAME: &str = "world";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mode: Mode,
    pub pose_log: Option<PathBuf>,
    /// Map metadata sidecar (random mode).
    pub map: Option<PathBuf>,
    pub frame_count: Option<usize>,
    pub frame_rate: f64,
    pub world_frame: String,
    pub objects: Vec<ObjectSpec>,
    pub camera: CameraSpec,
    pub output_dir: PathBuf,
    pub writers: Vec<WriterSpec>,
    pub seed: u64,
    pub noise_sigma: f64,
    pub segmentation: SegmentationConfig,
    pub max_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigWarning {
    Defaulted { field: String, value: String },
    UnknownKey(String),
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigWarning::Defaulted { field, value } => {
                write!(f, "optional field `{field}` not set, using default {value}")
            }
            ConfigWarning::UnknownKey(k) => write!(f, "unknown config key `{k}` ignored"),
        }
    }
}

impl ConfigWarning {
    pub fn field(&self) -> &str {
        match self {
            ConfigWarning::Defaulted { field, .. } | ConfigWarning::UnknownKey(field) => field,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub warnings: Vec<ConfigWarning>,
}

const KNOWN_KEYS: [&str; 15] = [
    "mode",
    "pose_log",
    "map",
    "frame_count",
    "frame_rate",
    "world_frame",
    "objects",
    "camera",
    "output_dir",
    "writers",
    "seed",
    "noise_sigma",
    "segmentation",
    "max_attempts",
    "pose_log_path",
];

struct Fields<'a> {
    map: &'a Map<String, Value>,
    warnings: Vec<ConfigWarning>,
}

impl<'a> Fields<'a> {
    fn parse<T: DeserializeOwned>(field: &str, v: &Value) -> Result<T, ConfigError> {
        serde_json::from_value(v.clone()).map_err(|e| ConfigError::TypeMismatch {
            field: field.into(),
            message: e.to_string(),
        })
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => Self::parse(key, v).map(Some),
        }
    }

    fn or_default<T: DeserializeOwned + fmt::Debug>(
        &mut self,
        key: &str,
        default: T,
    ) -> Result<T, ConfigError> {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => {
                self.warnings.push(ConfigWarning::Defaulted {
                    field: key.into(),
                    value: format!("{default:?}"),
                });
                Ok(default)
            }
        }
    }
}

impl Config {
    /// Parses a config document. Relative paths are resolved against
    /// `base_dir` (the directory holding the config file).
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<LoadedConfig, ConfigError> {
        let value: Value = serde_json::from_str(text)?;
        let Value::Object(map) = &value else {
            return Err(ConfigError::TypeMismatch {
                field: "<root>".into(),
                message: "config must be a JSON object".into(),
            });
        };
        let mut f = Fields {
            map,
            warnings: Vec::new(),
        };
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                f.warnings.push(ConfigWarning::UnknownKey(key.clone()));
            }
        }

        let pose_log: Option<String> = match f.get("pose_log")? {
            Some(p) => Some(p),
            None => f.get("pose_log_path")?,
        };
        let map_path: Option<String> = f.get("map")?;
        let mode = match f.get::<Mode>("mode")? {
            Some(m) => m,
            None => {
                let inferred = if pose_log.is_some() {
                    Some(Mode::Replay)
                } else if map_path.is_some() {
                    Some(Mode::Random)
                } else {
                    None
                };
                match inferred {
                    Some(m) => {
                        f.warnings.push(ConfigWarning::Defaulted {
                            field: "mode".into(),
                            value: format!("{m} (inferred)"),
                        });
                        m
                    }
                    None => return Err(ConfigError::MissingRequired(vec!["mode".into()])),
                }
            }
        };

        let mut missing = Vec::new();
        for key in ["objects", "camera", "writers"] {
            if map.get(key).is_none_or(Value::is_null) {
                missing.push(key.to_string());
            }
        }
        match mode {
            Mode::Replay if pose_log.is_none() => missing.push("pose_log".into()),
            Mode::Random => {
                if map_path.is_none() {
                    missing.push("map".into());
                }
                if map.get("frame_count").is_none_or(Value::is_null) {
                    missing.push("frame_count".into());
                }
            }
            _ => {}
        }
        if !missing.is_empty() {
            return Err(ConfigError::MissingRequired(missing));
        }

        let objects: Vec<ObjectSpec> = f.get("objects")?.unwrap_or_default();
        let camera: CameraSpec = f.get("camera")?.expect("checked above");
        let writers: Vec<WriterSpec> = f.get("writers")?.unwrap_or_default();
        let frame_count: Option<usize> = f.get("frame_count")?;

        let frame_rate = f.or_default("frame_rate", DEFAULT_FRAME_RATE)?;
        let seed = f.or_default("seed", 0u64)?;
        let noise_sigma = f.or_default("noise_sigma", 0.0f64)?;
        let output_dir: String = f.or_default("output_dir", DEFAULT_OUTPUT_DIR.to_string())?;
        let world_frame: String = f.or_default("world_frame", DEFAULT_WORLD_FRAME.to_string())?;
        let max_attempts =
            f.or_default("max_attempts", crate::pose_sampler::DEFAULT_MAX_ATTEMPTS)?;
        let segmentation = {
            let defaults = SegmentationConfig::default();
            let seg_map = match map.get("segmentation") {
                None | Some(Value::Null) => Map::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => {
                    return Err(ConfigError::TypeMismatch {
                        field: "segmentation".into(),
                        message: "expected an object".into(),
                    })
                }
            };
            let mut sf = Fields {
                map: &seg_map,
                warnings: Vec::new(),
            };
            let seg = SegmentationConfig {
                num_bg_frames: sf.or_default("num_bg_frames", defaults.num_bg_frames)?,
                k: sf.or_default("k", defaults.k)?,
                tau: sf.or_default("tau", defaults.tau)?,
                masks: sf.or_default("masks", defaults.masks)?,
            };
            for key in seg_map.keys() {
                if !["num_bg_frames", "k", "tau", "masks"].contains(&key.as_str()) {
                    sf.warnings
                        .push(ConfigWarning::UnknownKey(format!("segmentation.{key}")));
                }
            }
            f.warnings.extend(sf.warnings.into_iter().map(|w| match w {
                ConfigWarning::Defaulted { field, value } => ConfigWarning::Defaulted {
                    field: format!("segmentation.{field}"),
                    value,
                },
                other => other,
            }));
            seg
        };

        let config = Config {
            mode,
            pose_log: pose_log.map(|p| resolve_in(base_dir, &p)),
            map: map_path.map(|p| resolve_in(base_dir, &p)),
            frame_count,
            frame_rate,
            world_frame,
            objects,
            camera,
            output_dir: resolve_in(base_dir, &output_dir),
            writers,
            seed,
            noise_sigma,
            segmentation,
            max_attempts,
        };
        config.validate()?;
        Ok(LoadedConfig {
            config,
            warnings: f.warnings,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.objects.is_empty() {
            return invalid("`objects` must list at least one object".into());
        }
        if self.writers.is_empty() {
            return invalid("`writers` must list at least one writer".into());
        }
        let mut names = BTreeSet::new();
        for o in &self.objects {
            if o.name.is_empty() {
                return invalid("object names must be nonempty".into());
            }
            if !names.insert(o.name.as_str()) {
                return invalid(format!("duplicate object name `{}`", o.name));
            }
            o.cuboid
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("object `{}`: {e}", o.name)))?;
            if self.mode == Mode::Random {
                match o.safety_radius {
                    Some(r) if r > 0.0 => {}
                    Some(r) => {
                        return invalid(format!(
                            "object `{}`: safety_radius must be positive, got {r}",
                            o.name
                        ))
                    }
                    None => {
                        return Err(ConfigError::MissingRequired(vec![format!(
                            "objects[{}].safety_radius",
                            o.name
                        )]))
                    }
                }
            }
        }
        self.camera
            .model(Transform::IDENTITY)
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("camera: {e}")))?;
        match self.mode {
            Mode::Replay if self.camera.pose.is_none() && self.camera.frame.is_none() => {
                return Err(ConfigError::MissingRequired(vec![
                    "camera.pose or camera.frame".into(),
                ]))
            }
            Mode::Random if self.camera.pose.is_none() => {
                return Err(ConfigError::MissingRequired(vec!["camera.pose".into()]))
            }
            _ => {}
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return invalid(format!(
                "frame_rate must be positive, got {}",
                self.frame_rate
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return invalid(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if self.segmentation.num_bg_frames == 0 {
            return invalid("segmentation.num_bg_frames must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return invalid("max_attempts must be at least 1".into());
        }
        let mut dirs = BTreeSet::new();
        for w in &self.writers {
            let d = w
                .params
                .subdir
                .clone()
                .unwrap_or_else(|| w.kind.default_subdir().into());
            if !dirs.insert(d.clone()) {
                return invalid(format!("two writers share output subdirectory `{d}`"));
            }
        }
        Ok(())
    }

    pub fn writer_dir(&self, spec: &WriterSpec) -> PathBuf {
        self.output_dir.join(
            spec.params
                .subdir
                .as_deref()
                .unwrap_or(spec.kind.default_subdir()),
        )
    }
}

fn resolve_in(base_dir: &Path, p: &str) -> PathBuf {
    resolve_relative(&base_dir.join("config.json"), p)
}

/// Reads and validates a config file, logging each warning.
pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let loaded = Config::from_json_str(&text, base)?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(loaded)
}
