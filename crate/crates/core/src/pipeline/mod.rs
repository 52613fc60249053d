//! Top-level generation loops.
//!
//! Replay mode steps through a recorded pose log at a fixed frame rate;
//! random mode places every object on an occupancy map for each datapoint.
//! Both share the per-frame routine: render, compute labels, optionally
//! compute masks, then hand the frame to every writer in order.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! images/frame_000000.ppm
//! masks/mask_000000_obj00.pgm      (only when a writer needs masks)
//! <writer subdir>/...
//! ```

mod config;
mod progress;

pub use config::{
    load_config, CameraSpec, Config, ConfigError, ConfigWarning, LoadedConfig, MaskMode, Mode,
    ObjectSpec, SegmentationConfig, WriterKind, WriterParams, WriterSpec,
};
pub use progress::ProgressTracker;

use crate::camera_projection::{
    cuboid_vertices, darknet_normalize, project_cuboid_to_rect, project_point, CameraModel,
};
use crate::format_writers::{
    CocoWriter, DarknetWriter, FormatWriter, KeypointWriter, LabelInputs, ObjectLabel, WriterError,
    WriterRegistry,
};
use crate::geometry::{Quat, Transform, Vec3};
use crate::occupancy_map::{load_map_file, GridMap, MapError};
use crate::pose_sampler::{mark_disc_occupied, FootprintSpec, PoseSampler};
use crate::renderer::{
    filter_mask_with_bbox, isolated_object_masks, render_id_buffer, render_scene, train_background,
    BackgroundSubtractor, Mask, ObjectState, RenderError, RenderOptions, SceneObject,
    SceneSnapshot,
};
use crate::rng::{derive_seed, stream};
use crate::scene_timeline::{
    parse_pose_log, sample_times, ReplayClock, TimelineError, TransformTree,
};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("pose log {path}: {source}")]
    PoseLog {
        path: PathBuf,
        source: TimelineError,
    },
    #[error("frame {frame}: {source}")]
    Timeline { frame: usize, source: TimelineError },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("datapoint {datapoint}: no free pose for object `{object}` after {attempts} attempts")]
    NoFreePose {
        object: String,
        datapoint: usize,
        attempts: u32,
    },
    #[error("frame {frame}: {source}")]
    Render { frame: usize, source: RenderError },
    #[error("frame {frame:?}: {source}")]
    Writer {
        frame: Option<usize>,
        source: WriterError,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is for {configured} mode, cannot run it as {requested}")]
    ModeMismatch { configured: Mode, requested: Mode },
}

impl PipelineError {
    /// Process exit code by error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::ModeMismatch { .. } => 2,
            PipelineError::PoseLog { .. } | PipelineError::Map(_) => 3,
            PipelineError::Timeline { .. }
            | PipelineError::NoFreePose { .. }
            | PipelineError::Render { .. } => 4,
            PipelineError::Writer { .. } | PipelineError::Io { .. } => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: usize,
    /// `(writer name, files in its output directory)` in registration order.
    pub writer_files: Vec<(String, usize)>,
    pub wall_time: Duration,
    pub subtractor_invocations: u64,
    pub background_trainings: u64,
    /// Percentages emitted to the progress callback, in order.
    pub progress: Vec<u32>,
}

pub fn build_writer(spec: &WriterSpec, dir: &Path) -> Result<Box<dyn FormatWriter>, WriterError> {
    Ok(match spec.kind {
        WriterKind::Darknet => Box::new(DarknetWriter::new(dir)?),
        WriterKind::Coco => Box::new(CocoWriter::new(dir)?),
        WriterKind::Keypoints => Box::new(KeypointWriter::new(dir)?),
    })
}

pub fn build_registry(config: &Config) -> Result<WriterRegistry, PipelineError> {
    let mut registry = WriterRegistry::new();
    for spec in &config.writers {
        let dir = config.writer_dir(spec);
        let writer = build_writer(spec, &dir).map_err(|source| PipelineError::Writer {
            frame: None,
            source,
        })?;
        registry.register(dir, writer);
    }
    Ok(registry)
}

fn open_pose_log(path: &Path) -> Result<TransformTree, PipelineError> {
    let file = fs::File::open(path).map_err(|e| PipelineError::PoseLog {
        path: path.to_path_buf(),
        source: TimelineError::Io(e),
    })?;
    parse_pose_log(BufReader::new(file)).map_err(|source| PipelineError::PoseLog {
        path: path.to_path_buf(),
        source,
    })
}

struct ReplayPlan {
    tree: TransformTree,
    times: Vec<f64>,
}

fn plan_replay(config: &Config) -> Result<ReplayPlan, PipelineError> {
    let path = config
        .pose_log
        .as_deref()
        .ok_or_else(|| ConfigError::MissingRequired(vec!["pose_log".into()]))?;
    let tree = open_pose_log(path)?;
    let ctx = |source| PipelineError::PoseLog {
        path: path.to_path_buf(),
        source,
    };
    let mut required: Vec<&str> = config.objects.iter().map(|o| o.name.as_str()).collect();
    if config.camera.pose.is_none() {
        if let Some(f) = config.camera.frame.as_deref() {
            required.push(f);
        }
    }
    if !tree.has_frame(&config.world_frame) {
        return Err(ctx(TimelineError::UnknownFrame(config.world_frame.clone())));
    }
    let range = tree.valid_time_range(&required).map_err(ctx)?;
    let times = if range.is_static {
        vec![range.start]
    } else {
        sample_times(&ReplayClock {
            start_time: range.start,
            end_time: range.end,
            frame_rate: config.frame_rate,
        })
    };
    Ok(ReplayPlan { tree, times })
}

/// Validates inputs and returns the number of frames a run would produce,
/// without writing anything.
pub fn dry_run(config: &Config) -> Result<usize, PipelineError> {
    config.validate()?;
    match config.mode {
        Mode::Replay => Ok(plan_replay(config)?.times.len()),
        Mode::Random => {
            let path = config
                .map
                .as_deref()
                .ok_or_else(|| ConfigError::MissingRequired(vec!["map".into()]))?;
            let map = load_map_file(path)?;
            if map.free_count() == 0 {
                log::warn!("map {} has no free cells", path.display());
            }
            Ok(config.frame_count.unwrap_or(0))
        }
    }
}

/// Mask state for a run in which some writer needs segmentation.
struct Segmentation {
    subtractor: Option<(Transform, BackgroundSubtractor)>,
    retired_applications: u64,
    trainings: u64,
}

impl Segmentation {
    fn applications(&self) -> u64 {
        self.retired_applications
            + self
                .subtractor
                .as_ref()
                .map_or(0, |(_, s)| s.applications())
    }
}

/// Runs one configured generation job.
pub struct Generator {
    config: Config,
    registry: WriterRegistry,
    progress: Box<dyn FnMut(u32)>,
}

impl Generator {
    /// Builds the writers named in the config (creating their directories).
    pub fn new(config: Config) -> Result<Self, PipelineError> {
        config.validate()?;
        let registry = build_registry(&config)?;
        Ok(Self::with_registry(config, registry))
    }

    /// Uses caller-supplied writers instead of the config's writer list.
    pub fn with_registry(config: Config, registry: WriterRegistry) -> Self {
        Self {
            config,
            registry,
            progress: Box::new(|pct| log::info!("{pct}% complete")),
        }
    }

    pub fn on_progress(mut self, f: impl FnMut(u32) + 'static) -> Self {
        self.progress = Box::new(f);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn run(self) -> Result<RunReport, PipelineError> {
        match self.config.mode {
            Mode::Replay => self.run_replay(),
            Mode::Random => self.run_random(),
        }
    }

    fn check_mode(&self, requested: Mode) -> Result<(), PipelineError> {
        if self.config.mode != requested {
            return Err(PipelineError::ModeMismatch {
                configured: self.config.mode,
                requested,
            });
        }
        Ok(())
    }

    pub fn run_replay(self) -> Result<RunReport, PipelineError> {
        self.check_mode(Mode::Replay)?;
        let plan = plan_replay(&self.config)?;
        let mut run = Run::start(self, plan.times.len())?;
        for (index, &t) in plan.times.iter().enumerate() {
            let timeline = |source| PipelineError::Timeline {
                frame: index,
                source,
            };
            let cfg = &run.gen.config;
            let camera_pose = match (&cfg.camera.pose, &cfg.camera.frame) {
                (Some(p), _) => *p,
                (None, Some(frame)) => plan
                    .tree
                    .lookup_transform(&cfg.world_frame, frame, t)
                    .map_err(timeline)?,
                (None, None) => unreachable!("validated camera spec"),
            };
            let poses = cfg
                .objects
                .iter()
                .map(|o| plan.tree.lookup_transform(&cfg.world_frame, &o.name, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(timeline)?;
            run.frame(index, t, poses, camera_pose)?;
        }
        run.finish()
    }

    pub fn run_random(self) -> Result<RunReport, PipelineError> {
        self.check_mode(Mode::Random)?;
        let path = self
            .config
            .map
            .clone()
            .ok_or_else(|| ConfigError::MissingRequired(vec!["map".into()]))?;
        let map = load_map_file(&path)?;
        let count = self.config.frame_count.unwrap_or(0);
        let mut sampler = PoseSampler::new(
            derive_seed(self.config.seed, stream::POSE_SAMPLER, 0),
            self.config.max_attempts,
        );
        let camera_pose = self.config.camera.pose.expect("validated camera pose");
        let mut run = Run::start(self, count)?;
        for index in 0..count {
            let poses = place_objects(&run.gen.config, &map, &mut sampler, index)?;
            run.frame(index, index as f64, poses, camera_pose)?;
        }
        run.finish()
    }
}

/// Samples every object in order on a scratch copy of `map`, blocking each
/// placed footprint for the objects after it.
fn place_objects(
    config: &Config,
    map: &GridMap,
    sampler: &mut PoseSampler,
    datapoint: usize,
) -> Result<Vec<Transform>, PipelineError> {
    let mut scratch = map.clone();
    let mut poses = Vec::with_capacity(config.objects.len());
    for obj in &config.objects {
        let radius = obj.safety_radius.expect("validated safety radius");
        let footprint = FootprintSpec::new(radius).map_err(|e| {
            PipelineError::Config(ConfigError::Invalid(format!("object `{}`: {e}", obj.name)))
        })?;
        let placement =
            sampler
                .sample_pose(&scratch, &footprint)
                .map_err(|_| PipelineError::NoFreePose {
                    object: obj.name.clone(),
                    datapoint,
                    attempts: sampler.max_attempts(),
                })?;
        mark_disc_occupied(
            &mut scratch,
            placement.cell,
            footprint.radius_cells(map.resolution()),
        );
        let p = placement.pose;
        poses.push(Transform::new(
            Vec3::new(p.x, p.y, 0.0),
            Quat::from_yaw(p.theta),
        ));
    }
    Ok(poses)
}

/// State of a run in progress.
struct Run {
    gen: Generator,
    total: usize,
    images_dir: PathBuf,
    masks_dir: PathBuf,
    segmentation: Option<Segmentation>,
    tracker: ProgressTracker,
    progress_log: Vec<u32>,
    started: Instant,
}

fn create_dir(path: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl Run {
    fn start(gen: Generator, total: usize) -> Result<Self, PipelineError> {
        let images_dir = gen.config.output_dir.join("images");
        let masks_dir = gen.config.output_dir.join("masks");
        create_dir(&images_dir)?;
        let segmentation = gen
            .registry
            .any_requires_segmentation()
            .then_some(Segmentation {
                subtractor: None,
                retired_applications: 0,
                trainings: 0,
            });
        if segmentation.is_some() {
            create_dir(&masks_dir)?;
        }
        Ok(Self {
            gen,
            total,
            images_dir,
            masks_dir,
            segmentation,
            tracker: ProgressTracker::new(total),
            progress_log: Vec::new(),
            started: Instant::now(),
        })
    }

    fn scene_objects(&self, poses: &[Transform]) -> Vec<SceneObject> {
        self.gen
            .config
            .objects
            .iter()
            .zip(poses)
            .map(|(spec, pose)| SceneObject::new(spec.cuboid, *pose, spec.class_id))
            .collect()
    }

    fn masks(
        &mut self,
        index: usize,
        objects: &[SceneObject],
        camera: &CameraModel,
    ) -> Result<Option<Vec<Mask>>, PipelineError> {
        let cfg = &self.gen.config;
        let Some(seg) = self.segmentation.as_mut() else {
            return Ok(None);
        };
        let render_err = |source| PipelineError::Render {
            frame: index,
            source,
        };
        if cfg.segmentation.masks == MaskMode::Visibility {
            let ids = render_id_buffer(objects, camera);
            let masks = objects
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let rect =
                        project_cuboid_to_rect(camera, &o.shape, &camera.object_in_camera(&o.pose));
                    match rect {
                        Some(r) => filter_mask_with_bbox(&ids.mask_for(i as u32), &r),
                        None => Mask::empty(ids.width, ids.height),
                    }
                })
                .collect();
            return Ok(Some(masks));
        }
        let stale = seg
            .subtractor
            .as_ref()
            .is_none_or(|(pose, _)| *pose != camera.pose);
        if stale {
            // All objects out of view while the background is learned.
            let hidden: Vec<SceneObject> = objects
                .iter()
                .map(|o| SceneObject {
                    visible: false,
                    ..*o
                })
                .collect();
            let train_seed = derive_seed(cfg.seed, stream::BACKGROUND_NOISE, seg.trainings);
            let frames: Vec<_> = (0..cfg.segmentation.num_bg_frames)
                .map(|k| {
                    render_scene(
                        &hidden,
                        camera,
                        &RenderOptions {
                            noise_sigma: cfg.noise_sigma,
                            seed: derive_seed(train_seed, stream::BACKGROUND_NOISE, k as u64),
                        },
                    )
                })
                .collect();
            let model = train_background(&frames).map_err(render_err)?;
            seg.trainings += 1;
            if let Some((_, old)) = seg.subtractor.take() {
                seg.retired_applications += old.applications();
            }
            seg.subtractor = Some((
                camera.pose,
                BackgroundSubtractor::new(model, cfg.segmentation.subtractor_params()),
            ));
        }
        let (_, subtractor) = seg.subtractor.as_mut().expect("trained above");
        let masks = isolated_object_masks(
            objects,
            camera,
            subtractor,
            &RenderOptions {
                noise_sigma: cfg.noise_sigma,
                seed: derive_seed(cfg.seed, stream::ISOLATION_NOISE, index as u64),
            },
        )
        .map_err(render_err)?;
        Ok(Some(masks))
    }

    fn frame(
        &mut self,
        index: usize,
        time: f64,
        poses: Vec<Transform>,
        camera_pose: Transform,
    ) -> Result<(), PipelineError> {
        let camera = self.gen.config.camera.model(camera_pose);
        let objects = self.scene_objects(&poses);
        let frame = render_scene(
            &objects,
            &camera,
            &RenderOptions {
                noise_sigma: self.gen.config.noise_sigma,
                seed: derive_seed(self.gen.config.seed, stream::FRAME_NOISE, index as u64),
            },
        );
        let image_path = self.images_dir.join(format!("frame_{index:06}.ppm"));
        write_file(&image_path, &frame.to_ppm())?;

        let masks = self.masks(index, &objects, &camera)?;
        if let Some(masks) = &masks {
            for (i, m) in masks.iter().enumerate() {
                let p = self
                    .masks_dir
                    .join(format!("mask_{index:06}_obj{i:02}.pgm"));
                write_file(&p, &m.to_pgm())?;
            }
        }

        let snapshot = self.snapshot(time, &objects, camera, frame, masks);
        let inputs = self.label_inputs(index, image_path, &snapshot);
        self.gen
            .registry
            .write_scene(&inputs)
            .map_err(|source| PipelineError::Writer {
                frame: Some(index),
                source,
            })?;

        if let Some(pct) = self.tracker.update(index + 1) {
            self.progress_log.push(pct);
            (self.gen.progress)(pct);
        }
        Ok(())
    }

    fn snapshot(
        &self,
        time: f64,
        objects: &[SceneObject],
        camera: CameraModel,
        frame: crate::renderer::Frame,
        masks: Option<Vec<Mask>>,
    ) -> SceneSnapshot {
        let specs = &self.gen.config.objects;
        let mut states = Vec::with_capacity(objects.len());
        let mut vertices = Vec::with_capacity(objects.len());
        let mut keypoints = Vec::with_capacity(objects.len());
        for (spec, obj) in specs.iter().zip(objects) {
            let to_cam = camera.object_in_camera(&obj.pose);
            let visible = project_cuboid_to_rect(&camera, &obj.shape, &to_cam).is_some();
            states.push(ObjectState {
                name: spec.name.clone(),
                class_id: spec.class_id,
                world_pose: obj.pose,
                visible,
            });
            vertices.push(
                cuboid_vertices(&obj.shape).map(|p| project_point(&camera, to_cam.apply(p)).ok()),
            );
            keypoints.push(
                spec.keypoints
                    .iter()
                    .map(|&k| project_point(&camera, to_cam.apply(k)).ok())
                    .collect(),
            );
        }
        SceneSnapshot {
            time,
            objects: states,
            camera,
            frame,
            masks,
            projected_vertices: vertices,
            projected_keypoints: keypoints,
        }
    }

    fn label_inputs(&self, index: usize, image_path: PathBuf, snap: &SceneSnapshot) -> LabelInputs {
        let cam = &snap.camera;
        let objects = self
            .gen
            .config
            .objects
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let to_cam = cam.object_in_camera(&snap.objects[i].world_pose);
                let rect = project_cuboid_to_rect(cam, &spec.cuboid, &to_cam);
                ObjectLabel {
                    name: spec.name.clone(),
                    class_id: spec.class_id,
                    rect,
                    darknet: rect
                        .map(|r| darknet_normalize(&r, spec.class_id, cam.width, cam.height)),
                    vertices: snap.projected_vertices[i],
                    keypoints: snap.projected_keypoints[i].clone(),
                    mask: snap.masks.as_ref().map(|m| m[i].clone()),
                }
            })
            .collect();
        LabelInputs {
            frame_index: index,
            time: snap.time,
            image_path,
            image_width: cam.width,
            image_height: cam.height,
            camera: *cam,
            objects,
        }
    }

    fn finish(mut self) -> Result<RunReport, PipelineError> {
        self.gen
            .registry
            .finalize()
            .map_err(|source| PipelineError::Writer {
                frame: None,
                source,
            })?;
        if let Some(pct) = self.tracker.finish() {
            self.progress_log.push(pct);
            (self.gen.progress)(pct);
        }
        let writer_files = self
            .gen
            .registry
            .outputs()
            .map(|(name, dir)| {
                let n = fs::read_dir(dir)
                    .map(|rd| {
                        rd.filter_map(Result::ok)
                            .filter(|e| e.path().is_file())
                            .count()
                    })
                    .unwrap_or(0);
                (name.to_string(), n)
            })
            .collect();
        let (subtractor_invocations, background_trainings) = self
            .segmentation
            .as_ref()
            .map_or((0, 0), |s| (s.applications(), s.trainings));
        Ok(RunReport {
            frames: self.total,
            writer_files,
            wall_time: self.started.elapsed(),
            subtractor_invocations,
            background_trainings,
            progress: self.progress_log,
        })
    }
}

/// Runs a replay-mode config with the writers it names.
pub fn run_replay(config: &Config) -> Result<RunReport, PipelineError> {
    Generator::new(config.clone())?.run_replay()
}

/// Runs a random-mode config with the writers it names.
pub fn run_random(config: &Config) -> Result<RunReport, PipelineError> {
    Generator::new(config.clone())?.run_random()
}
