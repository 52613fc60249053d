#![allow(dead_code)]

//! Shared fixtures and independent oracles. Geometry here goes through
//! nalgebra rather than the crate's own quaternion code.

use nalgebra::{Isometry3, Matrix4, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::path::Path;
use synthscene::camera_projection::{CameraModel, CuboidShape};
use synthscene::geometry::{Quat, Transform, Vec3};
use synthscene::renderer::SceneObject;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn to_iso(t: &Transform) -> Isometry3<f64> {
    let q = t.rotation;
    Isometry3::from_parts(
        Translation3::new(t.translation.x, t.translation.y, t.translation.z),
        UnitQuaternion::from_quaternion(Quaternion::new(q.w, q.x, q.y, q.z)),
    )
}

pub fn to_matrix(t: &Transform) -> Matrix4<f64> {
    to_iso(t).to_homogeneous()
}

pub fn apply_matrix(m: &Matrix4<f64>, p: Vec3) -> Vec3 {
    let h = m * nalgebra::Vector4::new(p.x, p.y, p.z, 1.0);
    Vec3::new(h.x, h.y, h.z)
}

pub fn random_unit_quat(r: &mut impl Rng) -> Quat {
    loop {
        let q = Quat::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return q.normalized();
        }
    }
}

pub fn random_transform(r: &mut impl Rng, spread: f64) -> Transform {
    Transform::new(
        Vec3::new(
            r.random_range(-spread..spread),
            r.random_range(-spread..spread),
            r.random_range(-spread..spread),
        ),
        random_unit_quat(r),
    )
}

pub fn desk_camera() -> CameraModel {
    CameraModel::new(200.0, 200.0, 160.0, 120.0, 320, 240)
}

/// 1-5 randomly sized and oriented cuboids fully in front of the camera
/// (the camera sits at the world origin looking down +z).
pub fn random_scene(r: &mut impl Rng, max_objects: usize) -> Vec<SceneObject> {
    let n = r.random_range(1..=max_objects);
    (0..n)
        .map(|i| {
            let shape = CuboidShape::new(
                r.random_range(0.2..1.5),
                r.random_range(0.2..1.5),
                r.random_range(0.2..1.5),
            )
            .with_offset(Transform::new(
                Vec3::new(
                    r.random_range(-0.2..0.2),
                    r.random_range(-0.2..0.2),
                    r.random_range(-0.2..0.2),
                ),
                random_unit_quat(r),
            ));
            let pose = Transform::new(
                Vec3::new(
                    r.random_range(-2.5..2.5),
                    r.random_range(-2.0..2.0),
                    r.random_range(3.0..10.0),
                ),
                random_unit_quat(r),
            );
            SceneObject::new(shape, pose, i as u32)
        })
        .collect()
}

/// Depth along the pixel ray to the nearest cuboid surface, by slab test.
pub fn ray_hit_depth(cam: &CameraModel, obj: &SceneObject, u: f64, v: f64) -> Option<f64> {
    let dir_cam = Vector3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
    let cam_to_box =
        (to_iso(&cam.pose).inverse() * to_iso(&obj.pose) * to_iso(&obj.shape.offset)).inverse();
    let o = cam_to_box * Point3::origin();
    let d = cam_to_box * dir_cam;
    let half = [
        obj.shape.size.x / 2.0,
        obj.shape.size.y / 2.0,
        obj.shape.size.z / 2.0,
    ];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let a = (-half[k] - o[k]) / d[k];
        let b = (half[k] - o[k]) / d[k];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    // the ray parameter equals camera-frame depth since dir_cam.z == 1
    (t0 <= t1 && t0 > 0.0).then_some(t0)
}

/// Nearest object index per pixel center.
pub fn ray_cast_ids(cam: &CameraModel, objects: &[SceneObject]) -> Vec<Option<u32>> {
    let mut ids = Vec::with_capacity((cam.width * cam.height) as usize);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);
            let best = objects
                .iter()
                .enumerate()
                .filter(|(_, o)| o.visible)
                .filter_map(|(i, o)| ray_hit_depth(cam, o, u, v).map(|d| (i, d)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            ids.push(best.map(|(i, _)| i as u32));
        }
    }
    ids
}

pub fn write_text(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// Pose log with `objects` moving linearly for `duration` seconds, sampled
/// at `sample_rate`, plus a static camera edge `world -> cam`.
pub fn linear_motion_log(
    objects: &[(&str, Vec3, Vec3)],
    duration: f64,
    sample_rate: f64,
) -> String {
    use synthscene::scene_timeline::PoseLogLine;
    let mut lines = vec![PoseLogLine::new(None, "world", "cam", &Transform::IDENTITY).to_json()];
    let steps = (duration * sample_rate).round() as usize;
    for (name, from, to) in objects {
        for k in 0..=steps {
            let s = k as f64 / steps as f64;
            let t = k as f64 / sample_rate;
            let pose = Transform::new(from.lerp(*to, s), Quat::from_yaw(0.3 * s));
            lines.push(PoseLogLine::new(Some(t), "world", name, &pose).to_json());
        }
    }
    lines.join("\n") + "\n"
}

/// Replay config JSON with a literal camera looking down +z from the origin.
pub fn replay_config_json(
    pose_log: &str,
    objects: &[(&str, u32)],
    writers: &[&str],
    extra: &str,
) -> String {
    let objs: Vec<String> = objects
        .iter()
        .map(|(name, class)| {
            format!(
                r#"{{"name": "{name}", "class_id": {class}, "cuboid": {{"size": [0.8, 0.8, 0.8]}},
                    "keypoints": [[0, 0, 0], [0.4, 0.4, 0.4]]}}"#
            )
        })
        .collect();
    let ws: Vec<String> = writers
        .iter()
        .map(|w| format!(r#"{{"kind": "{w}"}}"#))
        .collect();
    format!(
        r#"{{
  "mode": "replay",
  "pose_log": "{pose_log}",
  "objects": [{}],
  "camera": {{"fx": 200, "fy": 200, "cx": 160, "cy": 120, "width": 320, "height": 240,
             "pose": {{"translation": [0, 0, 0], "rotation": [0, 0, 0, 1]}}}},
  "writers": [{}],
  "output_dir": "out"{extra}
}}"#,
        objs.join(", "),
        ws.join(", ")
    )
}
