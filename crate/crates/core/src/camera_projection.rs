//! Pinhole projection and the label geometry built on it.
//!
//! Camera frame convention: +z forward, +x right, +y down. Pixel `(i, j)`
//! covers `[i, i+1) x [j, j+1)` in continuous image coordinates, so its
//! center is `(i + 0.5, j + 0.5)`.

use crate::geometry::{Transform, Vec3};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub use crate::geometry::transform_points;

pub const DEFAULT_NEAR_PLANE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("point at depth {z} is in front of the near plane {near}")]
    BehindCamera { z: f64, near: f64 },
}

fn default_near_plane() -> f64 {
    DEFAULT_NEAR_PLANE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// `T_world_camera`.
    #[serde(default)]
    pub pose: Transform,
    #[serde(default = "default_near_plane")]
    pub near_plane: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose: Transform::IDENTITY,
            near_plane: DEFAULT_NEAR_PLANE,
        }
    }

    pub fn with_pose(mut self, pose: Transform) -> Self {
        self.pose = pose;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(format!(
                "focal lengths must be positive ({}, {})",
                self.fx, self.fy
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err("image dimensions must be at least 1".into());
        }
        if !(self.near_plane > 0.0) {
            return Err(format!(
                "near plane must be positive, got {}",
                self.near_plane
            ));
        }
        Ok(())
    }

    /// `T_camera_object` for an object at `world_pose` (`T_world_object`).
    pub fn object_in_camera(&self, world_pose: &Transform) -> Transform {
        self.pose.inverse().compose(world_pose)
    }

    /// Projection without the near-plane check; `z` must be positive.
    pub(crate) fn project_unchecked(&self, p: Vec3) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

pub fn project_point(cam: &CameraModel, p_cam: Vec3) -> Result<(f64, f64), ProjectionError> {
    if !(p_cam.z >= cam.near_plane) {
        return Err(ProjectionError::BehindCamera {
            z: p_cam.z,
            near: cam.near_plane,
        });
    }
    Ok(cam.project_unchecked(p_cam))
}

/// Box circumscribing an object, centered at `offset` in the object frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuboidShape {
    /// (length, width, height) along the object x, y, z axes.
    pub size: Vec3,
    #[serde(default)]
    pub offset: Transform,
}

impl CuboidShape {
    pub fn new(length: f64, width: f64, height: f64) -> Self {
        Self {
            size: Vec3::new(length, width, height),
            offset: Transform::IDENTITY,
        }
    }

    pub fn with_offset(mut self, offset: Transform) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let s = self.size;
        if s.x > 0.0 && s.y > 0.0 && s.z > 0.0 {
            Ok(())
        } else {
            Err(format!(
                "cuboid dimensions must be positive, got {:?}",
                [s.x, s.y, s.z]
            ))
        }
    }
}

/// Corner index bits: bit 0 selects +x, bit 1 +y, bit 2 +z.
pub const CUBOID_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// The 8 corners in the object frame, indexed as in [`CUBOID_EDGES`].
pub fn cuboid_vertices(shape: &CuboidShape) -> [Vec3; 8] {
    let h = shape.size * 0.5;
    std::array::from_fn(|i| {
        let corner = Vec3::new(
            if i & 1 != 0 { h.x } else { -h.x },
            if i & 2 != 0 { h.y } else { -h.y },
            if i & 4 != 0 { h.z } else { -h.z },
        );
        shape.offset.apply(corner)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl PixelRect {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.x_min && u <= self.x_max && v >= self.y_min && v <= self.y_max
    }

    /// Smallest rectangle around `points`; None for an empty iterator.
    pub fn bounding<I: IntoIterator<Item = (f64, f64)>>(points: I) -> Option<PixelRect> {
        points.into_iter().fold(None, |acc, (u, v)| {
            Some(match acc {
                None => PixelRect {
                    x_min: u,
                    y_min: v,
                    x_max: u,
                    y_max: v,
                },
                Some(r) => PixelRect {
                    x_min: r.x_min.min(u),
                    y_min: r.y_min.min(v),
                    x_max: r.x_max.max(u),
                    y_max: r.y_max.max(v),
                },
            })
        })
    }

    /// Intersection with the image `[0, width] x [0, height]`; None when no
    /// area remains.
    pub fn clamp_to_image(&self, width: u32, height: u32) -> Option<PixelRect> {
        let r = PixelRect {
            x_min: self.x_min.max(0.0),
            y_min: self.y_min.max(0.0),
            x_max: self.x_max.min(width as f64),
            y_max: self.y_max.min(height as f64),
        };
        (r.x_min < r.x_max && r.y_min < r.y_max).then_some(r)
    }
}

/// Points of the cuboid's edges that survive clipping at the near plane:
/// the corners in front of it plus the crossing points of straddling edges.
pub fn clip_cuboid_edges(corners_cam: &[Vec3; 8], near: f64) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = corners_cam
        .iter()
        .copied()
        .filter(|p| p.z >= near)
        .collect();
    for &(a, b) in &CUBOID_EDGES {
        let (pa, pb) = (corners_cam[a], corners_cam[b]);
        if (pa.z >= near) != (pb.z >= near) {
            let s = (near - pa.z) / (pb.z - pa.z);
            let mut p = pa.lerp(pb, s);
            p.z = near;
            pts.push(p);
        }
    }
    pts
}

/// Image rectangle circumscribing the projected cuboid, clamped to the image.
/// `None` means the object is not visible.
pub fn project_cuboid_to_rect(
    cam: &CameraModel,
    shape: &CuboidShape,
    object_in_camera: &Transform,
) -> Option<PixelRect> {
    let corners = cuboid_vertices(shape).map(|p| object_in_camera.apply(p));
    let pts = clip_cuboid_edges(&corners, cam.near_plane);
    PixelRect::bounding(pts.into_iter().map(|p| cam.project_unchecked(p)))?
        .clamp_to_image(cam.width, cam.height)
}

/// Darknet label: class id plus center and size as image fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarknetBox {
    pub class_id: u32,
    pub cx_frac: f64,
    pub cy_frac: f64,
    pub w_frac: f64,
    pub h_frac: f64,
}

impl fmt::Display for DarknetBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6} {:.6} {:.6} {:.6}",
            self.class_id, self.cx_frac, self.cy_frac, self.w_frac, self.h_frac
        )
    }
}

pub fn darknet_normalize(rect: &PixelRect, class_id: u32, width: u32, height: u32) -> DarknetBox {
    let (w, h) = (width as f64, height as f64);
    let frac = |v: f64| v.clamp(0.0, 1.0);
    DarknetBox {
        class_id,
        cx_frac: frac((rect.x_min + rect.x_max) * 0.5 / w),
        cy_frac: frac((rect.y_min + rect.y_max) * 0.5 / h),
        w_frac: frac(rect.width() / w),
        h_frac: frac(rect.height() / h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        CameraModel::new(100.0, 100.0, 160.0, 120.0, 320, 240)
    }

    #[test]
    fn cube_corners() {
        let v = cuboid_vertices(&CuboidShape::new(1.0, 1.0, 1.0));
        for p in v {
            assert_eq!([p.x.abs(), p.y.abs(), p.z.abs()], [0.5; 3]);
        }
        let v = cuboid_vertices(&CuboidShape::new(2.0, 4.0, 6.0));
        assert!(v
            .iter()
            .all(|p| p.x.abs() == 1.0 && p.y.abs() == 2.0 && p.z.abs() == 3.0));
        let raised = CuboidShape::new(1.0, 1.0, 1.0)
            .with_offset(Transform::from_translation(Vec3::new(0.0, 0.0, 1.0)));
        let mut zs: Vec<f64> = cuboid_vertices(&raised).iter().map(|p| p.z).collect();
        zs.sort_by(f64::total_cmp);
        zs.dedup();
        assert_eq!(zs, vec![0.5, 1.5]);
    }

    #[test]
    fn projection_examples() {
        let c = cam();
        assert_eq!(
            project_point(&c, Vec3::new(0.0, 0.0, 1.0)).unwrap(),
            (160.0, 120.0)
        );
        assert_eq!(
            project_point(&c, Vec3::new(1.0, 0.0, 2.0)).unwrap(),
            (210.0, 120.0)
        );
        assert!(matches!(
            project_point(&c, Vec3::new(0.0, 0.0, 0.001)),
            Err(ProjectionError::BehindCamera { .. })
        ));
    }

    #[test]
    fn cube_on_axis() {
        let pose = Transform::from_translation(Vec3::new(0.0, 0.0, 5.0));
        let r = project_cuboid_to_rect(&cam(), &CuboidShape::new(1.0, 1.0, 1.0), &pose).unwrap();
        // nearest face at z = 4.5 dominates: 160 +- 100 * 0.5 / 4.5
        let half = 100.0 * 0.5 / 4.5;
        assert!((r.x_min - (160.0 - half)).abs() < 1e-12);
        assert!((r.x_max - (160.0 + half)).abs() < 1e-12);
        assert!((r.y_min - (120.0 - half)).abs() < 1e-12);
        assert!((r.y_max - (120.0 + half)).abs() < 1e-12);
    }

    #[test]
    fn cube_behind_camera_is_not_visible() {
        let pose = Transform::from_translation(Vec3::new(0.0, 0.0, -5.0));
        assert!(project_cuboid_to_rect(&cam(), &CuboidShape::new(1.0, 1.0, 1.0), &pose).is_none());
    }

    #[test]
    fn straddling_near_plane_is_clipped() {
        // cube spans z in [-0.5, 0.5]; only the front half survives
        let pose = Transform::from_translation(Vec3::new(0.0, 0.0, 0.0));
        let r = project_cuboid_to_rect(&cam(), &CuboidShape::new(1.0, 1.0, 1.0), &pose).unwrap();
        assert_eq!(
            (r.x_min, r.y_min, r.x_max, r.y_max),
            (0.0, 0.0, 320.0, 240.0)
        );
    }

    #[test]
    fn darknet_examples() {
        let rect = PixelRect {
            x_min: 240.0,
            y_min: 180.0,
            x_max: 400.0,
            y_max: 300.0,
        };
        assert_eq!(
            darknet_normalize(&rect, 1, 640, 480).to_string(),
            "1 0.500000 0.500000 0.250000 0.250000"
        );
        let full = PixelRect {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 640.0,
            y_max: 480.0,
        };
        assert_eq!(
            darknet_normalize(&full, 0, 640, 480).to_string(),
            "0 0.500000 0.500000 1.000000 1.000000"
        );
        let corner = PixelRect {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 64.0,
            y_max: 48.0,
        };
        let b = darknet_normalize(&corner, 2, 640, 480);
        assert_eq!(b.to_string(), "2 0.050000 0.050000 0.100000 0.100000");
    }
}
