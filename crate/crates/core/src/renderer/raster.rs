//! Z-buffered triangle rasterization of cuboids.

use crate::camera_projection::{cuboid_vertices, CameraModel, CuboidShape};
use crate::geometry::{Transform, Vec3};

/// A cuboid placed in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub shape: CuboidShape,
    /// `T_world_object`.
    pub pose: Transform,
    pub class_id: u32,
    /// Invisible objects are skipped entirely ("moved out of view").
    pub visible: bool,
}

impl SceneObject {
    pub fn new(shape: CuboidShape, pose: Transform, class_id: u32) -> Self {
        Self {
            shape,
            pose,
            class_id,
            visible: true,
        }
    }
}

/// Corner indices of each face, in cyclic order.
const FACES: [[usize; 4]; 6] = [
    [0, 2, 6, 4],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 1, 3, 2],
    [4, 5, 7, 6],
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Fragment {
    pub object: u32,
    /// Outward face normal in the camera frame.
    pub normal: Vec3,
}

pub(crate) struct Coverage {
    pub width: usize,
    pub height: usize,
    pub fragments: Vec<Option<Fragment>>,
}

#[derive(Clone, Copy)]
struct ScreenVertex {
    u: f64,
    v: f64,
    inv_z: f64,
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Sutherland-Hodgman against the plane z = near, keeping z >= near.
fn clip_polygon(poly: &[Vec3], near: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let (cur_in, next_in) = (cur.z >= near, next.z >= near);
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let s = (near - cur.z) / (next.z - cur.z);
            let mut p = cur.lerp(next, s);
            p.z = near;
            out.push(p);
        }
    }
    out
}

pub(crate) fn rasterize(objects: &[SceneObject], cam: &CameraModel) -> Coverage {
    let (width, height) = (cam.width as usize, cam.height as usize);
    let mut depth = vec![0.0f64; width * height];
    let mut fragments: Vec<Option<Fragment>> = vec![None; width * height];

    for (index, obj) in objects.iter().enumerate() {
        if !obj.visible {
            continue;
        }
        let to_cam = cam.object_in_camera(&obj.pose);
        let corners = cuboid_vertices(&obj.shape).map(|p| to_cam.apply(p));
        let center = to_cam.apply(obj.shape.offset.translation);
        for face in FACES {
            let quad = face.map(|i| corners[i]);
            let mut normal = (quad[1] - quad[0]).cross(quad[2] - quad[0]).normalized();
            let face_center = (quad[0] + quad[2]) * 0.5;
            if normal.dot(face_center - center) < 0.0 {
                normal = -normal;
            }
            let frag = Fragment {
                object: index as u32,
                normal,
            };
            for tri in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
                let poly = clip_polygon(&tri, cam.near_plane);
                if poly.len() < 3 {
                    continue;
                }
                let screen: Vec<ScreenVertex> = poly
                    .iter()
                    .map(|&p| {
                        let (u, v) = cam.project_unchecked(p);
                        ScreenVertex {
                            u,
                            v,
                            inv_z: 1.0 / p.z,
                        }
                    })
                    .collect();
                for k in 1..screen.len() - 1 {
                    fill_triangle(
                        [screen[0], screen[k], screen[k + 1]],
                        width,
                        height,
                        &mut depth,
                        &mut fragments,
                        frag,
                    );
                }
            }
        }
    }
    Coverage {
        width,
        height,
        fragments,
    }
}

fn fill_triangle(
    tri: [ScreenVertex; 3],
    width: usize,
    height: usize,
    depth: &mut [f64],
    fragments: &mut [Option<Fragment>],
    frag: Fragment,
) {
    let p = tri.map(|s| (s.u, s.v));
    let area = edge(p[0], p[1], p[2]);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_u = p.iter().map(|q| q.0).fold(f64::INFINITY, f64::min);
    let max_u = p.iter().map(|q| q.0).fold(f64::NEG_INFINITY, f64::max);
    let min_v = p.iter().map(|q| q.1).fold(f64::INFINITY, f64::min);
    let max_v = p.iter().map(|q| q.1).fold(f64::NEG_INFINITY, f64::max);
    // pixel i is sampled at i + 0.5
    let col_range = |lo: f64, hi: f64, n: usize| {
        let first = (lo - 0.5).ceil().max(0.0);
        let last = (hi - 0.5).floor().min(n as f64 - 1.0);
        (first as i64, last as i64)
    };
    let (c0, c1) = col_range(min_u, max_u, width);
    let (r0, r1) = col_range(min_v, max_v, height);
    if c0 > c1 || r0 > r1 {
        return;
    }
    let sign = area.signum();
    for row in r0..=r1 {
        let y = row as f64 + 0.5;
        for col in c0..=c1 {
            let x = col as f64 + 0.5;
            let w0 = edge(p[1], p[2], (x, y)) * sign;
            let w1 = edge(p[2], p[0], (x, y)) * sign;
            let w2 = edge(p[0], p[1], (x, y)) * sign;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let inv_z = (w0 * tri[0].inv_z + w1 * tri[1].inv_z + w2 * tri[2].inv_z) / (area * sign);
            let idx = row as usize * width + col as usize;
            if inv_z > depth[idx] {
                depth[idx] = inv_z;
                fragments[idx] = Some(frag);
            }
        }
    }
}
