mod common;

use common::{apply_matrix, desk_camera, random_transform, random_unit_quat, to_matrix};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use rand::Rng;
use synthscene::camera_projection::*;
use synthscene::geometry::{Quat, Transform, Vec3};

#[test]
fn transform_points_matches_matrix_oracle() {
    let mut r = common::rng(20);
    for _ in 0..100 {
        let tf = random_transform(&mut r, 5.0);
        let pts: Vec<Vec3> = (0..50)
            .map(|_| {
                Vec3::new(
                    r.random_range(-3.0..3.0),
                    r.random_range(-3.0..3.0),
                    r.random_range(-3.0..3.0),
                )
            })
            .collect();
        let m = to_matrix(&tf);
        let got = transform_points(&pts, &tf);
        for (p, g) in pts.iter().zip(&got) {
            assert!((apply_matrix(&m, *p) - *g).norm() < 1e-12);
        }
        let back = transform_points(&got, &tf.inverse());
        for (p, b) in pts.iter().zip(&back) {
            assert!((*p - *b).norm() < 1e-9);
        }
    }
}

#[test]
fn projection_formula_and_ray_invariance() {
    let cam = desk_camera();
    assert_eq!(
        project_point(&cam, Vec3::new(0.0, 0.0, 3.0)).unwrap(),
        (160.0, 120.0)
    );
    let mut r = common::rng(21);
    for _ in 0..1000 {
        let p = Vec3::new(
            r.random_range(-2.0..2.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.5..20.0),
        );
        let (u, v) = project_point(&cam, p).unwrap();
        assert!((u - (200.0 * p.x / p.z + 160.0)).abs() < 1e-9);
        assert!((v - (200.0 * p.y / p.z + 120.0)).abs() < 1e-9);
        let k = r.random_range(0.1..10.0);
        let (u2, v2) = project_point(&cam, p * k).unwrap();
        assert!((u - u2).abs() < 1e-9 && (v - v2).abs() < 1e-9);
    }
    assert!(matches!(
        project_point(&cam, Vec3::new(0.0, 0.0, 0.005)),
        Err(ProjectionError::BehindCamera { .. })
    ));
    assert!(project_point(&cam, Vec3::new(1.0, 1.0, -2.0)).is_err());
}

fn corner_oracle(shape: &CuboidShape, to_cam: &Transform) -> Vec<Point3<f64>> {
    let m = to_matrix(to_cam) * to_matrix(&shape.offset);
    let h = shape.size * 0.5;
    let mut out = Vec::new();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                out.push(
                    Point3::from_homogeneous(
                        m * nalgebra::Vector4::new(sx * h.x, sy * h.y, sz * h.z, 1.0),
                    )
                    .unwrap(),
                );
            }
        }
    }
    out
}

#[test]
fn cube_five_meters_ahead() {
    let cam = desk_camera();
    let shape = CuboidShape::new(1.0, 1.0, 1.0);
    let to_cam = Transform::from_translation(Vec3::new(0.0, 0.0, 5.0));
    let rect = project_cuboid_to_rect(&cam, &shape, &to_cam).unwrap();
    let proj: Vec<(f64, f64)> = corner_oracle(&shape, &to_cam)
        .iter()
        .map(|p| (200.0 * p.x / p.z + 160.0, 200.0 * p.y / p.z + 120.0))
        .collect();
    let min_u = proj.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_u = proj.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_v = proj.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_v = proj.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    assert!((rect.x_min - min_u).abs() < 1e-9 && (rect.x_max - max_u).abs() < 1e-9);
    assert!((rect.y_min - min_v).abs() < 1e-9 && (rect.y_max - max_v).abs() < 1e-9);
    // nearest face at 4.5 m spans +-0.5 m
    assert!((rect.x_min - (160.0 - 100.0 / 4.5)).abs() < 1e-9);
}

/// Rect from the corners in front of the near plane plus each straddling
/// edge's crossing point, found by bisection.
fn clip_oracle(cam: &CameraModel, shape: &CuboidShape, to_cam: &Transform) -> Option<PixelRect> {
    let c = corner_oracle(shape, to_cam);
    let near = cam.near_plane;
    let mut pts: Vec<Point3<f64>> = c.iter().copied().filter(|p| p.z >= near).collect();
    for a in 0..8usize {
        for b in a + 1..8 {
            let diff = a ^ b;
            if diff.count_ones() != 1 {
                continue;
            }
            let (pa, pb) = (c[a], c[b]);
            if (pa.z >= near) == (pb.z >= near) {
                continue;
            }
            let (mut lo, mut hi) = if pa.z >= near { (0.0, 1.0) } else { (1.0, 0.0) };
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (pa + (pb - pa) * mid).z >= near {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut p = pa + (pb - pa) * lo;
            p.z = p.z.max(near);
            pts.push(p);
        }
    }
    if pts.is_empty() {
        return None;
    }
    let uv: Vec<(f64, f64)> = pts
        .iter()
        .map(|p| (cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy))
        .collect();
    let x_min = uv
        .iter()
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let x_max = uv
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .min(cam.width as f64);
    let y_min = uv
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let y_max = uv
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max)
        .min(cam.height as f64);
    (x_min < x_max && y_min < y_max).then_some(PixelRect {
        x_min,
        y_min,
        x_max,
        y_max,
    })
}

fn rect_close(a: &PixelRect, b: &PixelRect, tol: f64) -> bool {
    (a.x_min - b.x_min).abs() <= tol
        && (a.x_max - b.x_max).abs() <= tol
        && (a.y_min - b.y_min).abs() <= tol
        && (a.y_max - b.y_max).abs() <= tol
}

#[test]
fn straddling_cube_is_clipped_and_clamped() {
    let cam = desk_camera();
    let shape = CuboidShape::new(2.0, 2.0, 2.0);
    let to_cam = Transform::new(
        Vec3::new(0.5, 0.2, 0.5),
        Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), 0.3),
    );
    let rect = project_cuboid_to_rect(&cam, &shape, &to_cam).unwrap();
    let oracle = clip_oracle(&cam, &shape, &to_cam).unwrap();
    assert!(rect_close(&rect, &oracle, 1e-6), "{rect:?} vs {oracle:?}");
    assert_eq!(
        (rect.x_min, rect.y_min, rect.x_max, rect.y_max),
        (0.0, 0.0, 320.0, 240.0)
    );
}

#[test]
fn random_poses_match_clip_oracle() {
    let cam = desk_camera();
    let mut r = common::rng(22);
    let mut straddling = 0;
    for _ in 0..2000 {
        let shape = CuboidShape::new(
            r.random_range(0.1..3.0),
            r.random_range(0.1..3.0),
            r.random_range(0.1..3.0),
        );
        let to_cam = Transform::new(
            Vec3::new(
                r.random_range(-6.0..6.0),
                r.random_range(-6.0..6.0),
                r.random_range(-3.0..12.0),
            ),
            random_unit_quat(&mut r),
        );
        let got = project_cuboid_to_rect(&cam, &shape, &to_cam);
        let want = clip_oracle(&cam, &shape, &to_cam);
        let zs: Vec<f64> = corner_oracle(&shape, &to_cam).iter().map(|p| p.z).collect();
        if zs.iter().any(|&z| z < cam.near_plane) && zs.iter().any(|&z| z >= cam.near_plane) {
            straddling += 1;
        }
        match (got, want) {
            (Some(g), Some(w)) => assert!(rect_close(&g, &w, 1e-6), "{g:?} vs {w:?}"),
            (None, None) => {}
            // area within rounding of zero
            (g, w) => {
                let area = |x: Option<PixelRect>| x.map_or(0.0, |x| x.width() * x.height());
                assert!(area(g) < 1e-6 && area(w) < 1e-6, "{g:?} vs {w:?}");
            }
        }
    }
    assert!(straddling > 50);
}

#[test]
fn invisible_cases() {
    let cam = desk_camera();
    let shape = CuboidShape::new(1.0, 1.0, 1.0);
    let behind = Transform::from_translation(Vec3::new(0.0, 0.0, -3.0));
    assert_eq!(project_cuboid_to_rect(&cam, &shape, &behind), None);
    let aside = Transform::from_translation(Vec3::new(50.0, 0.0, 3.0));
    assert_eq!(project_cuboid_to_rect(&cam, &shape, &aside), None);
}

#[test]
fn samples_inside_cuboid_project_inside_rect() {
    let cam = desk_camera();
    let mut r = common::rng(23);
    for _ in 0..300 {
        let shape = CuboidShape::new(
            r.random_range(0.2..2.0),
            r.random_range(0.2..2.0),
            r.random_range(0.2..2.0),
        )
        .with_offset(random_transform(&mut r, 0.3));
        let to_cam = Transform::new(
            Vec3::new(
                r.random_range(-3.0..3.0),
                r.random_range(-3.0..3.0),
                r.random_range(-1.0..8.0),
            ),
            random_unit_quat(&mut r),
        );
        let rect = project_cuboid_to_rect(&cam, &shape, &to_cam);
        let m = to_matrix(&to_cam) * to_matrix(&shape.offset);
        for _ in 0..200 {
            let local = Vector3::new(
                r.random_range(-0.5..0.5) * shape.size.x,
                r.random_range(-0.5..0.5) * shape.size.y,
                r.random_range(-0.5..0.5) * shape.size.z,
            );
            let p = Point3::from_homogeneous(m * local.push(1.0)).unwrap();
            if p.z < cam.near_plane {
                continue;
            }
            let (u, v) = (200.0 * p.x / p.z + 160.0, 200.0 * p.y / p.z + 120.0);
            if u > 0.0 && u < 320.0 && v > 0.0 && v < 240.0 {
                let rect = rect.expect("an interior point is on screen");
                assert!(
                    u >= rect.x_min - 1e-9
                        && u <= rect.x_max + 1e-9
                        && v >= rect.y_min - 1e-9
                        && v <= rect.y_max + 1e-9
                );
            }
        }
    }
}

#[test]
fn darknet_fidelity() {
    let rect = PixelRect {
        x_min: 120.0,
        y_min: 90.0,
        x_max: 200.0,
        y_max: 150.0,
    };
    let b = darknet_normalize(&rect, 1, 320, 240);
    assert_eq!(b.to_string(), "1 0.500000 0.500000 0.250000 0.250000");
    let full = PixelRect {
        x_min: 0.0,
        y_min: 0.0,
        x_max: 320.0,
        y_max: 240.0,
    };
    assert_eq!(
        darknet_normalize(&full, 0, 320, 240).to_string(),
        "0 0.500000 0.500000 1.000000 1.000000"
    );
}

proptest! {
    #[test]
    fn darknet_round_trips_rect(x0 in 0.0f64..300.0, y0 in 0.0f64..200.0, w in 1.0f64..20.0, h in 1.0f64..40.0) {
        let rect = PixelRect { x_min: x0, y_min: y0, x_max: x0 + w, y_max: y0 + h };
        let b = darknet_normalize(&rect, 3, 320, 240);
        prop_assert!((b.cx_frac * 320.0 - (x0 + w / 2.0)).abs() < 1e-9);
        prop_assert!((b.cy_frac * 240.0 - (y0 + h / 2.0)).abs() < 1e-9);
        prop_assert!((b.w_frac * 320.0 - w).abs() < 1e-9);
        prop_assert!((b.h_frac * 240.0 - h).abs() < 1e-9);
        for f in [b.cx_frac, b.cy_frac, b.w_frac, b.h_frac] {
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn transform_inverse_round_trip(seed in any::<u64>(), x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        let mut r = common::rng(seed);
        let tf = random_transform(&mut r, 10.0);
        let p = Vec3::new(x, y, z);
        prop_assert!((tf.inverse().apply(tf.apply(p)) - p).norm() < 1e-9);
    }
}
