//! Render cuboids over the checkerboard backdrop with sensor noise and
//! write the frame and its object-id buffer.
//!
//! `cargo run --example render_scene -- out_dir`

use std::fs;
use std::path::PathBuf;
use synthscene::camera_projection::{CameraModel, CuboidShape};
use synthscene::geometry::{Quat, Transform, Vec3};
use synthscene::renderer::{render_id_buffer, render_scene, RenderOptions, SceneObject};

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("synthscene-render"));
    fs::create_dir_all(&out)?;
    let cam = CameraModel::new(250.0, 250.0, 160.0, 120.0, 320, 240);
    let tilt = Quat::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), 0.5);
    let objects = [
        SceneObject::new(
            CuboidShape::new(1.2, 0.8, 1.0),
            Transform::new(Vec3::new(-0.6, 0.2, 5.0), Quat::from_yaw(0.6) * tilt),
            0,
        ),
        SceneObject::new(
            CuboidShape::new(0.5, 0.5, 0.5),
            Transform::new(Vec3::new(0.4, -0.1, 3.5), Quat::from_yaw(-0.3)),
            1,
        ),
        SceneObject::new(
            CuboidShape::new(2.0, 0.2, 2.0),
            Transform::from_translation(Vec3::new(0.0, 0.8, 8.0)),
            2,
        ),
    ];
    let frame = render_scene(
        &objects,
        &cam,
        &RenderOptions {
            noise_sigma: 2.0,
            seed: 7,
        },
    );
    fs::write(out.join("frame.ppm"), frame.to_ppm())?;

    let ids = render_id_buffer(&objects, &cam);
    for i in 0..objects.len() as u32 {
        let mask = ids.mask_for(i);
        println!(
            "object {i}: {} visible pixels, bounds {:?}",
            mask.count(),
            mask.bounds()
        );
        fs::write(out.join(format!("visible_{i}.pgm")), mask.to_pgm())?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
