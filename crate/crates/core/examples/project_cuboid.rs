//! Project a cuboid through a pinhole camera into a bounding rectangle and
//! a Darknet label, including the case where it straddles the camera.

use synthscene::camera_projection::{
    cuboid_vertices, darknet_normalize, project_cuboid_to_rect, project_point, CameraModel,
    CuboidShape,
};
use synthscene::geometry::{Quat, Transform, Vec3};

fn main() {
    let cam = CameraModel::new(200.0, 200.0, 160.0, 120.0, 320, 240);
    let shape = CuboidShape::new(1.0, 0.6, 0.8);

    let ahead = Transform::new(Vec3::new(0.5, 0.2, 4.0), Quat::from_yaw(0.4));
    for (i, v) in cuboid_vertices(&shape).iter().enumerate() {
        let p = ahead.apply(*v);
        let (u, w) = project_point(&cam, p).expect("in front of the camera");
        println!(
            "corner {i}: ({:+.2}, {:+.2}, {:.2}) -> ({u:.1}, {w:.1})",
            p.x, p.y, p.z
        );
    }
    let rect = project_cuboid_to_rect(&cam, &shape, &ahead).expect("visible");
    println!("rect {rect:?}");
    println!(
        "darknet: {}",
        darknet_normalize(&rect, 3, cam.width, cam.height)
    );

    // half of this box is behind the image plane; its edges are clipped
    // at the near plane before projection
    let straddling = Transform::from_translation(Vec3::new(0.0, 0.0, 0.2));
    println!(
        "straddling rect {:?}",
        project_cuboid_to_rect(&cam, &shape, &straddling)
    );

    let behind = Transform::from_translation(Vec3::new(0.0, 0.0, -3.0));
    println!(
        "behind the camera: {:?}",
        project_cuboid_to_rect(&cam, &shape, &behind)
    );
    println!(
        "point behind: {:?}",
        project_point(&cam, Vec3::new(0.0, 0.0, -1.0))
    );
}
