mod common;

use serde_json::{json, Value};
use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};
use std::rc::Rc;
use synthscene::camera_projection::{
    cuboid_vertices, darknet_normalize, project_cuboid_to_rect, project_point, CameraModel,
    CuboidShape, PixelRect,
};
use synthscene::format_writers::*;
use synthscene::geometry::{Transform, Vec3};
use synthscene::renderer::Mask;

fn mask(width: usize, height: usize, set: &[(usize, usize)]) -> Mask {
    let mut m = Mask::empty(width, height);
    for &(x, y) in set {
        m.bits[y * width + x] = true;
    }
    m
}

fn label(name: &str, class_id: u32, rect: Option<PixelRect>, w: u32, h: u32) -> ObjectLabel {
    ObjectLabel {
        name: name.into(),
        class_id,
        rect,
        darknet: rect.map(|r| darknet_normalize(&r, class_id, w, h)),
        vertices: [None; 8],
        keypoints: vec![],
        mask: None,
    }
}

fn inputs(
    dir: &Path,
    frame_index: usize,
    w: u32,
    h: u32,
    objects: Vec<ObjectLabel>,
) -> LabelInputs {
    LabelInputs {
        frame_index,
        time: frame_index as f64 * 0.1,
        image_path: dir
            .join("images")
            .join(format!("frame_{frame_index:06}.ppm")),
        image_width: w,
        image_height: h,
        camera: CameraModel::new(100.0, 100.0, w as f64 / 2.0, h as f64 / 2.0, w, h),
        objects,
    }
}

fn rect(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Option<PixelRect> {
    Some(PixelRect {
        x_min,
        y_min,
        x_max,
        y_max,
    })
}

#[test]
fn darknet_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let mut w = DarknetWriter::new(root.join("darknet")).unwrap();
    assert!(!w.requires_segmentation());
    let centered = label("bot", 1, rect(120.0, 90.0, 200.0, 150.0), 320, 240);
    w.write_scene(&inputs(root, 0, 320, 240, vec![centered]))
        .unwrap();
    w.write_scene(&inputs(
        root,
        1,
        320,
        240,
        vec![label("bot", 1, None, 320, 240)],
    ))
    .unwrap();
    let three = vec![
        label("c", 2, rect(0.0, 0.0, 32.0, 24.0), 320, 240),
        label("a", 0, rect(160.0, 120.0, 320.0, 240.0), 320, 240),
        label("b", 5, rect(10.0, 200.0, 50.0, 239.0), 320, 240),
    ];
    w.write_scene(&inputs(root, 2, 320, 240, three)).unwrap();
    w.finalize().unwrap();
    let read = |p: &str| fs::read_to_string(root.join("darknet").join(p)).unwrap();
    assert_eq!(
        read("frame_000000.txt"),
        "1 0.500000 0.500000 0.250000 0.250000\n"
    );
    assert_eq!(read("frame_000001.txt"), "");
    assert_eq!(
        read("frame_000002.txt"),
        "2 0.050000 0.050000 0.100000 0.100000\n\
         0 0.750000 0.750000 0.500000 0.500000\n\
         5 0.093750 0.914583 0.125000 0.162500\n"
    );
    assert_eq!(
        read("train_list.txt"),
        "../images/frame_000000.ppm\n../images/frame_000001.ppm\n../images/frame_000002.ppm\n"
    );
}

#[test]
fn darknet_empty_run_writes_empty_list() {
    let tmp = tempfile::tempdir().unwrap();
    let mut w = DarknetWriter::new(tmp.path().join("d")).unwrap();
    w.finalize().unwrap();
    assert_eq!(
        fs::read_to_string(tmp.path().join("d/train_list.txt")).unwrap(),
        ""
    );
}

#[test]
fn coco_document_structure() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let mut w = CocoWriter::new(root.join("coco")).unwrap();
    assert!(w.requires_segmentation());
    let mut a = label("bot", 1, rect(1.0, 0.0, 2.0, 1.0), 2, 2);
    a.mask = Some(mask(2, 2, &[(1, 0)]));
    let mut b = label("crate", 4, None, 2, 2);
    b.mask = Some(Mask::empty(2, 2));
    w.write_scene(&inputs(root, 0, 2, 2, vec![a.clone(), b]))
        .unwrap();
    let mut full = label("bot2", 1, rect(0.0, 0.0, 2.0, 2.0), 2, 2);
    full.mask = Some(mask(2, 2, &[(0, 0), (1, 0), (0, 1), (1, 1)]));
    w.write_scene(&inputs(root, 1, 2, 2, vec![full])).unwrap();
    w.finalize().unwrap();
    let text = fs::read_to_string(root.join("coco/annotations.json")).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(
        doc,
        json!({
            "images": [
                {"id": 1, "file_name": "../images/frame_000000.ppm", "width": 2, "height": 2},
                {"id": 2, "file_name": "../images/frame_000001.ppm", "width": 2, "height": 2}
            ],
            "categories": [{"id": 1, "name": "bot"}, {"id": 4, "name": "crate"}],
            "annotations": [
                {"id": 1, "image_id": 1, "category_id": 1, "bbox": [1, 0, 1, 1], "area": 1,
                 "segmentation": {"counts": [2, 1, 1], "size": [2, 2]}, "iscrowd": 0},
                {"id": 2, "image_id": 2, "category_id": 1, "bbox": [0, 0, 2, 2], "area": 4,
                 "segmentation": {"counts": [0, 4], "size": [2, 2]}, "iscrowd": 0}
            ]
        })
    );
    let keys: Vec<usize> = ["\"images\"", "\"categories\"", "\"annotations\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
    assert!(text.ends_with("}\n"));
}

#[test]
fn coco_without_mask_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut w = CocoWriter::new(tmp.path().join("coco")).unwrap();
    let err = w
        .write_scene(&inputs(
            tmp.path(),
            3,
            8,
            8,
            vec![label("bot", 1, rect(0.0, 0.0, 4.0, 4.0), 8, 8)],
        ))
        .unwrap_err();
    assert!(matches!(err, WriterError::MissingMask { frame: 3, ref object } if object == "bot"));
}

/// Independent column-major decoder.
fn decode_rle(r: &RleCounts) -> Mask {
    let (h, w) = (r.size[0] as usize, r.size[1] as usize);
    let mut m = Mask::empty(w, h);
    let mut pos = 0usize;
    for (i, &c) in r.counts.iter().enumerate() {
        for p in pos..pos + c as usize {
            if i % 2 == 1 {
                m.bits[(p % h) * w + p / h] = true;
            }
        }
        pos += c as usize;
    }
    assert_eq!(pos, w * h);
    m
}

#[test]
fn rle_round_trip_random_masks() {
    use rand::Rng;
    let mut r = common::rng(40);
    for _ in 0..300 {
        let (w, h) = (r.random_range(1..30), r.random_range(1..30));
        let p = r.random_range(0.0..1.0);
        let mut m = Mask::empty(w, h);
        for b in m.bits.iter_mut() {
            *b = r.random_bool(p);
        }
        let rle = encode_rle(&m);
        assert_eq!(rle.counts.iter().sum::<u64>(), (w * h) as u64);
        assert!(rle.counts[1..].iter().all(|&c| c > 0));
        assert_eq!(decode_rle(&rle), m);
    }
}

#[test]
fn keypoints_cross_check_projection() {
    let tmp = tempfile::tempdir().unwrap();
    let cam = CameraModel::new(100.0, 100.0, 32.0, 24.0, 64, 48);
    let shape = CuboidShape::new(0.5, 0.4, 0.3);
    let to_cam = Transform::from_translation(Vec3::new(0.0, 0.0, 3.0));
    let corners = cuboid_vertices(&shape).map(|p| project_point(&cam, to_cam.apply(p)).ok());
    let behind = project_point(&cam, Vec3::new(0.0, 0.0, -1.0)).ok();
    let origin = project_point(&cam, to_cam.apply(Vec3::ZERO)).ok();
    let mut obj = label(
        "bot",
        7,
        project_cuboid_to_rect(&cam, &shape, &to_cam),
        64,
        48,
    );
    obj.keypoints = vec![origin, behind];
    obj.keypoints.extend(corners);
    let mut w = KeypointWriter::new(tmp.path().join("kp")).unwrap();
    let mut frame = inputs(tmp.path(), 4, 64, 48, vec![obj]);
    frame.camera = cam;
    w.write_scene(&frame).unwrap();
    w.finalize().unwrap();
    let text = fs::read_to_string(tmp.path().join("kp/frame_000004_keypoints.txt")).unwrap();
    assert!(text.ends_with('\n') && text.lines().count() == 1);
    let tokens: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(
        &tokens[..6],
        ["7", "bot", "32.000000", "24.000000", "nan", "nan"]
    );
    let values: Vec<f64> = tokens[6..].iter().map(|t| t.parse().unwrap()).collect();
    assert_eq!(values.len(), 16);
    for (k, p) in cuboid_vertices(&shape).iter().enumerate() {
        let q = to_cam.apply(*p);
        let (u, v) = (100.0 * q.x / q.z + 32.0, 100.0 * q.y / q.z + 24.0);
        assert!((values[2 * k] - u).abs() < 1e-6 && (values[2 * k + 1] - v).abs() < 1e-6);
    }
}

/// Records every contract call into a shared log.
struct MockWriter {
    name: String,
    log: Rc<RefCell<Vec<String>>>,
    masks: bool,
}

impl FormatWriter for MockWriter {
    fn name(&self) -> &str {
        &self.name
    }

    fn requires_segmentation(&self) -> bool {
        self.masks
    }

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        let with_masks = inputs.objects.iter().all(|o| o.mask.is_some());
        self.log.borrow_mut().push(format!(
            "{} scene {} masks={with_masks}",
            self.name, inputs.frame_index
        ));
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), WriterError> {
        self.log
            .borrow_mut()
            .push(format!("{} finalize", self.name));
        Ok(())
    }
}

#[test]
fn registry_polls_and_orders() {
    let log = Rc::new(RefCell::new(Vec::new()));
    let mut reg = WriterRegistry::new();
    assert!(!reg.any_requires_segmentation());
    let tmp = tempfile::tempdir().unwrap();
    reg.register(
        tmp.path().join("d"),
        Box::new(DarknetWriter::new(tmp.path().join("d")).unwrap()),
    );
    assert!(!reg.any_requires_segmentation());
    reg.register(
        tmp.path().join("c"),
        Box::new(CocoWriter::new(tmp.path().join("c")).unwrap()),
    );
    assert!(reg.any_requires_segmentation());
    let mut reg = WriterRegistry::new();
    for name in ["z", "a", "m"] {
        reg.register(
            PathBuf::from(name),
            Box::new(MockWriter {
                name: name.into(),
                log: log.clone(),
                masks: false,
            }),
        );
    }
    for f in 0..2 {
        reg.write_scene(&inputs(tmp.path(), f, 4, 4, vec![]))
            .unwrap();
    }
    reg.finalize().unwrap();
    assert_eq!(
        *log.borrow(),
        [
            "z scene 0 masks=true",
            "a scene 0 masks=true",
            "m scene 0 masks=true",
            "z scene 1 masks=true",
            "a scene 1 masks=true",
            "m scene 1 masks=true",
            "z finalize",
            "a finalize",
            "m finalize"
        ]
    );
    let names: Vec<&str> = reg.outputs().map(|(n, _)| n).collect();
    assert_eq!(names, ["z", "a", "m"]);
}

#[test]
fn adding_a_writer_leaves_darknet_bytes_alone() {
    let run = |with_coco: bool| {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        let mut reg = WriterRegistry::new();
        reg.register(
            root.join("darknet"),
            Box::new(DarknetWriter::new(root.join("darknet")).unwrap()),
        );
        if with_coco {
            reg.register(
                root.join("coco"),
                Box::new(CocoWriter::new(root.join("coco")).unwrap()),
            );
        }
        for f in 0..3 {
            let mut o = label("bot", 1, rect(f as f64, 1.0, 5.0, 6.0), 8, 8);
            o.mask = with_coco.then(|| mask(8, 8, &[(2, 2), (3, 3)]));
            reg.write_scene(&inputs(root, f, 8, 8, vec![o])).unwrap();
        }
        reg.finalize().unwrap();
        let mut files = Vec::new();
        for e in fs::read_dir(root.join("darknet")).unwrap() {
            let p = e.unwrap().path();
            files.push((p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()));
        }
        files.sort();
        files
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn writer_errors_name_the_writer() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reg = WriterRegistry::new();
    reg.register(
        tmp.path().join("c"),
        Box::new(CocoWriter::new(tmp.path().join("c")).unwrap()),
    );
    let err = reg
        .write_scene(&inputs(
            tmp.path(),
            0,
            4,
            4,
            vec![label("x", 0, None, 4, 4)],
        ))
        .unwrap_err();
    assert!(matches!(err, WriterError::InWriter { ref writer, .. } if writer == "coco"));
    assert!(err.to_string().contains("coco"));
}
