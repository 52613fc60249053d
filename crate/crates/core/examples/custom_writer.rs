//! A user-defined label format registered next to the built-in writers.
//!
//! The writer emits one CSV row per visible object. It does not ask for
//! masks, so background subtraction stays off unless another writer needs it.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use synthscene::format_writers::{FormatWriter, LabelInputs, WriterError};
use synthscene::pipeline::{build_registry, load_config, Generator};

struct CsvWriter {
    file: fs::File,
    rows: usize,
}

impl CsvWriter {
    fn create(path: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(path.parent().unwrap())?;
        let mut file = fs::File::create(path)?;
        writeln!(file, "frame,time,object,class,x_min,y_min,x_max,y_max")?;
        Ok(Self { file, rows: 0 })
    }
}

impl FormatWriter for CsvWriter {
    fn name(&self) -> &str {
        "csv"
    }

    fn requires_segmentation(&self) -> bool {
        false
    }

    fn write_scene(&mut self, inputs: &LabelInputs) -> Result<(), WriterError> {
        for obj in &inputs.objects {
            let Some(r) = obj.rect else { continue };
            writeln!(
                self.file,
                "{},{:.3},{},{},{:.2},{:.2},{:.2},{:.2}",
                inputs.frame_index,
                inputs.time,
                obj.name,
                obj.class_id,
                r.x_min,
                r.y_min,
                r.x_max,
                r.y_max
            )
            .map_err(|e| WriterError::Io {
                path: "boxes.csv".into(),
                source: e,
            })?;
            self.rows += 1;
        }
        Ok(())
    }

    fn finalize(&mut self) -> Result<(), WriterError> {
        println!("csv: {} rows", self.rows);
        Ok(())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo/replay/config.json");
    let mut config = load_config(&demo)?.config;
    config.output_dir = std::env::temp_dir().join("synthscene-custom-writer");
    config
        .writers
        .retain(|w| w.kind == synthscene::pipeline::WriterKind::Darknet);
    config.frame_rate = 2.0;

    let mut registry = build_registry(&config)?;
    let csv_dir = config.output_dir.join("csv");
    registry.register(
        &csv_dir,
        Box::new(CsvWriter::create(csv_dir.join("boxes.csv"))?),
    );
    let report = Generator::with_registry(config, registry).run()?;
    println!(
        "{} frames, writers {:?}, {} subtractor passes",
        report.frames, report.writer_files, report.subtractor_invocations
    );
    print!(
        "{}",
        fs::read_to_string(csv_dir.join("boxes.csv"))?
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();
    Ok(())
}
