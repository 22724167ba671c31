//! On-disk annotated corpora: one image file per sample plus a JSON-lines
//! annotation file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use diaclid_core::corpus::{AnnotatedImage, BoxAnnotation};
use diaclid_core::{Language, DIACRITIC_COUNT};
use serde::{Deserialize, Serialize};

use crate::image_io::{read_image, write_image};
use crate::Error;

/// Name of the annotation file inside a corpus directory.
pub const ANNOTATIONS: &str = "annotations.jsonl";

/// One annotation line: image path relative to the corpus directory, the
/// language tag and `[cx, cy, w, h, class]` boxes in pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationLine {
    pub image: String,
    pub lang: Option<String>,
    pub boxes: Vec<(f32, f32, f32, f32, usize)>,
}

/// File name of the `i`-th image of a corpus.
pub fn image_name(i: usize) -> String {
    format!("img_{i:06}.png")
}

/// Writes `images` into `dir` (created if missing), replacing any previous
/// annotation file.
pub fn write_corpus(dir: &Path, images: &[AnnotatedImage]) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let ann_path = dir.join(ANNOTATIONS);
    let mut out = BufWriter::new(File::create(&ann_path).map_err(Error::io(&ann_path))?);
    for (i, im) in images.iter().enumerate() {
        let name = image_name(i);
        write_image(&dir.join(&name), &im.raster)?;
        let line = AnnotationLine {
            image: name,
            lang: im.language.map(|l| l.name().to_owned()),
            boxes: im.boxes.iter().map(|b| (b.cx, b.cy, b.w, b.h, b.class)).collect(),
        };
        let json = serde_json::to_string(&line).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(out, "{json}").map_err(Error::io(&ann_path))?;
    }
    out.flush().map_err(Error::io(&ann_path))
}

/// Reads a corpus written by [`write_corpus`]. A directory without an
/// annotation file is an empty corpus.
pub fn read_corpus(dir: &Path) -> Result<Vec<AnnotatedImage>, Error> {
    if !dir.is_dir() {
        return Err(Error::Data(format!("{}: not a directory", dir.display())));
    }
    let ann_path = dir.join(ANNOTATIONS);
    if !ann_path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(&ann_path).map_err(Error::io(&ann_path))?);
    let mut images = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(&ann_path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Annotation {
            path: ann_path.clone(),
            line: i + 1,
            msg,
        };
        let ann: AnnotationLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let language = ann
            .lang
            .as_deref()
            .map(str::parse::<Language>)
            .transpose()
            .map_err(|e| bad(e.to_string()))?;
        let raster = read_image(&dir.join(&ann.image))?;
        let mut boxes = Vec::with_capacity(ann.boxes.len());
        for (cx, cy, w, h, class) in ann.boxes {
            let b = BoxAnnotation { cx, cy, w, h, class };
            if class >= DIACRITIC_COUNT {
                return Err(bad(format!("class {class} out of range")));
            }
            if !b.within(raster.width(), raster.height()) {
                return Err(bad(format!(
                    "box ({cx}, {cy}, {w}, {h}) outside the {}x{} image",
                    raster.width(),
                    raster.height()
                )));
            }
            boxes.push(b);
        }
        images.push(AnnotatedImage { raster, boxes, language });
    }
    Ok(images)
}
