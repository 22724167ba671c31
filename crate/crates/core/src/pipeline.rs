//! End-to-end orchestration: line localisation, per-line diacritic
//! detection, presence aggregation and language prediction, plus the
//! per-language evaluation report.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Raster, WORD_HEIGHT};
use crate::detector::{
    decode, generate_anchors, input_tensor, padded_width, postprocess, BBox, Detection,
    DetectorConfig, DetectorNet,
};
use crate::langid::{predict, LanguagePrediction, PresenceVector, ShallowNet, MIN_DETECTION_CONFIDENCE};
use crate::table::{Language, LANGUAGE_COUNT};
use crate::Error;

/// Rows (or columns) with fewer ink pixels than this count as blank.
pub const NOISE_FLOOR: usize = 2;

/// Axis-aligned pixel rectangle enclosing one text line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Otsu's threshold over a 256-bin histogram: the level `t` maximising the
/// between-class variance of `{<= t}` and `{> t}`. `None` for a histogram
/// with a single occupied level.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    let mut best: Option<(f64, u8)> = None;
    for t in 0..255usize {
        w0 += hist[t];
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1) * (m0 - m1);
        if best.map_or(true, |(b, _)| between > b) {
            best = Some((between, t as u8));
        }
    }
    best.map(|(_, t)| t)
}

/// Ink mask of `raster`: Otsu-binarised luma, with the minority side taken
/// as ink so both dark-on-light and light-on-dark text work.
pub fn ink_mask(raster: &Raster) -> Vec<bool> {
    let (w, h) = (raster.width(), raster.height());
    let mut hist = [0u64; 256];
    for y in 0..h {
        for x in 0..w {
            hist[raster.luma(x, y) as usize] += 1;
        }
    }
    let Some(t) = otsu_threshold(&hist) else {
        return vec![false; w * h];
    };
    let dark: u64 = hist[..=t as usize].iter().sum();
    let dark_is_ink = 2 * dark <= (w * h) as u64;
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            mask.push((raster.luma(x, y) <= t) == dark_is_ink);
        }
    }
    mask
}

/// Horizontal projection-profile segmentation into text lines, top to
/// bottom. Rows with at least [`NOISE_FLOOR`] ink pixels seed bands, which
/// then grow over adjacent rows with any ink. A band is merged into
/// its neighbour when the gap between them is narrower than a quarter of the
/// taller band, so marks separated from their base letters stay on one line.
pub fn localize_lines(raster: &Raster) -> Vec<LineBox> {
    let (w, h) = (raster.width(), raster.height());
    let mask = ink_mask(raster);
    let row_ink: Vec<usize> = (0..h)
        .map(|y| mask[y * w..(y + 1) * w].iter().filter(|&&b| b).count())
        .collect();
    let mut bands: Vec<(usize, usize)> = Vec::new();
    let mut y = 0;
    while y < h {
        if row_ink[y] >= NOISE_FLOOR {
            let start = y;
            while y < h && row_ink[y] >= NOISE_FLOOR {
                y += 1;
            }
            bands.push((start, y));
        } else {
            y += 1;
        }
    }
    // grow each band over adjacent rows holding any ink, so thin strokes
    // at a glyph's top or bottom stay inside the line
    for i in 0..bands.len() {
        let floor = if i == 0 { 0 } else { bands[i - 1].1 };
        while bands[i].0 > floor && row_ink[bands[i].0 - 1] > 0 {
            bands[i].0 -= 1;
        }
        let ceil = bands.get(i + 1).map_or(h, |b| b.0);
        while bands[i].1 < ceil && row_ink[bands[i].1] > 0 {
            bands[i].1 += 1;
        }
    }
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for band in bands {
        if let Some(last) = merged.last_mut() {
            let gap = band.0 - last.1;
            let tallest = (last.1 - last.0).max(band.1 - band.0);
            if 4 * gap < tallest {
                last.1 = band.1;
                continue;
            }
        }
        merged.push(band);
    }
    merged
        .into_iter()
        .filter_map(|(y0, y1)| {
            let inked = |x: usize| (y0..y1).any(|y| mask[y * w + x]);
            let x0 = (0..w).find(|&x| inked(x))?;
            let x1 = (0..w).rev().find(|&x| inked(x))?;
            Some(LineBox {
                x: x0,
                y: y0,
                w: x1 - x0 + 1,
                h: y1 - y0,
            })
        })
        .collect()
}

/// Crops `line` and rescales it (nearest neighbour, aspect preserved) to the
/// detector's input height.
pub fn line_crop(raster: &Raster, line: &LineBox) -> Raster {
    let crop = raster.crop(line.x, line.y, line.w, line.h);
    let width = ((line.w * WORD_HEIGHT + line.h / 2) / line.h.max(1)).max(1);
    crop.resize_nearest(width, WORD_HEIGHT)
}

/// Runs the detector on one line and maps detections back to image pixels.
pub fn detect_line(
    net: &DetectorNet<f32>,
    config: &DetectorConfig,
    raster: &Raster,
    line: &LineBox,
) -> Result<Vec<Detection>, Error> {
    let crop = line_crop(raster, line);
    let x = input_tensor(&[&crop], padded_width(crop.width()))?;
    let out = net.infer(&x)?;
    let (_, gh, gw, _) = out.dims4()?;
    let anchors = generate_anchors(gh, gw, &config.anchor_shapes);
    let dets = postprocess(&decode(&out, 0, &anchors, config)?, config);
    let sx = line.w as f64 / crop.width() as f64;
    let sy = line.h as f64 / crop.height() as f64;
    Ok(dets
        .into_iter()
        .map(|d| Detection {
            bbox: BBox::new(
                line.x as f64 + d.bbox.cx * sx,
                line.y as f64 + d.bbox.cy * sy,
                d.bbox.w * sx,
                d.bbox.h * sy,
            ),
            ..d
        })
        .collect())
}

/// Outcome of [`identify_language`].
#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub lines: Vec<LineBox>,
    pub detections: Vec<Detection>,
    pub presence: PresenceVector,
    pub prediction: LanguagePrediction,
}

/// Full pipeline on one image. No lines or no diacritics yield an
/// indeterminate prediction.
pub fn identify_language(
    raster: &Raster,
    detector: &DetectorNet<f32>,
    config: &DetectorConfig,
    langid: &ShallowNet<f32>,
) -> Result<Identification, Error> {
    let lines = localize_lines(raster);
    let mut detections = Vec::new();
    for line in &lines {
        detections.extend(detect_line(detector, config, raster, line)?);
    }
    let presence = PresenceVector::from_detections(&detections, MIN_DETECTION_CONFIDENCE);
    let prediction = predict(langid, &presence)?;
    Ok(Identification {
        lines,
        detections,
        presence,
        prediction,
    })
}

/// One-vs-rest scores of one language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageScores {
    pub language: Language,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Per-language precision, recall and F1 over argmax predictions. Macro
/// averages run over the languages that occur as truth or prediction, so a
/// single-language test set is not diluted by absent languages.
///
/// `confusion[t][p]` counts samples of true language `t` predicted as `p`;
/// column [`LANGUAGE_COUNT`] holds indeterminate predictions, which count
/// as misses for the true language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub languages: Vec<LanguageScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub samples: usize,
    pub confusion: Vec<Vec<usize>>,
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Builds the report from `(truth, prediction)` pairs.
    pub fn from_pairs(pairs: &[(Language, Option<Language>)]) -> Self {
        let mut confusion = vec![vec![0usize; LANGUAGE_COUNT + 1]; LANGUAGE_COUNT];
        for &(truth, pred) in pairs {
            let col = pred.map_or(LANGUAGE_COUNT, Language::id);
            confusion[truth.id()][col] += 1;
        }
        let languages: Vec<LanguageScores> = Language::ALL
            .iter()
            .map(|&lang| {
                let l = lang.id();
                let tp = confusion[l][l];
                let support: usize = confusion[l].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[l]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                LanguageScores {
                    language: lang,
                    precision,
                    recall,
                    f1: f1(precision, recall),
                    support,
                    true_positives: tp,
                    false_positives: predicted - tp,
                    false_negatives: support - tp,
                }
            })
            .collect();
        let present: Vec<&LanguageScores> = languages
            .iter()
            .filter(|s| s.support + s.false_positives > 0)
            .collect();
        let mean = |f: fn(&LanguageScores) -> f64| {
            if present.is_empty() {
                0.0
            } else {
                present.iter().map(|s| f(s)).sum::<f64>() / present.len() as f64
            }
        };
        let correct: usize = (0..LANGUAGE_COUNT).map(|l| confusion[l][l]).sum();
        EvalReport {
            macro_precision: mean(|s| s.precision),
            macro_recall: mean(|s| s.recall),
            macro_f1: mean(|s| s.f1),
            accuracy: ratio(correct, pairs.len()),
            samples: pairs.len(),
            languages,
            confusion,
        }
    }
}
