//! JSON shapes printed by the command-line tool.

use std::collections::BTreeMap;

use diaclid_core::detector::Detection;
use diaclid_core::langid::LanguagePrediction;
use diaclid_core::table::diacritic_at;
use diaclid_core::Language;
use serde::{Deserialize, Serialize};

/// Name printed for a prediction without diacritic evidence.
pub const INDETERMINATE: &str = "indeterminate";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionJson {
    pub language: String,
    pub confidence: f64,
    pub distribution: BTreeMap<String, f64>,
}

impl From<&LanguagePrediction> for PredictionJson {
    fn from(p: &LanguagePrediction) -> Self {
        PredictionJson {
            language: p.language.map_or(INDETERMINATE, Language::name).to_owned(),
            confidence: p.confidence,
            distribution: Language::ALL
                .iter()
                .map(|l| (l.name().to_owned(), p.probabilities[l.id()]))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionJson {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub class: usize,
    pub codepoint: String,
    pub confidence: f64,
}

impl From<&Detection> for DetectionJson {
    fn from(d: &Detection) -> Self {
        DetectionJson {
            cx: d.bbox.cx,
            cy: d.bbox.cy,
            w: d.bbox.w,
            h: d.bbox.h,
            class: d.class,
            codepoint: diacritic_at(d.class).map(String::from).unwrap_or_default(),
            confidence: d.confidence,
        }
    }
}

pub fn detections_json(dets: &[Detection]) -> Vec<DetectionJson> {
    dets.iter().map(DetectionJson::from).collect()
}
