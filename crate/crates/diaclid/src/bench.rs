//! Model footprint and per-stage inference latency.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use diaclid_core::corpus::Raster;
use diaclid_core::detector::{DetectorConfig, DetectorNet};
use diaclid_core::langid::{predict, PresenceVector, ShallowNet, MIN_DETECTION_CONFIDENCE};
use diaclid_core::pipeline::{detect_line, localize_lines};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Fewest timed runs a report is based on.
pub const MIN_RUNS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median: f64,
    pub p95: f64,
}

impl LatencyStats {
    /// Median and nearest-rank 95th percentile. `samples` must be non-empty.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 };
        let rank = (0.95 * n as f64).ceil() as usize;
        LatencyStats {
            median,
            p95: s[rank.clamp(1, n) - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLatency {
    pub localize: LatencyStats,
    pub detect: LatencyStats,
    pub langid: LatencyStats,
    pub total: LatencyStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub hardware: String,
    pub sizes_bytes: BTreeMap<String, u64>,
    pub latency_ms: StageLatency,
    pub runs: usize,
}

/// CPU model, logical core count, OS and architecture.
pub fn hardware_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown CPU".into());
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}, {cores} logical cores available, {}-{}, single-threaded",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// On-disk sizes of both model files and their sum.
pub fn model_sizes(detector: &Path, langid: &Path) -> Result<BTreeMap<String, u64>, Error> {
    let size = |p: &Path| std::fs::metadata(p).map(|m| m.len()).map_err(Error::io(p));
    let (d, l) = (size(detector)?, size(langid)?);
    Ok(BTreeMap::from([
        ("detector".to_owned(), d),
        ("langid".to_owned(), l),
        ("total".to_owned(), d + l),
    ]))
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Times every stage of the pipeline over `images`, cycling through them
/// until at least `runs` (and at least [`MIN_RUNS`]) images are processed.
pub fn bench(
    detector_path: &Path,
    langid_path: &Path,
    detector: &DetectorNet<f32>,
    config: &DetectorConfig,
    langid: &ShallowNet<f32>,
    images: &[Raster],
    runs: usize,
) -> Result<BenchReport, Error> {
    if images.is_empty() {
        return Err(Error::Data("bench needs at least one sample image".into()));
    }
    let runs = runs.max(MIN_RUNS);
    let mut stages: [Vec<f64>; 4] = Default::default();
    for i in 0..runs {
        let raster = &images[i % images.len()];
        let start = Instant::now();
        let lines = localize_lines(raster);
        let t_localize = ms(start);
        let t = Instant::now();
        let mut detections = Vec::new();
        for line in &lines {
            detections.extend(detect_line(detector, config, raster, line)?);
        }
        let t_detect = ms(t);
        let t = Instant::now();
        let presence = PresenceVector::from_detections(&detections, MIN_DETECTION_CONFIDENCE);
        std::hint::black_box(predict(langid, &presence)?);
        let t_langid = ms(t);
        let t_total = ms(start);
        for (v, x) in stages.iter_mut().zip([t_localize, t_detect, t_langid, t_total]) {
            v.push(x);
        }
    }
    Ok(BenchReport {
        hardware: hardware_descriptor(),
        sizes_bytes: model_sizes(detector_path, langid_path)?,
        latency_ms: StageLatency {
            localize: LatencyStats::from_samples(&stages[0]),
            detect: LatencyStats::from_samples(&stages[1]),
            langid: LatencyStats::from_samples(&stages[2]),
            total: LatencyStats::from_samples(&stages[3]),
        },
        runs,
    })
}
