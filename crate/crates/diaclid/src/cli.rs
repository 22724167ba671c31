//! Command-line front end. [`run`] parses arguments, dispatches and maps
//! outcomes to exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use diaclid_core::corpus::{test_images, word_images, AnnotatedImage, Raster};
use diaclid_core::detector::{fit_anchor_shapes, DetectorConfig, DetectorTrainer, OptimizerKind};
use diaclid_core::langid::{
    gen_training_vectors, predict, ChunkConfig, LangidTrainConfig, PresenceVector,
};
use diaclid_core::pipeline::{identify_language, EvalReport};
use diaclid_core::table::to_csv;
use diaclid_core::Language;
use serde::Serialize;

use crate::bench::{bench, BenchReport, MIN_RUNS};
use crate::bundled::{corpus_texts, language_text, read_text_dir};
use crate::corpus_io::{read_corpus, write_corpus};
use crate::eval::{eval_ground_truth, eval_langid, EvalSummary};
use crate::image_io::read_image;
use crate::model::{load_detector, load_langid, save_detector, save_langid};
use crate::output::{detections_json, PredictionJson};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "diaclid", version, about = "Identify the language of text in images from its diacritics")]
pub struct Cli {
    /// Print results to stdout as one-line JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render annotated word images (height 16) for detector training.
    GenWords(GenArgs),
    /// Render language-labelled 150x150 test images.
    GenTest(GenArgs),
    /// Train the diacritic detector on a word-image corpus.
    TrainDetector(TrainDetectorArgs),
    /// Train the presence-vector language classifier on running text.
    TrainLangid(TrainLangidArgs),
    /// Detect diacritics in a word or line image.
    Detect(DetectArgs),
    /// Identify the language of the text in an image.
    Identify(IdentifyArgs),
    /// Identify a language from the diacritics of a string.
    IdentifyText(IdentifyTextArgs),
    /// Per-language precision, recall and F1 on a labelled test set.
    Eval(EvalArgs),
    /// Model sizes and per-stage inference latency.
    Bench(BenchArgs),
    /// Write the diacritic table as CSV.
    ExportTable(ExportTableArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Language name, or `all` for every language.
    #[arg(long)]
    pub lang: String,
    /// Images per language.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory of `<language>.txt` files; defaults to the bundled text.
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainDetectorArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// NMS IoU threshold.
    #[arg(long)]
    pub nms: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// `adam` or `sgd`.
    #[arg(long, value_parser = parse_optimizer)]
    pub optimizer: Option<OptimizerKind>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct TrainLangidArgs {
    /// Directory of `<language>.txt` files; defaults to the bundled text.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Presence vectors generated per language.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Write detections here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub detector: PathBuf,
    #[arg(long)]
    pub langid: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdentifyTextArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub text: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub testset: PathBuf,
    /// Without a detector only the ground-truth presence report is produced.
    #[arg(long)]
    pub detector: Option<PathBuf>,
    #[arg(long)]
    pub langid: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub detector: PathBuf,
    #[arg(long)]
    pub langid: PathBuf,
    /// Corpus directory of sample images; without it test images are
    /// generated from the bundled text.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, default_value_t = MIN_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExportTableArgs {
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "adam" => Ok(OptimizerKind::Adam),
        "sgd" => Ok(OptimizerKind::Sgd),
        _ => Err(format!("unknown optimizer {s:?} (expected adam or sgd)")),
    }
}

/// Languages named by a `--lang` value.
pub fn parse_languages(s: &str) -> Result<Vec<Language>, Error> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Language::ALL.to_vec());
    }
    s.parse::<Language>()
        .map(|l| vec![l])
        .map_err(|e| Error::Data(e.to_string()))
}

/// Seed of one language's share of a generated dataset, so a language
/// renders the same images alone or as part of `all`.
pub fn language_seed(seed: u64, lang: Language) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (lang.id() as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

/// Generated word or test images of `langs`, `count` per language, in
/// language order.
pub fn generate(
    langs: &[Language],
    count: usize,
    seed: u64,
    text_dir: Option<&Path>,
    test: bool,
) -> Result<Vec<AnnotatedImage>, Error> {
    let mut images = Vec::with_capacity(langs.len() * count);
    for &lang in langs {
        let text = language_text(text_dir, lang)?;
        let s = language_seed(seed, lang);
        let batch = if test {
            test_images(&text, lang, count, s)?
        } else {
            word_images(&text, lang, count, s)?
        };
        images.extend(batch);
    }
    Ok(images)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn emit<S: Serialize>(out: &mut dyn Write, value: &S) -> Result<(), Error> {
    let s = serde_json::to_string(value).map_err(|e| Error::Data(e.to_string()))?;
    writeln!(out, "{s}").map_err(Error::io("<stdout>"))
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), Error> {
    writeln!(out, "{text}").map_err(Error::io("<stdout>"))
}

#[derive(Serialize)]
struct GenSummary<'a> {
    out: &'a Path,
    images: usize,
    boxes: usize,
}

#[derive(Serialize)]
struct TrainDetectorSummary<'a> {
    out: &'a Path,
    images: usize,
    anchor_shapes: &'a [(f32, f32)],
    epochs: &'a [diaclid_core::detector::EpochLog],
}

#[derive(Serialize)]
struct TrainLangidSummary<'a> {
    out: &'a Path,
    train: usize,
    validation: usize,
    epochs: &'a [diaclid_core::langid::LangidEpochLog],
    validation_macro_f1: f64,
}

#[derive(Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    summary: Option<EvalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth_presence: Option<EvalReport>,
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    match &cli.command {
        Command::GenWords(a) | Command::GenTest(a) => {
            let test = matches!(cli.command, Command::GenTest(_));
            let langs = parse_languages(&a.lang)?;
            let images = generate(&langs, a.count, a.seed, a.text.as_deref(), test)?;
            write_corpus(&a.out, &images)?;
            let summary = GenSummary {
                out: &a.out,
                images: images.len(),
                boxes: images.iter().map(|im| im.boxes.len()).sum(),
            };
            if cli.json {
                emit(out, &summary)
            } else {
                say(out, &format!("wrote {} images with {} diacritic boxes to {}", summary.images, summary.boxes, a.out.display()))
            }
        }
        Command::TrainDetector(a) => train_detector_cmd(cli.json, a, out, err),
        Command::TrainLangid(a) => train_langid_cmd(cli.json, a, out, err),
        Command::Detect(a) => {
            let (net, config) = load_detector(&a.model)?;
            let raster = read_image(&a.image)?;
            let dets = diaclid_core::detector::detect(&net, &raster, &config)?;
            let json = detections_json(&dets);
            if let Some(path) = &a.out {
                let s = serde_json::to_string_pretty(&json).map_err(|e| Error::Data(e.to_string()))?;
                std::fs::write(path, s + "\n").map_err(Error::io(path))?;
            }
            if cli.json {
                emit(out, &json)
            } else {
                for d in &json {
                    say(out, &format!("{} at ({:.1}, {:.1}) size {:.1}x{:.1} confidence {:.3}", d.codepoint, d.cx, d.cy, d.w, d.h, d.confidence))?;
                }
                Ok(())
            }
        }
        Command::Identify(a) => {
            let (net, config) = load_detector(&a.detector)?;
            let langid = load_langid(&a.langid)?;
            let raster = read_image(&a.image)?;
            let id = identify_language(&raster, &net, &config, &langid)?;
            print_prediction(cli.json, out, &PredictionJson::from(&id.prediction))
        }
        Command::IdentifyText(a) => {
            let langid = load_langid(&a.model)?;
            let p = predict(&langid, &PresenceVector::from_text(&a.text))?;
            print_prediction(cli.json, out, &PredictionJson::from(&p))
        }
        Command::Eval(a) => eval_cmd(cli.json, a, out),
        Command::Bench(a) => bench_cmd(cli.json, a, out),
        Command::ExportTable(a) => {
            let csv = to_csv();
            match &a.out {
                Some(path) => std::fs::write(path, csv).map_err(Error::io(path)),
                None => write!(out, "{csv}").map_err(Error::io("<stdout>")),
            }
        }
    }
}

fn print_prediction(json: bool, out: &mut dyn Write, p: &PredictionJson) -> Result<(), Error> {
    if json {
        emit(out, p)
    } else {
        say(out, &format!("{} ({:.3})", p.language, p.confidence))
    }
}

fn train_detector_cmd(json: bool, a: &TrainDetectorArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let corpus = read_corpus(&a.corpus)?;
    if corpus.is_empty() {
        return Err(Error::Data(format!("{}: empty corpus", a.corpus.display())));
    }
    let mut config = DetectorConfig::default();
    if let Some(o) = a.optimizer {
        config.optimizer = o;
        if o == OptimizerKind::Sgd && a.lr.is_none() {
            config.lr = 0.01;
        }
    }
    if let Some(lr) = a.lr {
        config.lr = lr;
    }
    if let Some(b) = a.batch {
        config.batch_size = b;
    }
    if let Some(t) = a.nms {
        config.nms_threshold = t;
    }
    if let Some(d) = a.dropout {
        config.dropout = d;
    }
    let sizes: Vec<(f32, f32)> = corpus.iter().flat_map(|im| im.boxes.iter().map(|b| (b.w, b.h))).collect();
    if sizes.len() >= config.anchors_per_cell {
        config.anchor_shapes = fit_anchor_shapes(&sizes, config.anchors_per_cell, a.seed);
    }
    let mut trainer = DetectorTrainer::new(config, a.seed)?;
    for epoch in 0..a.epochs {
        match trainer.run_epoch(&corpus, |_, _| {}) {
            Ok(log) if !a.quiet => {
                let _ = writeln!(
                    err,
                    "epoch {}/{}: class {:.4} bbox {:.4} conf {:.4} total {:.4}",
                    epoch + 1,
                    a.epochs,
                    log.class_loss,
                    log.bbox_loss,
                    log.conf_loss,
                    log.total
                );
            }
            Ok(_) => {}
            Err(e) => {
                // keep the last clean weights on disk before reporting
                save_detector(&a.out, trainer.last_good(), &trainer.config)?;
                return Err(e.into());
            }
        }
    }
    save_detector(&a.out, &trainer.net, &trainer.config)?;
    let summary = TrainDetectorSummary {
        out: &a.out,
        images: corpus.len(),
        anchor_shapes: &trainer.config.anchor_shapes,
        epochs: &trainer.log,
    };
    if json {
        emit(out, &summary)
    } else {
        say(out, &format!("trained {} epochs on {} images, saved {}", a.epochs, corpus.len(), a.out.display()))
    }
}

fn train_langid_cmd(json: bool, a: &TrainLangidArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Error> {
    let texts = match &a.corpus {
        Some(dir) => read_text_dir(dir)?,
        None => corpus_texts(),
    };
    let refs: Vec<(Language, &str)> = texts.iter().map(|(l, t)| (*l, t.as_str())).collect();
    let chunks = ChunkConfig {
        samples_per_language: a.samples,
        ..ChunkConfig::default()
    };
    let data = gen_training_vectors(&refs, &chunks, a.seed)?;
    let config = LangidTrainConfig {
        epochs: a.epochs,
        ..LangidTrainConfig::default()
    };
    let (net, log) = diaclid_core::langid::train_langid(&data, &config, a.seed)?;
    save_langid(&a.out, &net)?;
    let mut pairs = Vec::with_capacity(data.validation.len());
    for v in &data.validation {
        pairs.push((v.language, predict(&net, &v.vector)?.language));
    }
    let macro_f1 = EvalReport::from_pairs(&pairs).macro_f1;
    if json {
        emit(
            out,
            &TrainLangidSummary {
                out: &a.out,
                train: data.train.len(),
                validation: data.validation.len(),
                epochs: &log,
                validation_macro_f1: macro_f1,
            },
        )
    } else {
        for l in &log {
            let _ = writeln!(err, "epoch {}: loss {:.4} train acc {:.4} val acc {:.4}", l.epoch, l.loss, l.train_accuracy, l.validation_accuracy);
        }
        say(out, &format!("validation macro-F1 {macro_f1:.4}, saved {}", a.out.display()))
    }
}

fn print_report(out: &mut dyn Write, title: &str, r: &EvalReport) -> Result<(), Error> {
    say(out, title)?;
    say(out, "language     precision  recall  f1     support")?;
    for s in &r.languages {
        say(out, &format!("{:<12} {:>9.3} {:>7.3} {:>6.3} {:>7}", s.language.name(), s.precision, s.recall, s.f1, s.support))?;
    }
    say(out, &format!("macro        {:>9.3} {:>7.3} {:>6.3} {:>7}", r.macro_precision, r.macro_recall, r.macro_f1, r.samples))?;
    say(out, &format!("accuracy {:.3}", r.accuracy))
}

fn eval_cmd(json: bool, a: &EvalArgs, out: &mut dyn Write) -> Result<(), Error> {
    let testset = read_corpus(&a.testset)?;
    if testset.is_empty() {
        return Err(Error::Data(format!("{}: empty test set", a.testset.display())));
    }
    let langid = load_langid(&a.langid)?;
    let result = match &a.detector {
        Some(path) => {
            let (net, config) = load_detector(path)?;
            EvalOutput {
                summary: Some(eval_langid(&testset, &net, &config, &langid)?),
                ground_truth_presence: None,
            }
        }
        None => EvalOutput {
            summary: None,
            ground_truth_presence: Some(eval_ground_truth(&testset, &langid)?),
        },
    };
    if json {
        return emit(out, &result);
    }
    if let Some(s) = &result.summary {
        print_report(out, "pipeline", &s.pipeline)?;
        say(out, &format!("detection recall {:.3}, mean IoU {:.3}\n", s.detection.recall, s.detection.mean_iou))?;
        print_report(out, "ground-truth presence", &s.ground_truth_presence)?;
    }
    if let Some(r) = &result.ground_truth_presence {
        print_report(out, "ground-truth presence", r)?;
    }
    Ok(())
}

fn bench_cmd(json: bool, a: &BenchArgs, out: &mut dyn Write) -> Result<(), Error> {
    let (net, config) = load_detector(&a.detector)?;
    let langid = load_langid(&a.langid)?;
    let images: Vec<Raster> = match &a.images {
        Some(dir) => read_corpus(dir)?.into_iter().map(|im| im.raster).collect(),
        None => generate(&Language::ALL, MIN_RUNS.div_ceil(Language::ALL.len()), a.seed, None, true)?
            .into_iter()
            .map(|im| im.raster)
            .collect(),
    };
    let report: BenchReport = bench(&a.detector, &a.langid, &net, &config, &langid, &images, a.runs)?;
    if json {
        return emit(out, &report);
    }
    say(out, &format!("hardware: {}", report.hardware))?;
    for (k, v) in &report.sizes_bytes {
        say(out, &format!("size {k}: {v} bytes"))?;
    }
    let l = &report.latency_ms;
    for (name, s) in [("localize", l.localize), ("detect", l.detect), ("langid", l.langid), ("total", l.total)] {
        say(out, &format!("{name:<9} median {:>9.3} ms  p95 {:>9.3} ms", s.median, s.p95))?;
    }
    Ok(())
}
