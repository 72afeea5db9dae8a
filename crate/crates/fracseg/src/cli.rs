//! `fracseg` command-line front-end.
//!
//! Every subcommand prints one JSON record per input on stdout (the `fd` table is
//! the exception unless `--json` is given). Per-file failures are reported as
//! `{"file": ..., "error": ...}` records and make the process exit with status 1;
//! the remaining inputs are still processed.

use std::collections::{BTreeMap, BTreeSet};
use std::error::Error as StdError;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracseg_core::fd::{estimate_fd, BoxCountMode, ScaleConfig};
use fracseg_core::ffm::FfmParams;
use fracseg_core::metrics::{betti_error, evaluate, summarize, BettiMode, EvalOptions, MetricSet, MetricsReport};
use fracseg_core::topo::{extract_edges, skeletonize};
use fracseg_core::{BinaryMask, FloatMap, GrayImage};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::engine::Engine;
use crate::{bench, io};

type BoxError = Box<dyn StdError + Send + Sync>;
type FileResult = Result<Value, BoxError>;

#[derive(Debug, Parser)]
#[command(name = "fracseg", version, about = "Fractal feature maps, FFM loss weights and segmentation metrics")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct FfmArgs {
    /// Odd sliding-window side.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Sampling stride; skipped pixels copy the nearest sampled value.
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    #[arg(long, default_value_t = 256)]
    pub gray_levels: u32,
    /// Size boxes from mean +/- std instead of min/max.
    #[arg(long)]
    pub robust: bool,
}

impl FfmArgs {
    pub fn params(&self) -> Result<FfmParams, BoxError> {
        let params =
            FfmParams { window: self.window, step: self.step, gray_levels: self.gray_levels, mode: mode(self.robust) };
        params.validate()?;
        Ok(params)
    }
}

fn mode(robust: bool) -> BoxCountMode {
    if robust {
        BoxCountMode::Robust
    } else {
        BoxCountMode::Standard
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BettiArg {
    Sum,
    B1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    All,
    Iou,
    Acc,
    Auc,
    Cldice,
    Betti,
    Hd,
}

fn metric_set(list: &[MetricArg]) -> MetricSet {
    let mut set = MetricSet::NONE;
    for m in list {
        match m {
            MetricArg::All => set = MetricSet::ALL,
            MetricArg::Iou => set.iou = true,
            MetricArg::Acc => set.acc = true,
            MetricArg::Auc => set.auc = true,
            MetricArg::Cldice => set.cl_dice = true,
            MetricArg::Betti => set.betti = true,
            MetricArg::Hd => set.hd = true,
        }
    }
    set
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fractal feature map of each image, written as `<stem>.ffm`.
    Ffm {
        /// Image files (PGM/PNG) or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        ffm: FfmArgs,
        /// Also write `<stem>.ffm.png` as a 16-bit preview.
        #[arg(long)]
        png16: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// FFM loss weights of each label mask, written as `<stem>.weights.ffm`.
    Weights {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        ffm: FfmArgs,
        #[arg(long)]
        png16: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Edge and skeleton masks of each label, written as `<stem>_edge.png` and `<stem>_skeleton.png`.
    Extract {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Whole-image fractal dimension estimates.
    Fd {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Comma-separated box sides; defaults to 2..=max(3, side/2).
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<usize>>,
        #[arg(long, default_value_t = 256)]
        gray_levels: u32,
        #[arg(long)]
        robust: bool,
        /// Emit JSON records instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Metrics of predictions against ground-truth masks, paired by file stem.
    Eval {
        /// Probability maps (`.ffm`) or gray images scaled by 1/(L-1).
        #[arg(long, required = true, num_args = 1..)]
        pred: Vec<PathBuf>,
        /// Ground-truth masks (0/255).
        #[arg(long, required = true, num_args = 1..)]
        gt: Vec<PathBuf>,
        /// Foreground when probability >= threshold.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = BettiArg::Sum)]
        betti: BettiArg,
        /// Sum Betti errors over square patches of this side; 0 evaluates whole images.
        #[arg(long, default_value_t = 0)]
        betti_patch: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        metrics: Vec<MetricArg>,
        /// Gray levels of image-valued predictions.
        #[arg(long, default_value_t = 256)]
        gray_levels: u32,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median FFM wall time on a seeded pseudo-random image.
    Bench {
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[command(flatten)]
        ffm: FfmArgs,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let engine = Engine::new(cli.threads);
    match dispatch(&engine, cli.command, stdout, stderr) {
        Ok(0) => 0,
        Ok(failures) => {
            let _ = writeln!(stderr, "{failures} input(s) failed");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

/// Returns the number of failed inputs; `Err` means nothing was processed.
fn dispatch(
    engine: &Engine,
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<usize, BoxError> {
    match command {
        Command::Ffm { inputs, ffm, png16, out } => {
            let params = ffm.params()?;
            let files = expand_inputs(&inputs)?;
            let outputs = output_names(&files, &out, &[".ffm", ".ffm.png"])?;
            fs::create_dir_all(&out)?;
            let results = per_file(engine, &files, |i, path| {
                let image = io::read_image(path)?;
                let map = engine.compute_ffm(&image, &params)?;
                write_map(&map, &outputs[i], png16)
            });
            emit(&files, results, stdout, stderr)
        }
        Command::Weights { inputs, ffm, png16, out } => {
            let params = ffm.params()?;
            let files = expand_inputs(&inputs)?;
            let outputs = output_names(&files, &out, &[".weights.ffm", ".weights.png"])?;
            fs::create_dir_all(&out)?;
            let results = per_file(engine, &files, |i, path| {
                let mask = io::read_mask(path)?;
                let map = engine.compute_ffm_label(&mask, &params)?;
                write_map(&map, &outputs[i], png16)
            });
            emit(&files, results, stdout, stderr)
        }
        Command::Extract { inputs, out } => {
            let files = expand_inputs(&inputs)?;
            let outputs = output_names(&files, &out, &["_edge.png", "_skeleton.png"])?;
            fs::create_dir_all(&out)?;
            let results = per_file(engine, &files, |i, path| {
                let mask = io::read_mask(path)?;
                let (edge, skel) = (extract_edges(&mask), skeletonize(&mask));
                io::write_mask_png(&edge, &outputs[i][0])?;
                io::write_mask_png(&skel, &outputs[i][1])?;
                Ok(json!({
                    "width": mask.width(),
                    "height": mask.height(),
                    "edge": outputs[i][0],
                    "edge_pixels": edge.count(),
                    "skeleton": outputs[i][1],
                    "skeleton_pixels": skel.count(),
                }))
            });
            emit(&files, results, stdout, stderr)
        }
        Command::Fd { inputs, scales, gray_levels, robust, json } => {
            let fixed = scales.map(|s| ScaleConfig::new(s, mode(robust))).transpose()?;
            if !(2..=65536).contains(&gray_levels) {
                return Err("gray levels must be in [2, 65536]".into());
            }
            let files = expand_inputs(&inputs)?;
            let results = per_file(engine, &files, |_, path| {
                let image = read_image_levels(path, gray_levels)?;
                let config = match &fixed {
                    Some(c) => c.clone(),
                    None => ScaleConfig::default_for_side(image.width().min(image.height()), mode(robust)),
                };
                let est = estimate_fd(&image, &config, gray_levels)?;
                Ok(json!({
                    "width": image.width(),
                    "height": image.height(),
                    "fd": est.fd,
                    "r_squared": est.r_squared,
                    "scales": config.scales(),
                }))
            });
            if json {
                return emit(&files, results, stdout, stderr);
            }
            writeln!(stdout, "{:<40} {:>6} {:>6} {:>10} {:>10}", "file", "width", "height", "fd", "r2")?;
            let mut failures = 0;
            for (path, r) in files.iter().zip(results) {
                match r {
                    Ok(v) => writeln!(
                        stdout,
                        "{:<40} {:>6} {:>6} {:>10.6} {:>10.6}",
                        path.display(),
                        v["width"],
                        v["height"],
                        v["fd"].as_f64().unwrap_or(f64::NAN),
                        v["r_squared"].as_f64().unwrap_or(f64::NAN),
                    )?,
                    Err(e) => {
                        failures += 1;
                        writeln!(stdout, "{:<40} error: {e}", path.display())?;
                        writeln!(stderr, "{}: {e}", path.display())?;
                    }
                }
            }
            Ok(failures)
        }
        Command::Eval { pred, gt, threshold, betti, betti_patch, metrics, gray_levels, out } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err("threshold must be in [0, 1]".into());
            }
            if !(2..=65536).contains(&gray_levels) {
                return Err("gray levels must be in [2, 65536]".into());
            }
            let betti_mode = match betti {
                BettiArg::Sum => BettiMode::Sum,
                BettiArg::B1 => BettiMode::B1Only,
            };
            let set = metric_set(&metrics);
            let options = EvalOptions {
                threshold,
                betti_mode,
                metrics: MetricSet { betti: set.betti && betti_patch == 0, ..set },
            };
            let patch = (set.betti && betti_patch > 0).then_some(betti_patch);
            let pairs = pair_by_stem(&expand_inputs(&pred)?, &expand_inputs(&gt)?)?;

            let results: Vec<Result<MetricsReport, BoxError>> = engine.install(|| {
                pairs
                    .par_iter()
                    .map(|pair| -> Result<MetricsReport, BoxError> {
                        let (Some(p), Some(g)) = (&pair.pred, &pair.gt) else {
                            return Err(format!(
                                "no matching {} file",
                                if pair.pred.is_none() { "prediction" } else { "ground-truth" }
                            )
                            .into());
                        };
                        let prob = read_prediction(p, gray_levels)?;
                        let mask = io::read_mask(g)?;
                        let mut report = evaluate(&prob, &mask, &options)?;
                        if let Some(side) = patch {
                            report.betti_error = Some(patch_betti_error(
                                &BinaryMask::threshold(&prob, threshold),
                                &mask,
                                betti_mode,
                                side,
                            )?);
                        }
                        Ok(report)
                    })
                    .collect()
            });

            let mut lines = Vec::new();
            let mut ok = Vec::new();
            let mut failures = 0;
            for (pair, r) in pairs.iter().zip(results) {
                let mut rec = json!({ "image": pair.stem, "pred": pair.pred, "gt": pair.gt });
                match r {
                    Ok(report) => {
                        merge(&mut rec, report_json(&report));
                        ok.push(report);
                    }
                    Err(e) => {
                        failures += 1;
                        writeln!(stderr, "{}: {e}", pair.stem)?;
                        rec["error"] = json!(e.to_string());
                    }
                }
                lines.push(rec);
            }
            let s = summarize(&ok);
            lines.push(json!({
                "mean": true,
                "images": s.images,
                "failed": failures,
                "iou": s.iou,
                "acc": s.acc,
                "auc": s.auc,
                "cl_dice": s.cl_dice,
                "betti_error": s.betti_error,
                "hd": s.hd,
            }));
            let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
            match out {
                Some(path) => fs::write(path, text)?,
                None => stdout.write_all(text.as_bytes())?,
            }
            Ok(failures)
        }
        Command::Bench { size, ffm, reps } => {
            let report = bench::run(engine, size, &ffm.params()?, reps)?;
            writeln!(stdout, "{}", report.to_json())?;
            Ok(0)
        }
    }
}

/// Sums the Betti error over a grid of `side x side` patches; edge patches may be smaller.
pub fn patch_betti_error(
    pred: &BinaryMask,
    gt: &BinaryMask,
    mode: BettiMode,
    side: usize,
) -> fracseg_core::Result<usize> {
    if pred.dims() != gt.dims() {
        return Err(fracseg_core::Error::DimensionMismatch { left: pred.dims(), right: gt.dims() });
    }
    if side == 0 {
        return Err(fracseg_core::Error::InvalidParams("patch side must be positive"));
    }
    let (w, h) = pred.dims();
    let crop = |m: &BinaryMask, x0: usize, y0: usize, pw: usize, ph: usize| {
        BinaryMask::from_fn(pw, ph, |x, y| m.get(x0 + x, y0 + y))
    };
    let mut total = 0;
    for y0 in (0..h).step_by(side) {
        for x0 in (0..w).step_by(side) {
            let (pw, ph) = (side.min(w - x0), side.min(h - y0));
            total += betti_error(&crop(pred, x0, y0, pw, ph), &crop(gt, x0, y0, pw, ph), mode)?;
        }
    }
    Ok(total)
}

fn report_json(r: &MetricsReport) -> Value {
    let skipped: BTreeMap<&str, String> = r.skipped.iter().map(|(k, e)| (*k, e.to_string())).collect();
    json!({
        "iou": r.iou,
        "acc": r.acc,
        "auc": r.auc,
        "cl_dice": r.cl_dice,
        "betti_error": r.betti_error,
        "hd": r.hd,
        "skipped": skipped,
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn write_map(map: &FloatMap, outputs: &[PathBuf], png16: bool) -> FileResult {
    io::write_ffm(map, &outputs[0])?;
    let mut rec = json!({ "width": map.width(), "height": map.height(), "ffm": outputs[0] });
    if png16 {
        io::export_png16(map, &outputs[1])?;
        rec["png16"] = json!(outputs[1]);
    }
    Ok(rec)
}

fn read_image_levels(path: &Path, gray_levels: u32) -> Result<GrayImage, BoxError> {
    let image = io::read_image(path)?;
    Ok(GrayImage::with_gray_levels(image.width(), image.height(), image.as_slice().to_vec(), gray_levels)?)
}

/// `.ffm` files are read as probabilities; images are scaled by `1 / (L - 1)`.
fn read_prediction(path: &Path, gray_levels: u32) -> Result<FloatMap, BoxError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ffm")) {
        return Ok(io::read_ffm(path)?);
    }
    let image = read_image_levels(path, gray_levels)?;
    let top = f64::from(gray_levels - 1);
    Ok(image.pixels().map(|&v| f64::from(v) / top))
}

fn per_file<F>(engine: &Engine, files: &[PathBuf], f: F) -> Vec<FileResult>
where
    F: Fn(usize, &Path) -> FileResult + Sync,
{
    engine.install(|| files.par_iter().enumerate().map(|(i, p)| f(i, p)).collect())
}

fn emit(
    files: &[PathBuf],
    results: Vec<FileResult>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<usize, BoxError> {
    let mut failures = 0;
    for (path, r) in files.iter().zip(results) {
        let mut rec = json!({ "file": path });
        match r {
            Ok(v) => merge(&mut rec, v),
            Err(e) => {
                failures += 1;
                writeln!(stderr, "{}: {e}", path.display())?;
                rec["error"] = json!(e.to_string());
            }
        }
        writeln!(stdout, "{rec}")?;
    }
    Ok(failures)
}

const INPUT_EXTENSIONS: [&str; 3] = ["pgm", "png", "ffm"];

/// Expands directories into their supported files (sorted); plain paths pass through.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, BoxError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> =
                fs::read_dir(input)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            entries.retain(|p| {
                p.is_file()
                    && p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| INPUT_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
            });
            entries.sort();
            files.extend(entries);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err("no input files".into());
    }
    Ok(files)
}

fn stem(path: &Path) -> Result<String, BoxError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| format!("{}: cannot derive a file name", path.display()).into())
}

/// Output paths `<out>/<stem><suffix>` per input; colliding stems are rejected up front.
fn output_names(files: &[PathBuf], out: &Path, suffixes: &[&str]) -> Result<Vec<Vec<PathBuf>>, BoxError> {
    let mut seen = BTreeSet::new();
    files
        .iter()
        .map(|f| {
            let s = stem(f)?;
            if !seen.insert(s.clone()) {
                return Err(format!("two inputs share the name '{s}'; outputs would collide").into());
            }
            Ok(suffixes.iter().map(|suffix| out.join(format!("{s}{suffix}"))).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub stem: String,
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
}

/// Matches predictions to ground truth by file stem, sorted by stem. Unmatched
/// files keep a `None` partner and are reported as errors by the caller.
pub fn pair_by_stem(pred: &[PathBuf], gt: &[PathBuf]) -> Result<Vec<Pair>, BoxError> {
    let mut pairs: BTreeMap<String, Pair> = BTreeMap::new();
    for (files, is_pred) in [(pred, true), (gt, false)] {
        for f in files {
            let s = stem(f)?;
            let entry = pairs.entry(s.clone()).or_insert_with(|| Pair { stem: s.clone(), pred: None, gt: None });
            let slot = if is_pred { &mut entry.pred } else { &mut entry.gt };
            if slot.is_some() {
                return Err(format!(
                    "two {} files share the name '{s}'",
                    if is_pred { "prediction" } else { "ground-truth" }
                )
                .into());
            }
            *slot = Some(f.clone());
        }
    }
    Ok(pairs.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_is_sorted_and_reports_orphans() {
        let p = |s: &str| PathBuf::from(s);
        let pairs = pair_by_stem(&[p("x/b.ffm"), p("x/a.ffm")], &[p("y/a.png"), p("y/c.png")]).unwrap();
        let stems: Vec<_> = pairs.iter().map(|q| q.stem.as_str()).collect();
        assert_eq!(stems, ["a", "b", "c"]);
        assert!(pairs[1].gt.is_none());
        assert!(pairs[2].pred.is_none());
        assert!(pair_by_stem(&[p("a.ffm"), p("z/a.png")], &[]).is_err());
    }

    #[test]
    fn metric_list_parses() {
        assert_eq!(metric_set(&[MetricArg::All]), MetricSet::ALL);
        let s = metric_set(&[MetricArg::Iou, MetricArg::Hd]);
        assert!(s.iou && s.hd && !s.auc && !s.betti);
    }

    #[test]
    fn whole_image_patch_matches_plain_betti_error() {
        let ring = BinaryMask::from_fn(9, 9, |x, y| (2..7).contains(&x) && (2..7).contains(&y) && !(x == 4 && y == 4));
        let dot = BinaryMask::from_fn(9, 9, |x, y| x == 1 && y == 1);
        let whole = betti_error(&ring, &dot, BettiMode::Sum).unwrap();
        assert_eq!(patch_betti_error(&ring, &dot, BettiMode::Sum, 9).unwrap(), whole);
        assert_eq!(patch_betti_error(&ring, &ring, BettiMode::Sum, 3).unwrap(), 0);
    }
}
