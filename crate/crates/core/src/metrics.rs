//! Per-image segmentation metrics and their dataset mean.
//!
//! Volumetric scores (IoU, ACC, AUC, clDice) are percentages; the Betti error is an
//! integer count and the Hausdorff distance is in pixels.

use alloc::vec::Vec;

use crate::topo::{betti_numbers, hausdorff, skeletonize};
use crate::{BinaryMask, Error, FloatMap, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<Confusion> {
    check_dims(pred.dims(), gt.dims())?;
    let mut c = Confusion::default();
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        match (p != 0, g != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let c = confusion(pred, gt)?;
    let union = c.tp + c.fp + c.fn_;
    if union == 0 {
        return Err(Error::UndefinedIoU);
    }
    Ok(100.0 * c.tp as f64 / union as f64)
}

pub fn acc(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let c = confusion(pred, gt)?;
    Ok(100.0 * (c.tp + c.tn) as f64 / c.total() as f64)
}

/// Area under the ROC curve via the Mann-Whitney rank statistic, ties at mid-rank.
pub fn auc(prob: &FloatMap, gt: &BinaryMask) -> Result<f64> {
    check_dims(prob.dims(), gt.dims())?;
    let scores = prob.as_slice();
    if scores.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidValue("probability map (NaN)"));
    }
    let labels = gt.as_slice();
    let positives = labels.iter().filter(|&&v| v != 0).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateClasses);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of the positives, so mid-ranks stay integral.
    let mut rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end; twice their mean is start + end + 1.
        let mid2 = (start + end + 1) as u64;
        let pos_in_tie = order[start..end].iter().filter(|&&i| labels[i] != 0).count() as u64;
        rank_sum2 += mid2 * pos_in_tie;
        start = end;
    }
    let u2 = rank_sum2 - positives * (positives + 1);
    Ok(100.0 * u2 as f64 / (2 * positives * negatives) as f64)
}

/// Centerline Dice: harmonic mean of skeleton precision and sensitivity.
pub fn cl_dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_dims(pred.dims(), gt.dims())?;
    if !pred.has_foreground() || !gt.has_foreground() {
        return Err(Error::EmptyMask);
    }
    let skel_pred = skeletonize(pred);
    let skel_gt = skeletonize(gt);
    let (n_pred, n_gt) = (skel_pred.count(), skel_gt.count());
    if n_pred == 0 || n_gt == 0 {
        return Err(Error::EmptyMask);
    }
    let t_prec = skel_pred.intersection_count(gt) as f64 / n_pred as f64;
    let t_sens = skel_gt.intersection_count(pred) as f64 / n_gt as f64;
    if t_prec + t_sens == 0.0 {
        return Ok(0.0);
    }
    Ok(200.0 * (t_prec * t_sens) / (t_prec + t_sens))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BettiMode {
    /// `|db0| + |db1|`
    #[default]
    Sum,
    /// `|db1|` only.
    B1Only,
}

pub fn betti_error(pred: &BinaryMask, gt: &BinaryMask, mode: BettiMode) -> Result<usize> {
    check_dims(pred.dims(), gt.dims())?;
    let p = betti_numbers(pred);
    let g = betti_numbers(gt);
    let d1 = p.b1.abs_diff(g.b1);
    Ok(match mode {
        BettiMode::Sum => p.b0.abs_diff(g.b0) + d1,
        BettiMode::B1Only => d1,
    })
}

/// Which metrics [`evaluate`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSet {
    pub iou: bool,
    pub acc: bool,
    pub auc: bool,
    pub cl_dice: bool,
    pub betti: bool,
    pub hd: bool,
}

impl MetricSet {
    pub const ALL: Self = Self { iou: true, acc: true, auc: true, cl_dice: true, betti: true, hd: true };
    pub const NONE: Self = Self { iou: false, acc: false, auc: false, cl_dice: false, betti: false, hd: false };
    /// Non-tubular protocol: no clDice and no Betti error.
    pub const NON_TUBULAR: Self = Self { cl_dice: false, betti: false, ..Self::ALL };
}

impl Default for MetricSet {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Pixels with probability `>= threshold` are foreground; must lie in `(0, 1)`.
    pub threshold: f64,
    pub betti_mode: BettiMode,
    pub metrics: MetricSet,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { threshold: 0.5, betti_mode: BettiMode::Sum, metrics: MetricSet::ALL }
    }
}

/// Metrics of one image. `None` marks a metric that was not requested or is undefined
/// for this image; the reason for the latter is kept in `skipped`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub iou: Option<f64>,
    pub acc: Option<f64>,
    pub auc: Option<f64>,
    pub cl_dice: Option<f64>,
    pub betti_error: Option<usize>,
    pub hd: Option<f64>,
    pub skipped: Vec<(&'static str, Error)>,
}

/// Scores a probability map against ground truth.
///
/// Dimension mismatches and invalid options are errors; a metric that is undefined on
/// this particular image (empty union, single class, empty skeleton, ...) is left absent.
pub fn evaluate(prob: &FloatMap, gt: &BinaryMask, options: &EvalOptions) -> Result<MetricsReport> {
    check_dims(prob.dims(), gt.dims())?;
    if !(options.threshold > 0.0 && options.threshold < 1.0) {
        return Err(Error::InvalidValue("threshold (expected in (0, 1))"));
    }
    let pred = BinaryMask::threshold(prob, options.threshold);
    let m = options.metrics;
    let mut report = MetricsReport::default();
    let mut skipped = Vec::new();
    let mut record = |name: &'static str, r: Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            skipped.push((name, e));
            None
        }
    };
    if m.iou {
        report.iou = record("iou", iou(&pred, gt));
    }
    if m.acc {
        report.acc = record("acc", acc(&pred, gt));
    }
    if m.auc {
        report.auc = record("auc", auc(prob, gt));
    }
    if m.cl_dice {
        report.cl_dice = record("cl_dice", cl_dice(&pred, gt));
    }
    if m.hd {
        report.hd = record("hd", hausdorff(&pred, gt));
    }
    if m.betti {
        report.betti_error = Some(betti_error(&pred, gt, options.betti_mode)?);
    }
    report.skipped = skipped;
    Ok(report)
}

/// Arithmetic mean of each metric over the images where it is present.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsSummary {
    pub images: usize,
    pub iou: Option<f64>,
    pub acc: Option<f64>,
    pub auc: Option<f64>,
    pub cl_dice: Option<f64>,
    pub betti_error: Option<f64>,
    pub hd: Option<f64>,
}

pub fn summarize(reports: &[MetricsReport]) -> MetricsSummary {
    fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
        let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
    MetricsSummary {
        images: reports.len(),
        iou: mean(reports.iter().map(|r| r.iou)),
        acc: mean(reports.iter().map(|r| r.acc)),
        auc: mean(reports.iter().map(|r| r.auc)),
        cl_dice: mean(reports.iter().map(|r| r.cl_dice)),
        betti_error: mean(reports.iter().map(|r| r.betti_error.map(|v| v as f64))),
        hd: mean(reports.iter().map(|r| r.hd)),
    }
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}
