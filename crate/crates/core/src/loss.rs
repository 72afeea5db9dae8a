//! Segmentation losses on probability maps, with analytic gradients.
//!
//! * object term: soft IoU, `1 - sum(w y p) / (sum(w (y + p - y p)) + eta)`, where the
//!   pixel weights `w` default to one and are the label FFM in the constrained loss;
//! * edge and skeleton terms: mean binary cross-entropy with `p` clamped to
//!   `[eps, 1 - eps]`;
//! * the composite `alpha * object + beta * edge + gamma * skeleton`.
//!
//! All reductions are sequential in raster order, so results are bit-stable.

use crate::{Error, FloatMap, Result};

/// Ground truth `y` (values in `{0, 1}`) and prediction `y_hat` (values in `[0, 1]`).
#[derive(Debug, Clone, Copy)]
pub struct PredictionPair<'a> {
    y: &'a FloatMap,
    y_hat: &'a FloatMap,
}

impl<'a> PredictionPair<'a> {
    pub fn new(y: &'a FloatMap, y_hat: &'a FloatMap) -> Result<Self> {
        check_dims(y, y_hat)?;
        if y.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidValue("ground truth (expected 0 or 1)"));
        }
        if y_hat.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidValue("prediction (expected [0, 1])"));
        }
        Ok(Self { y, y_hat })
    }

    pub fn y(&self) -> &'a FloatMap {
        self.y
    }

    pub fn y_hat(&self) -> &'a FloatMap {
        self.y_hat
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn dims(&self) -> (usize, usize) {
        self.y.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Soft-IoU smoothing term, `> 0`.
    pub eta: f64,
    /// BCE probability clamp, in `(0, 0.5)`.
    pub clamp_eps: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.5, gamma: 0.5, eta: 1.0, clamp_eps: 1e-7 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta)?;
        check_eps(self.clamp_eps)?;
        if ![self.alpha, self.beta, self.gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidValue("loss weights"));
        }
        Ok(())
    }
}

pub fn soft_iou_loss(pair: &PredictionPair<'_>, eta: f64, weights: Option<&FloatMap>) -> Result<f64> {
    let (inter, union) = iou_sums(pair, eta, weights)?;
    Ok(1.0 - inter / (union + eta))
}

pub fn bce_loss(pair: &PredictionPair<'_>, clamp_eps: f64) -> Result<f64> {
    check_eps(clamp_eps)?;
    if pair.is_empty() {
        return Err(Error::Empty);
    }
    let mut sum = 0.0;
    for (&y, &p) in pair.y.as_slice().iter().zip(pair.y_hat.as_slice()) {
        let p = p.clamp(clamp_eps, 1.0 - clamp_eps);
        sum += y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p);
    }
    Ok(-sum / pair.len() as f64)
}

pub fn global_loss(object: f64, edge: f64, skeleton: f64, w: &LossWeights) -> f64 {
    w.alpha * object + w.beta * edge + w.gamma * skeleton
}

/// Composite loss with the label FFM as pixel weights on the object (soft-IoU) term.
pub fn constrained_loss(
    object: &PredictionPair<'_>,
    edge: &PredictionPair<'_>,
    skeleton: &PredictionPair<'_>,
    ffm_label: &FloatMap,
    w: &LossWeights,
) -> Result<f64> {
    w.validate()?;
    let object_loss = soft_iou_loss(object, w.eta, Some(ffm_label))?;
    let edge_loss = bce_loss(edge, w.clamp_eps)?;
    let skeleton_loss = bce_loss(skeleton, w.clamp_eps)?;
    Ok(global_loss(object_loss, edge_loss, skeleton_loss, w))
}

/// `d soft_iou_loss / d y_hat` per pixel.
pub fn grad_soft_iou(pair: &PredictionPair<'_>, eta: f64, weights: Option<&FloatMap>) -> Result<FloatMap> {
    let (inter, union) = iou_sums(pair, eta, weights)?;
    let denom = union + eta;
    let denom_sq = denom * denom;
    let mut grad = pair.y_hat.map(|_| 0.0);
    let ys = pair.y.as_slice();
    for (i, g) in grad.as_mut_slice().iter_mut().enumerate() {
        let w = weights.map_or(1.0, |m| m.as_slice()[i]);
        let y = ys[i];
        // d inter = w y, d union = w (1 - y)
        *g = -(w * y * denom - inter * w * (1.0 - y)) / denom_sq;
    }
    Ok(grad)
}

/// `d bce_loss / d y_hat` per pixel; zero where the clamp is active.
pub fn grad_bce(pair: &PredictionPair<'_>, clamp_eps: f64) -> Result<FloatMap> {
    check_eps(clamp_eps)?;
    if pair.is_empty() {
        return Err(Error::Empty);
    }
    let n = pair.len() as f64;
    let mut grad = pair.y_hat.map(|_| 0.0);
    let ys = pair.y.as_slice();
    for (i, (g, &p)) in grad.as_mut_slice().iter_mut().zip(pair.y_hat.as_slice()).enumerate() {
        if p < clamp_eps || p > 1.0 - clamp_eps {
            continue;
        }
        let y = ys[i];
        *g = -(y / p - (1.0 - y) / (1.0 - p)) / n;
    }
    Ok(grad)
}

fn iou_sums(pair: &PredictionPair<'_>, eta: f64, weights: Option<&FloatMap>) -> Result<(f64, f64)> {
    check_eta(eta)?;
    let ys = pair.y.as_slice();
    let ps = pair.y_hat.as_slice();
    let mut inter = 0.0;
    let mut union = 0.0;
    match weights {
        None => {
            for (&y, &p) in ys.iter().zip(ps) {
                inter += y * p;
                union += y + p - y * p;
            }
        }
        Some(w) => {
            if w.dims() != pair.dims() {
                return Err(Error::DimensionMismatch { left: pair.dims(), right: w.dims() });
            }
            if w.as_slice().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidValue("loss weights (expected finite, >= 0)"));
            }
            for ((&y, &p), &w) in ys.iter().zip(ps).zip(w.as_slice()) {
                inter += w * (y * p);
                union += w * (y + p - y * p);
            }
        }
    }
    Ok((inter, union))
}

fn check_dims(a: &FloatMap, b: &FloatMap) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch { left: a.dims(), right: b.dims() });
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidValue("eta (expected > 0)"));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidValue("clamp_eps (expected in (0, 0.5))"));
    }
    Ok(())
}
