//! Box-counting fractal dimension of a gray-level intensity surface.
//!
//! The region is treated as a 3-D volume (x, y, gray level) tiled with boxes of size
//! `k x k x h`, where `h = (L - 1) * k / M`. Each `k x k` grid needs as many boxes as its
//! gray range spans; summing over grids gives `N_r` for `r = k / M`, and the fractal
//! dimension is the least-squares slope of `log N_r` against `log(1/r)`.
//!
//! Boxes are indexed from 1 with `index = max(1, ceil(g / h))`, so a zero-valued grid
//! still occupies one box. Grids cut by the region border contribute their box count
//! scaled by the fraction of the grid that lies inside the region; a flat region then
//! has `N_r = (M / k)^2` exactly and an FD of 2 for any scale set.

use alloc::vec::Vec;

use crate::{Error, GrayImage, Result};

/// How a grid's gray range is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxCountMode {
    /// Minimum and maximum gray value of the grid.
    #[default]
    Standard,
    /// `mean -/+ std` (population), clamped to `[0, L - 1]`. Less sensitive to isolated noisy pixels.
    Robust,
}

/// Box sizes used for one FD estimate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleConfig {
    scales: Vec<usize>,
    mode: BoxCountMode,
}

impl ScaleConfig {
    /// `scales` must be non-empty, strictly increasing and all `>= 2`.
    pub fn new(scales: Vec<usize>, mode: BoxCountMode) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidScaleConfig("no scales"));
        }
        if scales[0] < 2 {
            return Err(Error::InvalidScaleConfig("scales must be >= 2"));
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScaleConfig("scales must be strictly increasing"));
        }
        Ok(Self { scales, mode })
    }

    /// `k = 2, 3, ..., max(3, side / 2)`.
    pub fn default_for_side(side: usize, mode: BoxCountMode) -> Self {
        Self { scales: default_scales(side), mode }
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn mode(&self) -> BoxCountMode {
        self.mode
    }

    pub fn max_scale(&self) -> usize {
        *self.scales.last().expect("validated non-empty")
    }
}

pub fn default_scales(side: usize) -> Vec<usize> {
    (2..=core::cmp::max(3, side / 2)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdEstimate {
    pub fd: f64,
    /// `(log(1/r), log N_r)` for each scale, in scale order.
    pub points: Vec<(f64, f64)>,
    pub r_squared: f64,
}

/// Ordinary least-squares line through a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// 1-based index of the box holding gray value `g` when boxes are `h` tall.
#[inline]
pub fn box_index(g: f64, h: f64) -> i64 {
    let idx = libm::ceil(g / h) as i64;
    if idx < 1 {
        1
    } else {
        idx
    }
}

/// Number of boxes of height `h` needed to cover gray values in `[lo, hi]`.
#[inline]
pub fn box_span_range(lo: f64, hi: f64, h: f64) -> u64 {
    (box_index(hi, h) - box_index(lo, h) + 1) as u64
}

/// Boxes needed to cover all gray levels of `block` (Standard mode).
pub fn box_span(block: &GrayImage, h: f64) -> Result<u64> {
    if !(h > 0.0) {
        return Err(Error::InvalidValue("box height"));
    }
    let data = block.as_slice();
    let (&lo, &hi) = match (data.iter().min(), data.iter().max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::Empty),
    };
    Ok(box_span_range(f64::from(lo), f64::from(hi), h))
}

/// Box height for scale `k` on a region whose (shorter) side is `side`.
#[inline]
pub fn box_height(gray_levels: u32, k: usize, side: usize) -> f64 {
    f64::from(gray_levels - 1) * k as f64 / side as f64
}

/// Weighted box count `N_r` of `region` at scale `k`.
pub fn box_count_at_scale(region: &GrayImage, k: usize, gray_levels: u32, mode: BoxCountMode) -> Result<f64> {
    check_gray_levels(region, gray_levels)?;
    let side = region_side(region)?;
    if k < 2 || k > side {
        return Err(Error::InvalidScale { scale: k, side });
    }
    let layout = ScaleLayout::new(k, region.width(), region.height(), gray_levels);
    Ok(layout.count(region.as_slice(), region.width(), 0, 0, mode))
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Box-counting fractal dimension of `region`.
///
/// With a single scale the dimension is `log N_r / log(M / k)` instead of a fit.
pub fn estimate_fd(region: &GrayImage, config: &ScaleConfig, gray_levels: u32) -> Result<FdEstimate> {
    check_gray_levels(region, gray_levels)?;
    let kernel = FdKernel::new(region.width(), region.height(), config, gray_levels)?;
    let mut points = Vec::with_capacity(config.scales().len());
    let (fd, r_squared) = kernel.eval(region.as_slice(), region.width(), 0, 0, &mut points)?;
    Ok(FdEstimate { fd, points, r_squared })
}

/// Precomputed box layout for estimating the FD of many equally sized regions.
///
/// Used by the FFM engine to evaluate every sliding window in place, without copying
/// the window out of the padded image. Results are bit-identical to [`estimate_fd`]
/// on the same pixels.
#[derive(Debug, Clone)]
pub struct FdKernel {
    width: usize,
    height: usize,
    mode: BoxCountMode,
    layouts: Vec<ScaleLayout>,
}

impl FdKernel {
    pub fn new(width: usize, height: usize, config: &ScaleConfig, gray_levels: u32) -> Result<Self> {
        if gray_levels < 2 {
            return Err(Error::InvalidParams("gray levels must be >= 2"));
        }
        let side = core::cmp::min(width, height);
        if side == 0 {
            return Err(Error::Empty);
        }
        if config.max_scale() > side {
            return Err(Error::InvalidScale { scale: config.max_scale(), side });
        }
        let layouts = config.scales().iter().map(|&k| ScaleLayout::new(k, width, height, gray_levels)).collect();
        Ok(Self { width, height, mode: config.mode(), layouts })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// FD of the region whose top-left pixel is `(x0, y0)` inside `image`.
    ///
    /// `scratch` is reused between calls to avoid an allocation per window.
    pub fn fd_at(&self, image: &GrayImage, x0: usize, y0: usize, scratch: &mut Vec<(f64, f64)>) -> Result<f64> {
        assert!(x0 + self.width <= image.width() && y0 + self.height <= image.height());
        self.eval(image.as_slice(), image.width(), x0, y0, scratch).map(|(fd, _)| fd)
    }

    fn eval(
        &self,
        data: &[u16],
        stride: usize,
        x0: usize,
        y0: usize,
        points: &mut Vec<(f64, f64)>,
    ) -> Result<(f64, f64)> {
        points.clear();
        for layout in &self.layouts {
            let n_r = layout.count(data, stride, x0, y0, self.mode);
            points.push((layout.log_inv_r, libm::log(n_r)));
        }
        if let [(x, y)] = points.as_slice() {
            if !(*x > 0.0) {
                return Err(Error::DegenerateFit);
            }
            return Ok((y / x, 1.0));
        }
        let fit = fit_loglog(points)?;
        Ok((fit.slope, fit.r_squared))
    }
}

/// Grid partition of a `width x height` region at one scale.
#[derive(Debug, Clone)]
struct ScaleLayout {
    k: usize,
    h: f64,
    top: f64,
    log_inv_r: f64,
    width: usize,
    height: usize,
    inv_area: f64,
}

impl ScaleLayout {
    fn new(k: usize, width: usize, height: usize, gray_levels: u32) -> Self {
        let side = core::cmp::min(width, height);
        Self {
            k,
            h: box_height(gray_levels, k, side),
            top: f64::from(gray_levels - 1),
            log_inv_r: libm::log(side as f64 / k as f64),
            width,
            height,
            inv_area: 1.0 / (k * k) as f64,
        }
    }

    fn count(&self, data: &[u16], stride: usize, x0: usize, y0: usize, mode: BoxCountMode) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        let mut gy = 0;
        while gy < self.height {
            let gh = core::cmp::min(k, self.height - gy);
            let mut gx = 0;
            while gx < self.width {
                let gw = core::cmp::min(k, self.width - gx);
                let origin = (y0 + gy) * stride + x0 + gx;
                let (lo, hi) = match mode {
                    BoxCountMode::Standard => grid_min_max(data, stride, origin, gw, gh),
                    BoxCountMode::Robust => grid_mean_std_range(data, stride, origin, gw, gh, self.top),
                };
                let n = box_span_range(lo, hi, self.h) as f64;
                if gw == k && gh == k {
                    total += n;
                } else {
                    total += n * (gw * gh) as f64 * self.inv_area;
                }
                gx += k;
            }
            gy += k;
        }
        total
    }
}

#[inline]
fn grid_min_max(data: &[u16], stride: usize, origin: usize, gw: usize, gh: usize) -> (f64, f64) {
    let mut lo = u16::MAX;
    let mut hi = 0u16;
    for row in 0..gh {
        let start = origin + row * stride;
        for &v in &data[start..start + gw] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (f64::from(lo), f64::from(hi))
}

/// `clamp(mean -/+ std, 0, top)` with the population standard deviation.
#[inline]
fn grid_mean_std_range(data: &[u16], stride: usize, origin: usize, gw: usize, gh: usize, top: f64) -> (f64, f64) {
    let n = (gw * gh) as f64;
    let mut sum = 0.0;
    for row in 0..gh {
        let start = origin + row * stride;
        for &v in &data[start..start + gw] {
            sum += f64::from(v);
        }
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for row in 0..gh {
        let start = origin + row * stride;
        for &v in &data[start..start + gw] {
            let d = f64::from(v) - mean;
            ss += d * d;
        }
    }
    let std = libm::sqrt(ss / n);
    ((mean - std).clamp(0.0, top), (mean + std).clamp(0.0, top))
}

fn region_side(region: &GrayImage) -> Result<usize> {
    let side = core::cmp::min(region.width(), region.height());
    if side == 0 {
        Err(Error::Empty)
    } else {
        Ok(side)
    }
}

fn check_gray_levels(region: &GrayImage, gray_levels: u32) -> Result<()> {
    if gray_levels < 2 || gray_levels > u32::from(u16::MAX) + 1 {
        return Err(Error::InvalidParams("gray levels must be in [2, 65536]"));
    }
    if region.gray_levels() > gray_levels {
        let max = (gray_levels - 1) as u16;
        if let Some(&value) = region.as_slice().iter().find(|&&v| v > max) {
            return Err(Error::GrayLevelOutOfRange { value, max });
        }
    }
    Ok(())
}
