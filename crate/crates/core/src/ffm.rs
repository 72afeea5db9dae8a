//! Pixel-level fractal feature maps.
//!
//! The image is edge-padded by `p = floor(w / 2)` and every output pixel `(x, y)` gets the
//! box-counting FD of the `w x w` window whose top-left corner is `(x, y)` in the padded
//! image, i.e. the window centred on the pixel. With a step `S > 1` only pixels on the
//! `S`-lattice are evaluated and every other pixel copies its nearest evaluated pixel,
//! ties going to the smaller row/column.
//!
//! The work is split into *sample rows* ([`FfmPlan::compute_sample_row`]) and an
//! expansion pass ([`FfmPlan::expand_row`]) so that a threaded driver can hand disjoint
//! rows to workers and still produce the same bits as [`compute_ffm_raw`].

use alloc::vec;
use alloc::vec::Vec;

use crate::fd::{BoxCountMode, FdKernel, ScaleConfig};
use crate::{BinaryMask, Error, FloatMap, GrayImage, Grid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FfmParams {
    /// Odd window side, at least 3.
    pub window: usize,
    /// Sampling stride in both axes, `1 <= step <= window`.
    pub step: usize,
    pub gray_levels: u32,
    pub mode: BoxCountMode,
}

impl Default for FfmParams {
    fn default() -> Self {
        Self { window: 5, step: 1, gray_levels: 256, mode: BoxCountMode::Standard }
    }
}

impl FfmParams {
    pub fn new(window: usize, step: usize) -> Result<Self> {
        let params = Self { window, step, ..Self::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParams("window must be odd and >= 3"));
        }
        if self.step == 0 || self.step > self.window {
            return Err(Error::InvalidParams("step must be in [1, window]"));
        }
        if self.gray_levels < 2 || self.gray_levels > u32::from(u16::MAX) + 1 {
            return Err(Error::InvalidParams("gray levels must be in [2, 65536]"));
        }
        Ok(())
    }

    pub fn padding(&self) -> usize {
        self.window / 2
    }

    pub fn scale_config(&self) -> ScaleConfig {
        ScaleConfig::default_for_side(self.window, self.mode)
    }
}

/// Edge-replicating pad: every border pixel is repeated `p` times outward.
pub fn pad(image: &GrayImage, p: usize) -> GrayImage {
    let (w, h) = image.dims();
    if p == 0 || w == 0 || h == 0 {
        return image.clone();
    }
    let pw = w + 2 * p;
    let ph = h + 2 * p;
    let mut data = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let y = py.saturating_sub(p).min(h - 1);
        let row = image.pixels().row(y);
        data.extend(core::iter::repeat_n(row[0], p));
        data.extend_from_slice(row);
        data.extend(core::iter::repeat_n(row[w - 1], p));
    }
    GrayImage::from_grid_unchecked(Grid::from_vec(pw, ph, data).expect("padded size"), image.gray_levels())
}

/// Number of lattice positions `0, step, 2*step, ...` below `len`.
#[inline]
pub fn sample_count(len: usize, step: usize) -> usize {
    len.div_ceil(step)
}

/// Index of the lattice position nearest to `i`; ties resolve to the lower one.
#[inline]
pub fn nearest_sample(i: usize, step: usize, samples: usize) -> usize {
    let base = i / step;
    let offset = i % step;
    if 2 * offset > step && base + 1 < samples {
        base + 1
    } else {
        base
    }
}

/// Everything needed to evaluate the FFM of images with fixed parameters.
#[derive(Debug, Clone)]
pub struct FfmPlan {
    params: FfmParams,
    kernel: FdKernel,
}

impl FfmPlan {
    pub fn new(params: FfmParams) -> Result<Self> {
        params.validate()?;
        let kernel = FdKernel::new(params.window, params.window, &params.scale_config(), params.gray_levels)?;
        Ok(Self { params, kernel })
    }

    pub fn params(&self) -> &FfmParams {
        &self.params
    }

    /// Checks `image` against the plan's gray levels and returns it padded.
    pub fn prepare(&self, image: &GrayImage) -> Result<GrayImage> {
        if image.width() == 0 || image.height() == 0 {
            return Err(Error::Empty);
        }
        if image.gray_levels() > self.params.gray_levels {
            let max = (self.params.gray_levels - 1) as u16;
            if let Some(&value) = image.as_slice().iter().find(|&&v| v > max) {
                return Err(Error::GrayLevelOutOfRange { value, max });
            }
        }
        Ok(pad(image, self.params.padding()))
    }

    /// `(columns, rows)` of the sample lattice for an image of the given size.
    pub fn sample_dims(&self, width: usize, height: usize) -> (usize, usize) {
        (sample_count(width, self.params.step), sample_count(height, self.params.step))
    }

    /// Fills `out` (one entry per sample column) with raw FD values of sample row `row`.
    pub fn compute_sample_row(&self, padded: &GrayImage, row: usize, out: &mut [f64]) -> Result<()> {
        let step = self.params.step;
        let y0 = row * step;
        let mut scratch = Vec::with_capacity(8);
        for (col, slot) in out.iter_mut().enumerate() {
            *slot = self.kernel.fd_at(padded, col * step, y0, &mut scratch)?;
        }
        Ok(())
    }

    /// Writes output row `y` (length `width`) from the sample grid.
    pub fn expand_row(&self, samples: &[f64], sample_cols: usize, sample_rows: usize, y: usize, out: &mut [f64]) {
        let step = self.params.step;
        let src = &samples[nearest_sample(y, step, sample_rows) * sample_cols..][..sample_cols];
        if step == 1 {
            out.copy_from_slice(src);
            return;
        }
        for (x, slot) in out.iter_mut().enumerate() {
            *slot = src[nearest_sample(x, step, sample_cols)];
        }
    }
}

/// Unnormalized FFM, single-threaded.
pub fn compute_ffm_raw(image: &GrayImage, params: &FfmParams) -> Result<FloatMap> {
    let plan = FfmPlan::new(*params)?;
    let padded = plan.prepare(image)?;
    let (width, height) = image.dims();
    let (cols, rows) = plan.sample_dims(width, height);
    let mut samples = vec![0.0; cols * rows];
    for (row, out) in samples.chunks_mut(cols).enumerate() {
        plan.compute_sample_row(&padded, row, out)?;
    }
    let mut data = vec![0.0; width * height];
    for (y, out) in data.chunks_mut(width).enumerate() {
        plan.expand_row(&samples, cols, rows, y, out);
    }
    Grid::from_vec(width, height, data)
}

/// Min-max rescale to `[0, 1]`. A constant map becomes all ones.
pub fn normalize(map: &FloatMap) -> FloatMap {
    let (lo, hi) =
        map.as_slice().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return map.map(|_| 1.0);
    }
    map.map(|&v| (v - lo) / range)
}

/// Normalized FFM of an image, usable as an extra input channel.
pub fn compute_ffm(image: &GrayImage, params: &FfmParams) -> Result<FloatMap> {
    compute_ffm_raw(image, params).map(|raw| normalize(&raw))
}

/// Normalized FFM of a label mask (foreground mapped to `L - 1`), usable as pixel weights.
pub fn compute_ffm_label(mask: &BinaryMask, params: &FfmParams) -> Result<FloatMap> {
    params.validate()?;
    compute_ffm(&mask.to_gray(params.gray_levels)?, params)
}
