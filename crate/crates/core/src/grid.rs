use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major 2-D buffer. `data[y * width + x]` is the value at column `x`, row `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::BadDimensions { width, height, len: data.len() });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid { width: self.width, height: self.height, data: self.data.iter().map(f).collect() }
    }
}

impl<T: Copy> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }
}

/// Real-valued map: FFMs, probabilities, distances, loss weights.
pub type FloatMap = Grid<f64>;

/// Gray-level image with values in `[0, gray_levels - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: Grid<u16>,
    gray_levels: u32,
}

impl GrayImage {
    pub const DEFAULT_GRAY_LEVELS: u32 = 256;

    /// Builds an image with the default 256 gray levels.
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        Self::with_gray_levels(width, height, data, Self::DEFAULT_GRAY_LEVELS)
    }

    pub fn with_gray_levels(width: usize, height: usize, data: Vec<u16>, gray_levels: u32) -> Result<Self> {
        if gray_levels == 0 || gray_levels > u32::from(u16::MAX) + 1 {
            return Err(Error::InvalidParams("gray levels must be in [1, 65536]"));
        }
        let max = (gray_levels - 1) as u16;
        if let Some(&value) = data.iter().find(|&&v| v > max) {
            return Err(Error::GrayLevelOutOfRange { value, max });
        }
        Ok(Self { pixels: Grid::from_vec(width, height, data)?, gray_levels })
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(width, height, data.iter().map(|&v| u16::from(v)).collect())
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.pixels.dims()
    }

    #[inline]
    pub fn gray_levels(&self) -> u32 {
        self.gray_levels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels.get(x, y)
    }

    #[inline]
    pub fn as_slice(&self) -> &[u16] {
        self.pixels.as_slice()
    }

    pub fn pixels(&self) -> &Grid<u16> {
        &self.pixels
    }

    /// Copies the `width` x `height` block whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> GrayImage {
        let pixels = Grid::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y));
        GrayImage { pixels, gray_levels: self.gray_levels }
    }

    pub(crate) fn from_grid_unchecked(pixels: Grid<u16>, gray_levels: u32) -> Self {
        Self { pixels, gray_levels }
    }
}

/// Foreground/background mask stored as bytes in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask(Grid<u8>);

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty);
        }
        if let Some(&v) = data.iter().find(|&&v| v > 1) {
            return Err(Error::NotBinary(v));
        }
        Ok(Self(Grid::from_vec(width, height, data)?))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, 0))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        Self(Grid::from_fn(width, height, |x, y| u8::from(f(x, y))))
    }

    /// Thresholds `map`: a pixel is foreground when its value is `>= threshold`.
    pub fn threshold(map: &FloatMap, threshold: f64) -> Self {
        Self(map.map(|&v| u8::from(v >= threshold)))
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) != 0
    }

    /// Like [`get`](Self::get), but coordinates outside the mask read as background.
    #[inline]
    pub fn get_or_bg(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width()
            && (y as usize) < self.height()
            && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.0.set(x, y, u8::from(value));
    }

    #[inline]
    pub fn as_slice(&self) -> &[u8] {
        self.0.as_slice()
    }

    pub fn count(&self) -> usize {
        self.as_slice().iter().filter(|&&v| v != 0).count()
    }

    pub fn has_foreground(&self) -> bool {
        self.as_slice().contains(&1)
    }

    pub fn complement(&self) -> Self {
        Self(self.0.map(|&v| 1 - v))
    }

    /// Pixel count of `self AND other`. Panics on mismatched dimensions.
    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        assert_eq!(self.dims(), other.dims());
        self.as_slice().iter().zip(other.as_slice()).filter(|(&a, &b)| a & b != 0).count()
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.as_slice().iter().zip(other.as_slice()).all(|(&a, &b)| a <= b)
    }

    /// Probability-style view: 1.0 on foreground, 0.0 elsewhere.
    pub fn to_float(&self) -> FloatMap {
        self.0.map(|&v| f64::from(v))
    }

    /// Maps foreground to `gray_levels - 1` and background to 0.
    pub fn to_gray(&self, gray_levels: u32) -> Result<GrayImage> {
        if gray_levels < 2 || gray_levels > u32::from(u16::MAX) + 1 {
            return Err(Error::InvalidParams("gray levels must be in [2, 65536]"));
        }
        let top = (gray_levels - 1) as u16;
        Ok(GrayImage::from_grid_unchecked(self.0.map(|&v| if v != 0 { top } else { 0 }), gray_levels))
    }

    pub fn grid(&self) -> &Grid<u8> {
        &self.0
    }
}
