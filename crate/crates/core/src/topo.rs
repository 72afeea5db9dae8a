//! Binary-mask topology: boundaries, skeletons, components, Betti numbers, distances.
//!
//! Foreground uses 8-connectivity and background 4-connectivity wherever topology is
//! counted, the usual dual pair that keeps the Euler characteristic consistent.

use alloc::vec;
use alloc::vec::Vec;

use crate::{BinaryMask, Error, FloatMap, Grid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BettiPair {
    /// Foreground components.
    pub b0: usize,
    /// Holes.
    pub b1: usize,
}

/// Foreground pixels with a background 4-neighbor; outside the image counts as background.
pub fn extract_edges(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return false;
        }
        let (x, y) = (x as isize, y as isize);
        !(mask.get_or_bg(x, y - 1) && mask.get_or_bg(x - 1, y) && mask.get_or_bg(x + 1, y) && mask.get_or_bg(x, y + 1))
    })
}

/// Zhang-Suen thinning, iterated until no pixel changes.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    // One-pixel background frame so neighbor lookups never leave the buffer.
    let pw = w + 2;
    let mut img = vec![0u8; pw * (h + 2)];
    for y in 0..h {
        for x in 0..w {
            img[(y + 1) * pw + x + 1] = u8::from(mask.get(x, y));
        }
    }
    let mut marked = Vec::new();
    loop {
        let mut changed = false;
        for first in [true, false] {
            marked.clear();
            for y in 1..=h {
                for x in 1..=w {
                    let i = y * pw + x;
                    if img[i] == 0 {
                        continue;
                    }
                    // P2..P9, clockwise from north.
                    let p = [
                        img[i - pw],
                        img[i - pw + 1],
                        img[i + 1],
                        img[i + pw + 1],
                        img[i + pw],
                        img[i + pw - 1],
                        img[i - 1],
                        img[i - pw - 1],
                    ];
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&k| p[k] == 0 && p[(k + 1) % 8] == 1).count();
                    if a != 1 {
                        continue;
                    }
                    let (n, e, s, west) = (p[0], p[2], p[4], p[6]);
                    let keep = if first {
                        n * e * s != 0 || e * s * west != 0
                    } else {
                        n * e * west != 0 || n * s * west != 0
                    };
                    if !keep {
                        marked.push(i);
                    }
                }
            }
            for &i in &marked {
                img[i] = 0;
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            break;
        }
    }
    BinaryMask::from_fn(w, h, |x, y| img[(y + 1) * pw + x + 1] != 0)
}

/// Labels foreground components `1..=count` in raster-scan discovery order; background is 0.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> (usize, Grid<u32>) {
    let (w, h) = mask.dims();
    let mut labels = Grid::filled(w, h, 0u32);
    let mut count = 0u32;
    let mut stack = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !mask.get(x0, y0) || labels.get(x0, y0) != 0 {
                continue;
            }
            count += 1;
            labels.set(x0, y0, count);
            stack.push((x0, y0));
            while let Some((x, y)) = stack.pop() {
                for &(dx, dy) in connectivity.offsets() {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if !mask.get_or_bg(nx, ny) {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if labels.get(nx, ny) == 0 {
                        labels.set(nx, ny, count);
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    (count as usize, labels)
}

pub fn betti_numbers(mask: &BinaryMask) -> BettiPair {
    let (b0, _) = connected_components(mask, Connectivity::Eight);
    let (w, h) = mask.dims();
    let background = BinaryMask::from_fn(w + 2, h + 2, |x, y| {
        x == 0 || y == 0 || x == w + 1 || y == h + 1 || !mask.get(x - 1, y - 1)
    });
    let (bg, _) = connected_components(&background, Connectivity::Four);
    BettiPair { b0, b1: bg - 1 }
}

/// Exact Euclidean distance from every pixel to the nearest foreground pixel.
///
/// Uses the separable two-pass algorithm of Meijster et al. in integer arithmetic, so the
/// squared distances are exact. An all-background mask yields `+inf` everywhere.
pub fn distance_transform(mask: &BinaryMask) -> FloatMap {
    let (w, h) = mask.dims();
    if !mask.has_foreground() {
        return Grid::filled(w, h, f64::INFINITY);
    }
    let inf = (w + h) as i64;
    // Column pass: vertical distance to the nearest foreground pixel in the same column.
    let mut g = vec![0i64; w * h];
    for x in 0..w {
        g[x] = if mask.get(x, 0) { 0 } else { inf };
        for y in 1..h {
            g[y * w + x] = if mask.get(x, y) { 0 } else { 1 + g[(y - 1) * w + x] };
        }
        for y in (0..h.saturating_sub(1)).rev() {
            if g[(y + 1) * w + x] < g[y * w + x] {
                g[y * w + x] = 1 + g[(y + 1) * w + x];
            }
        }
    }
    // Row pass: lower envelope of parabolas (x - i)^2 + g(i)^2.
    let mut out = vec![0.0; w * h];
    let mut s = vec![0usize; w];
    let mut t = vec![0i64; w];
    for y in 0..h {
        let row = &g[y * w..(y + 1) * w];
        let f = |x: i64, i: usize| (x - i as i64) * (x - i as i64) + row[i] * row[i];
        let sep = |i: usize, u: usize| {
            let (ii, uu) = (i as i64, u as i64);
            (uu * uu - ii * ii + row[u] * row[u] - row[i] * row[i]).div_euclid(2 * (uu - ii))
        };
        let mut q: isize = 0;
        s[0] = 0;
        t[0] = 0;
        for u in 1..w {
            while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                q -= 1;
            }
            if q < 0 {
                q = 0;
                s[0] = u;
            } else {
                let wpos = 1 + sep(s[q as usize], u);
                if wpos < w as i64 {
                    q += 1;
                    s[q as usize] = u;
                    t[q as usize] = wpos;
                }
            }
        }
        for u in (0..w).rev() {
            let d2 = f(u as i64, s[q as usize]);
            out[y * w + u] = libm::sqrt(d2 as f64);
            if u as i64 == t[q as usize] {
                q -= 1;
            }
        }
    }
    Grid::from_vec(w, h, out).expect("sized above")
}

/// Symmetric Hausdorff distance between the foreground sets of `a` and `b`, in pixels.
pub fn hausdorff(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch { left: a.dims(), right: b.dims() });
    }
    match (a.has_foreground(), b.has_foreground()) {
        (false, false) => return Ok(0.0),
        (true, true) => {}
        _ => return Err(Error::EmptySetDistance),
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// `max` over foreground of `from` of the distance to the foreground of `to`.
fn directed_hausdorff(from: &BinaryMask, to: &BinaryMask) -> f64 {
    let dt = distance_transform(to);
    from.as_slice()
        .iter()
        .zip(dt.as_slice())
        .filter(|(&m, _)| m != 0)
        .fold(0.0, |acc, (_, &d)| if d > acc { d } else { acc })
}
