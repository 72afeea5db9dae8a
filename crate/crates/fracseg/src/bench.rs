//! Wall-clock timing of FFM generation on reproducible pseudo-random images.

use std::time::{Duration, Instant};

use fracseg_core::ffm::FfmParams;
use fracseg_core::{Error, GrayImage, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Engine;

pub const BENCH_SEED: u64 = 0x5eed_ffa1;
pub const MIN_SIZE: usize = 64;

/// Uniform 8-bit noise; identical for identical `(size, seed)`.
pub fn bench_image(size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..size * size).map(|_| rng.random_range(0..256u16)).collect();
    GrayImage::new(size, size, data).expect("square buffer")
}

/// Times `reps` full `compute_ffm` runs after one untimed warm-up.
pub fn time_ffm(engine: &Engine, image: &GrayImage, params: &FfmParams, reps: usize) -> Result<Vec<Duration>> {
    engine.compute_ffm(image, params)?;
    (0..reps)
        .map(|_| {
            let start = Instant::now();
            let map = engine.compute_ffm(image, params)?;
            let elapsed = start.elapsed();
            std::hint::black_box(map);
            Ok(elapsed)
        })
        .collect()
}

pub fn median(samples: &[Duration]) -> Duration {
    assert!(!samples.is_empty(), "median of no samples");
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub size: usize,
    pub params: FfmParams,
    pub threads: usize,
    pub samples: Vec<Duration>,
    pub median: Duration,
    /// Output pixels per second at the median time.
    pub pixels_per_sec: f64,
    /// Step sizes `(a, b)` compared for the scaling exponent.
    pub step_pair: Option<(usize, usize)>,
    /// `ln(t_a / t_b) / ln(b / a)`; ideal is 2 since work falls as `1 / S^2`.
    pub step_exponent: Option<f64>,
}

impl BenchReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "size": self.size,
            "window": self.params.window,
            "step": self.params.step,
            "gray_levels": self.params.gray_levels,
            "threads": self.threads,
            "samples_ms": self.samples.iter().map(|d| d.as_secs_f64() * 1e3).collect::<Vec<_>>(),
            "median_ms": self.median.as_secs_f64() * 1e3,
            "megapixels_per_sec": self.pixels_per_sec / 1e6,
            "step_pair": self.step_pair,
            "step_exponent": self.step_exponent,
        })
    }
}

/// Second step size used to estimate the scaling exponent.
fn partner_step(params: &FfmParams) -> Option<(usize, usize)> {
    let s = params.step;
    if 2 * s <= params.window {
        Some((s, 2 * s))
    } else if s > 1 {
        Some((s.div_ceil(2), s))
    } else {
        None
    }
}

pub fn run(engine: &Engine, size: usize, params: &FfmParams, reps: usize) -> Result<BenchReport> {
    if size < MIN_SIZE {
        return Err(Error::InvalidParams("benchmark size must be at least 64"));
    }
    if reps == 0 {
        return Err(Error::InvalidParams("benchmark needs at least one repetition"));
    }
    params.validate()?;
    let image = bench_image(size, BENCH_SEED);
    let samples = time_ffm(engine, &image, params, reps)?;
    let med = median(&samples);
    let step_pair = partner_step(params);
    let step_exponent = match step_pair {
        Some((a, b)) => {
            let time_at = |s: usize| -> Result<Duration> {
                if s == params.step {
                    return Ok(med);
                }
                let p = FfmParams { step: s, ..*params };
                Ok(median(&time_ffm(engine, &image, &p, reps)?))
            };
            let (ta, tb) = (time_at(a)?, time_at(b)?);
            Some((ta.as_secs_f64() / tb.as_secs_f64()).ln() / (b as f64 / a as f64).ln())
        }
        None => None,
    };
    Ok(BenchReport {
        size,
        params: *params,
        threads: engine.threads(),
        samples,
        median: med,
        pixels_per_sec: (size * size) as f64 / med.as_secs_f64(),
        step_pair,
        step_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        let ms = Duration::from_millis;
        assert_eq!(median(&[ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(median(&[ms(4), ms(1), ms(2), ms(3)]), Duration::from_micros(2500));
    }

    #[test]
    fn bench_image_is_reproducible() {
        assert_eq!(bench_image(64, 1), bench_image(64, 1));
        assert_ne!(bench_image(64, 1), bench_image(64, 2));
    }

    #[test]
    fn single_repetition_yields_one_sample() {
        let report = run(&Engine::new(1), 64, &FfmParams::default(), 1).unwrap();
        assert_eq!(report.samples.len(), 1);
        assert_eq!(report.step_pair, Some((1, 2)));
        assert!(report.step_exponent.is_some());
    }

    #[test]
    fn rejects_small_sizes() {
        assert!(run(&Engine::new(1), 32, &FfmParams::default(), 1).is_err());
    }
}
