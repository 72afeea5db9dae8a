//! Spectral synthesis of fractional Brownian surfaces.
//!
//! A surface with Hurst exponent `H` has power spectrum `|f|^-(2H + 2)`, so each Fourier
//! coefficient gets amplitude `|f|^-(H + 1)` times complex Gaussian noise. The theoretical
//! fractal dimension of the resulting intensity surface is `3 - H`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex64, FftPlanner};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `n x n` fBm surface quantized to 8-bit gray levels, row-major.
pub fn fbm_surface(n: usize, hurst: f64, seed: u64) -> Vec<u16> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n * n];
    for v in 0..n {
        for u in 0..n {
            let fu = if u <= n / 2 { u as f64 } else { u as f64 - n as f64 };
            let fv = if v <= n / 2 { v as f64 } else { v as f64 - n as f64 };
            let f = (fu * fu + fv * fv).sqrt();
            if f == 0.0 {
                continue;
            }
            let amp = f.powf(-(hurst + 1.0));
            spectrum[v * n + u] = Complex64::new(gaussian(&mut rng), gaussian(&mut rng)) * amp;
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    for row in spectrum.chunks_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for u in 0..n {
        for v in 0..n {
            column[v] = spectrum[v * n + u];
        }
        fft.process(&mut column);
        for v in 0..n {
            spectrum[v * n + u] = column[v];
        }
    }
    let real: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let lo = real.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    real.iter().map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u16).collect()
}
