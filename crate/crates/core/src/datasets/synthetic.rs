//! Stationary signals on a ring.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `samples` circularly stationary Gaussian signals of length `n` whose power
/// at frequency `f` (folded, `0..=n/2`) is `max(0, 1 - f / cutoff)`.
///
/// Each signal is white noise circularly convolved with the filter whose
/// frequency response is the square root of that spectrum.
pub fn stationary_ring_signals(n: usize, samples: usize, cutoff: f64, seed: u64) -> Array2<f64> {
    let amplitude = |f: usize| (1.0 - f.min(n - f) as f64 / cutoff).max(0.0).sqrt();
    let h: Vec<f64> = (0..n)
        .map(|tau| {
            (0..n)
                .map(|f| amplitude(f) * (2.0 * std::f64::consts::PI * (f * tau) as f64 / n as f64).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((samples, n));
    let mut noise = vec![0.0; n];
    for mut row in out.rows_mut() {
        noise.iter_mut().for_each(|e| *e = StandardNormal.sample(&mut rng));
        for t in 0..n {
            row[t] = (0..n).map(|s| noise[s] * h[(t + n - s) % n]).sum();
        }
    }
    out
}
