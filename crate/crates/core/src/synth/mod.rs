//! Synthetic signals and traffic for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod traffic;

/// `n` samples of `amplitude * sin(2 pi i / period)`.
pub fn sine(n: usize, period: f64, amplitude: f64) -> Vec<f64> {
    (0..n)
        .map(|i| amplitude * (std::f64::consts::TAU * i as f64 / period).sin())
        .collect()
}

/// I.i.d. uniform samples on `[0, 1)`.
pub fn uniform_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorenzConfig {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    /// Integration steps per emitted sample.
    pub stride: usize,
    /// Integration steps dropped before the first sample.
    pub transient: usize,
    pub initial: [f64; 3],
}

impl Default for LorenzConfig {
    fn default() -> Self {
        LorenzConfig {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            stride: 10,
            transient: 1000,
            initial: [1.0, 1.0, 1.0],
        }
    }
}

impl LorenzConfig {
    fn deriv(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        [self.sigma * (y - x), x * (self.rho - z) - y, x * y - self.beta * z]
    }

    fn step(&self, s: [f64; 3]) -> [f64; 3] {
        let h = self.dt;
        let add = |a: [f64; 3], k: [f64; 3], f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
        let k1 = self.deriv(s);
        let k2 = self.deriv(add(s, k1, h / 2.0));
        let k3 = self.deriv(add(s, k2, h / 2.0));
        let k4 = self.deriv(add(s, k3, h));
        std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }
}

/// Lorenz trajectory sampled every `stride` fourth-order Runge-Kutta steps.
pub fn lorenz(n: usize, cfg: &LorenzConfig) -> Vec<[f64; 3]> {
    let mut s = cfg.initial;
    for _ in 0..cfg.transient {
        s = cfg.step(s);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(s);
        for _ in 0..cfg.stride.max(1) {
            s = cfg.step(s);
        }
    }
    out
}

/// The x coordinate of [`lorenz`] with default settings.
pub fn lorenz_x(n: usize) -> Vec<f64> {
    lorenz(n, &LorenzConfig::default()).into_iter().map(|p| p[0]).collect()
}
