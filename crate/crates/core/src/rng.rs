//! Seeded, splittable random streams.
//!
//! Every generator in the crate draws from an [`RngStream`]. A stream is
//! identified by `(seed, stream_id)`; the same pair and the same sequence of
//! calls always reproduce the same output. Independent workers get their own
//! stream through [`RngStream::split`].
//!
//! The engine is PCG-XSL-RR 128/64 (period 2^128) with the stream id mixed
//! into both the increment and the initial state.

use rand_core::Rng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;

use crate::error::{invalid, Result};

/// Below this mean Poisson variates are drawn by sequential inversion.
const POISSON_INVERSION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    engine: Pcg64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let a = splitmix64(seed);
        let b = splitmix64(a ^ splitmix64(stream_id.wrapping_add(0x5851_f42d_4c95_7f2d)));
        let state = ((a as u128) << 64) | b as u128;
        let increment = ((splitmix64(stream_id) as u128) << 64) | stream_id as u128;
        Self {
            seed,
            stream_id,
            engine: Pcg64::new(state, increment),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives an independent child stream. The child depends only on
    /// `(seed, stream_id, child)`, never on how far this stream has advanced.
    pub fn split(&self, child: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(child.wrapping_add(1)));
        RngStream::new(self.seed, id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.engine.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn std_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.engine)
    }

    /// Two independent standard normals, the real and imaginary parts of a
    /// standard complex Gaussian.
    pub fn complex_std_normal(&mut self) -> (f64, f64) {
        let re = self.std_normal();
        let im = self.std_normal();
        (re, im)
    }

    /// Standard exponential variate.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(invalid(format!("Poisson mean must be finite and >= 0, got {mean}")));
        }
        if mean == 0.0 {
            return Ok(0);
        }
        if mean < POISSON_INVERSION_LIMIT {
            Ok(self.poisson_inversion(mean))
        } else {
            Ok(self.poisson_ptrs(mean))
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 {
                // cdf saturated below u through rounding; the remaining mass is < 1e-300
                break;
            }
        }
        k
    }

    /// Hörmann's transformed rejection with squeeze (PTRS).
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let slam = mean.sqrt();
        let loglam = mean.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
            let rhs = -mean + k * loglam - crate::special::ln_gamma(k + 1.0);
            if lhs <= rhs {
                return k as u64;
            }
        }
    }

    /// Gamma variate with the given shape and rate (mean `shape / rate`).
    pub fn gamma(&mut self, shape: f64, rate: f64) -> Result<f64> {
        if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
            return Err(invalid(format!(
                "gamma parameters must be positive and finite, got shape={shape}, rate={rate}"
            )));
        }
        if shape >= 1.0 {
            Ok(self.gamma_marsaglia_tsang(shape) / rate)
        } else {
            // boost: X_{a+1} * U^{1/a} ~ Gamma(a)
            let g = self.gamma_marsaglia_tsang(shape + 1.0);
            let u = 1.0 - self.uniform();
            Ok(g * (u.ln() / shape).exp() / rate)
        }
    }

    fn gamma_marsaglia_tsang(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.std_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u > 0.0 && u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn uniform_range_and_mean() {
        let mut s = RngStream::new(7, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| s.uniform()).collect();
        assert!(xs.iter().all(|&u| (0.0..1.0).contains(&u)));
        let (m, _) = mean_var(&xs);
        assert!((m - 0.5).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.std_normal().to_bits(), b.std_normal().to_bits());
            assert_eq!(a.poisson(57.0).unwrap(), b.poisson(57.0).unwrap());
            assert_eq!(a.gamma(0.3, 2.0).unwrap().to_bits(), b.gamma(0.3, 2.0).unwrap().to_bits());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
        let parent = RngStream::new(1, 0);
        let mut c1 = parent.split(0);
        let mut c2 = parent.split(1);
        assert_ne!(c1.next_u64(), c2.next_u64());
    }

    #[test]
    fn split_ignores_parent_position() {
        let mut parent = RngStream::new(9, 4);
        let mut early = parent.split(5);
        for _ in 0..10 {
            parent.next_u64();
        }
        let mut late = parent.split(5);
        assert_eq!(early.next_u64(), late.next_u64());
    }

    #[test]
    fn normal_moments() {
        let mut s = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| s.std_normal()).collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "var {v}");
    }

    #[test]
    fn complex_normal_components_uncorrelated() {
        let mut s = RngStream::new(12, 0);
        let n = 100_000;
        let mut sxy = 0.0;
        let (mut sxx, mut syy) = (0.0, 0.0);
        for _ in 0..n {
            let (x, y) = s.complex_std_normal();
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn poisson_zero_and_errors() {
        let mut s = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(s.poisson(0.0).unwrap(), 0);
        }
        assert!(s.poisson(-1.0).is_err());
        assert!(s.poisson(f64::NAN).is_err());
        assert!(s.poisson(f64::INFINITY).is_err());
    }

    #[test]
    fn poisson_moments_both_regimes() {
        let mut s = RngStream::new(2, 0);
        for &(mean, n) in &[(200.0f64, 10_000usize), (3.5, 100_000), (29.9, 100_000), (30.0, 100_000)] {
            let xs: Vec<f64> = (0..n).map(|_| s.poisson(mean).unwrap() as f64).collect();
            let (m, v) = mean_var(&xs);
            let se = (mean / n as f64).sqrt();
            assert!((m - mean).abs() < 3.0 * se, "mean {m} vs {mean}");
            // variance of the sample variance for Poisson: (mu + 2 mu^2) / n
            let se_v = ((mean + 2.0 * mean * mean) / n as f64).sqrt();
            assert!((v - mean).abs() < 3.5 * se_v, "var {v} vs {mean}");
        }
    }

    #[test]
    fn gamma_moments_and_exponential_tail() {
        let mut s = RngStream::new(3, 0);
        let n = 100_000;
        for &(shape, rate) in &[(0.01f64, 1.0f64), (0.5, 2.0), (1.0, 1.0), (7.3, 0.4), (500.0, 500.0)] {
            let xs: Vec<f64> = (0..n).map(|_| s.gamma(shape, rate).unwrap()).collect();
            assert!(xs.iter().all(|&x| x >= 0.0));
            let (m, v) = mean_var(&xs);
            let mean = shape / rate;
            let var = shape / (rate * rate);
            assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt(), "shape {shape}: mean {m}");
            // kurtosis-aware bound on the sample variance
            let mu4 = 3.0 * shape * (shape + 2.0) / rate.powi(4);
            let se_v = ((mu4 - var * var) / n as f64).sqrt();
            assert!((v - var).abs() < 3.5 * se_v, "shape {shape}: var {v} vs {var}");
        }
        let tail = (0..n).filter(|_| s.gamma(1.0, 1.0).unwrap() > 1.0).count() as f64 / n as f64;
        let p = (-1.0f64).exp();
        assert!((tail - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
        assert!(s.gamma(0.0, 1.0).is_err());
        assert!(s.gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn gamma_cell_scaling() {
        // shape alpha*|cell|, rate beta with alpha = beta: mean |cell|
        let mut s = RngStream::new(4, 0);
        let cell = 1e-4;
        let (alpha, beta) = (100.0, 100.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.gamma(alpha * cell, beta).unwrap()).collect();
        let (m, _) = mean_var(&xs);
        let sd = (alpha * cell).sqrt() / beta;
        assert!((m - cell).abs() < 3.0 * sd / (n as f64).sqrt());
    }
}
