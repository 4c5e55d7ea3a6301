//! Counter-based random streams.
//!
//! Every Monte Carlo run is split into fixed-size chunks of packet samples.
//! Chunk `i` draws from ChaCha8 keyed by the run seed with stream id `i`,
//! so the numbers a chunk sees depend only on `(seed, i)` and never on which
//! worker thread executes it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma};

/// 2^-53
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Substream `stream` of the generator keyed by `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * UNIT
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * UNIT
    }

    /// Circularly-symmetric complex Gaussian with unit total variance.
    ///
    /// Box–Muller on `u1 in (0,1]`, `u2 in [0,1)`: radius `sqrt(-ln u1)`,
    /// angle `2 pi u2`, so each of the real and imaginary parts has
    /// variance 1/2.
    #[inline]
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let r = (-self.uniform_open0().ln()).sqrt();
        let (s, c) = (TAU * self.uniform()).sin_cos();
        Complex64::new(r * c, r * s)
    }

    /// `|h|^2` of a [`complex_gaussian`](Self::complex_gaussian) draw, i.e. a
    /// unit exponential. Consumes the same two words so the stream layout is
    /// unchanged.
    #[inline]
    pub fn gaussian_energy(&mut self) -> f64 {
        let e = -self.uniform_open0().ln();
        self.inner.next_u64();
        e
    }

    #[inline]
    pub(crate) fn gamma(&mut self, dist: &Gamma<f64>) -> f64 {
        dist.sample(&mut self.inner)
    }
}
