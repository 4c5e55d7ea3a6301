use num_complex::Complex64;
use serde::Serialize;

use super::linalg::{gram_logdet, Workspace};
use super::rng::StreamRng;
use crate::error::{Error, Result};
use crate::model::SystemGeometry;

/// Correlation coefficient between successive transmit antennas of a vector
/// channel, `h_i = beta h_{i-1} + sqrt(1 - beta^2) w_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationSpec {
    beta: f64,
}

impl CorrelationSpec {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "correlation coefficient must lie in [0, 1], got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn iid() -> Self {
        Self { beta: 0.0 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_iid(&self) -> bool {
        self.beta == 0.0
    }

    /// The correlated model is only defined along a vector channel.
    pub(crate) fn check(&self, n_r: u32) -> Result<()> {
        if !self.is_iid() && n_r > 1 {
            return Err(Error::UnsupportedGeometry(format!(
                "correlated fading (beta = {}) is defined for a single receive antenna only, got n_r = {n_r}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// One realization of the `n_r x n_t` channel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSample {
    n_r: usize,
    n_t: usize,
    h: Vec<Complex64>,
}

impl ChannelSample {
    pub fn from_rows(n_r: usize, n_t: usize, h: Vec<Complex64>) -> Result<Self> {
        if n_r == 0 || n_t == 0 || h.len() != n_r * n_t {
            return Err(Error::InvalidParameter(format!(
                "channel of shape {n_r}x{n_t} needs {} entries, got {}",
                n_r * n_t,
                h.len()
            )));
        }
        Ok(Self { n_r, n_t, h })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.h
    }

    pub fn get(&self, r: usize, t: usize) -> Complex64 {
        self.h[r * self.n_t + t]
    }
}

/// Fills `out` with an AR(1) chain of unit-variance complex Gaussians:
/// `h_0 ~ CN(0,1)` seeds the chain and `out[i]` holds `h_{i+1}`.
pub(crate) fn fill_correlated(beta: f64, rng: &mut StreamRng, out: &mut [Complex64]) {
    let innovation = (1.0 - beta * beta).max(0.0).sqrt();
    let mut prev = rng.complex_gaussian();
    for h in out.iter_mut() {
        prev = prev * beta + rng.complex_gaussian() * innovation;
        *h = prev;
    }
}

/// Draws one channel matrix for the geometry.
pub fn sample_channel(
    geom: &SystemGeometry,
    corr: &CorrelationSpec,
    rng: &mut StreamRng,
) -> Result<ChannelSample> {
    corr.check(geom.n_r())?;
    let (n_r, n_t) = (geom.n_r() as usize, geom.n_t() as usize);
    let mut h = vec![Complex64::new(0.0, 0.0); n_r * n_t];
    if corr.is_iid() {
        h.iter_mut().for_each(|x| *x = rng.complex_gaussian());
    } else {
        fill_correlated(corr.beta(), rng, &mut h);
    }
    Ok(ChannelSample { n_r, n_t, h })
}

/// `ln det(I + (snr / n_t) H H^h)` in nats.
pub fn mutual_info(h: &ChannelSample, snr: f64, n_t: u32) -> f64 {
    let mut ws = Workspace::default();
    gram_logdet(&h.h, h.n_r, h.n_t, snr / n_t as f64, &mut ws)
}
