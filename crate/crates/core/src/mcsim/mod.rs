//! Monte Carlo ground truth for the outage probability.
//!
//! Each packet sample draws the channel realizations its fading model
//! prescribes (one, `M`, or `M T`), averages the log-det mutual information
//! and compares it with `R / M`. Samples are processed in fixed chunks of
//! [`CHUNK_SAMPLES`]; chunk `i` owns random stream `i` of the run seed, and
//! per-chunk violation counts are merged in chunk order, so results are
//! bit-identical for any worker count.

mod channel;
mod linalg;
mod rng;

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::Serialize;

pub use channel::{mutual_info, sample_channel, ChannelSample, CorrelationSpec};
pub use rng::StreamRng;

use crate::error::{Error, Result};
use crate::model::{Fading, HarqConfig, PowerSchedule, SystemGeometry};
use channel::fill_correlated;
use linalg::{accumulate_outer, gram_logdet, hermitian_logdet, lower_gram_logdet, Workspace};

/// Packet samples per random stream.
pub const CHUNK_SAMPLES: u64 = 1 << 14;

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Sample count, seed and parallelism of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    /// Worker threads; affects wall time only.
    pub workers: usize,
}

impl McSettings {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Monte Carlo outage estimate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub violations: u64,
    pub samples: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl OutageEstimate {
    pub fn from_counts(violations: u64, samples: u64, seed: u64) -> Self {
        let p_hat = violations as f64 / samples as f64;
        let (ci_low, ci_high) = wilson_interval(violations, samples);
        Self {
            p_hat,
            violations,
            samples,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            seed,
        }
    }

    /// Binomial standard error at probability `p`.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Exact quasi-static SISO outage, `P(ln(1 + snr |h|^2) <= R)` for
/// exponential `|h|^2`.
pub fn siso_outage_closed(snr: f64, rate: f64) -> f64 {
    -(-rate.exp_m1() / snr).exp_m1()
}

/// Runs `work(chunk_index, samples_in_chunk)` over all chunks and returns
/// the results in chunk order.
fn run_chunks<T, F>(settings: &McSettings, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    settings.check()?;
    let chunks = settings.samples.div_ceil(CHUNK_SAMPLES);
    let size = |i: u64| CHUNK_SAMPLES.min(settings.samples - i * CHUNK_SAMPLES);
    if settings.workers <= 1 {
        return (0..chunks).map(|i| work(i, size(i))).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|i| work(i, size(i)))
            .collect()
    })
}

/// How [`Realizer`] produces `ln det(I + scale H H^h)`.
enum DrawMode {
    /// A single antenna on either side: only `||h||^2` matters.
    Energy,
    /// IID matrix: draw the Cholesky factor of the `n x n` Gram matrix
    /// directly (Bartlett decomposition of a complex Wishart matrix with
    /// `max(n_t, n_r)` degrees of freedom). `diag[i]` is `Gamma(dof - i, 1)`.
    Bartlett { n: usize, diag: Vec<Gamma<f64>> },
    /// Sample every entry of `H`.
    Entries,
}

/// Draws per-realization mutual information for one geometry.
struct Realizer {
    n_r: usize,
    n_t: usize,
    beta: f64,
    mode: DrawMode,
    h: Vec<Complex64>,
    ws: Workspace,
}

impl Realizer {
    fn new(n_r: u32, n_t: u32, corr: &CorrelationSpec) -> Self {
        let (n_r, n_t) = (n_r as usize, n_t as usize);
        let n = n_r.min(n_t);
        let dof = n_r.max(n_t);
        let mode = if !corr.is_iid() {
            DrawMode::Entries
        } else if n == 1 {
            DrawMode::Energy
        } else {
            let diag = (0..n)
                .map(|i| Gamma::new((dof - i) as f64, 1.0).expect("positive shape"))
                .collect();
            DrawMode::Bartlett { n, diag }
        };
        let len = match mode {
            DrawMode::Bartlett { n, .. } => n * n,
            _ => n_r * n_t,
        };
        Self {
            n_r,
            n_t,
            beta: corr.beta(),
            mode,
            h: vec![Complex64::new(0.0, 0.0); len],
            ws: Workspace::default(),
        }
    }

    /// Forces entry-by-entry sampling of `H`.
    #[cfg(test)]
    fn entries(mut self) -> Self {
        self.mode = DrawMode::Entries;
        self.h = vec![Complex64::new(0.0, 0.0); self.n_r * self.n_t];
        self
    }

    /// `ln det(I + scale H H^h)` for a fresh draw of `H`.
    fn draw(&mut self, rng: &mut StreamRng, scale: f64) -> f64 {
        match &self.mode {
            DrawMode::Energy => {
                let len = self.n_r * self.n_t;
                let energy: f64 = (0..len).map(|_| rng.gaussian_energy()).sum();
                (scale * energy).ln_1p()
            }
            DrawMode::Bartlett { n, diag } => {
                let n = *n;
                for i in 0..n {
                    for j in 0..i {
                        self.h[i * n + j] = rng.complex_gaussian();
                    }
                    self.h[i * n + i] = Complex64::new(rng.gamma(&diag[i]).sqrt(), 0.0);
                }
                lower_gram_logdet(&self.h, n, scale, &mut self.ws)
            }
            DrawMode::Entries => {
                if self.beta == 0.0 {
                    self.h.iter_mut().for_each(|x| *x = rng.complex_gaussian());
                } else {
                    fill_correlated(self.beta, rng, &mut self.h);
                }
                gram_logdet(&self.h, self.n_r, self.n_t, scale, &mut self.ws)
            }
        }
    }
}

/// Estimates the outage probability of INR-HARQ by simulation.
///
/// `sched` assigns a transmit power to each round (slow or fast fading);
/// without it every round uses the geometry's SNR.
pub fn estimate_outage(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    corr: &CorrelationSpec,
    sched: Option<&PowerSchedule>,
    settings: &McSettings,
) -> Result<OutageEstimate> {
    corr.check(geom.n_r())?;
    let rounds = match harq.fading() {
        Fading::QuasiStatic => 1,
        _ => harq.m() as usize,
    };
    let powers: Vec<f64> = match sched {
        Some(s) => {
            if s.len() != harq.m() as usize {
                return Err(Error::ScheduleLength {
                    expected: harq.m() as usize,
                    got: s.len(),
                });
            }
            if rounds != s.len() {
                return Err(Error::InvalidParameter(
                    "power allocation is defined for slow or fast fading only".into(),
                ));
            }
            s.powers().to_vec()
        }
        None => vec![geom.snr(); rounds],
    };
    let per_round = harq.t() as usize;
    let realizations = (rounds * per_round) as f64;
    let threshold = harq.rate_per_round();
    let n_t = geom.n_t() as f64;

    let counts = run_chunks(settings, |chunk, len| {
        let mut rng = StreamRng::new(settings.seed, chunk);
        let mut realizer = Realizer::new(geom.n_r(), geom.n_t(), corr);
        let mut violations = 0u64;
        for _ in 0..len {
            let mut total = 0.0;
            for &phi in &powers {
                for _ in 0..per_round {
                    total += realizer.draw(&mut rng, phi / n_t);
                }
            }
            if total / realizations <= threshold {
                violations += 1;
            }
        }
        Ok(violations)
    })?;
    let violations = counts.into_iter().sum();
    Ok(OutageEstimate::from_counts(
        violations,
        settings.samples,
        settings.seed,
    ))
}

/// Which antenna dimension grows along an outage curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Growth {
    /// Receive antennas grow, `n_t` fixed.
    Receive { n_t: u32 },
    /// Transmit antennas grow, `n_r` fixed.
    Transmit { n_r: u32 },
}

impl Growth {
    pub fn dims(&self, count: u32) -> (u32, u32) {
        match *self {
            Growth::Receive { n_t } => (n_t, count),
            Growth::Transmit { n_r } => (count, n_r),
        }
    }
}

/// One point of an outage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n_t: u32,
    pub n_r: u32,
    pub estimate: OutageEstimate,
}

/// Outage estimates for every antenna count in `counts` from one set of
/// nested channel draws: each sample's matrix for count `n` is the leading
/// `n` rows (receive growth) or columns (transmit growth) of one larger
/// draw. Estimates across counts are therefore positively correlated.
pub fn outage_curve(
    growth: Growth,
    counts: RangeInclusive<u32>,
    snr: f64,
    harq: &HarqConfig,
    corr: &CorrelationSpec,
    settings: &McSettings,
) -> Result<Vec<CurvePoint>> {
    let (lo, hi) = (*counts.start(), *counts.end());
    if lo == 0 || hi < lo {
        return Err(Error::InvalidParameter(format!(
            "antenna count range {lo}..={hi} is empty or starts at zero"
        )));
    }
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snr must be positive, got {snr}"
        )));
    }
    match growth {
        Growth::Receive { n_t } => {
            if n_t == 0 {
                return Err(Error::InvalidParameter("n_t must be positive".into()));
            }
            if hi > 1 {
                corr.check(hi)?;
            }
        }
        Growth::Transmit { n_r } => {
            if n_r == 0 {
                return Err(Error::InvalidParameter("n_r must be positive".into()));
            }
            corr.check(n_r)?;
        }
    }
    let realizations = harq.multiplicity() as usize;
    let threshold = harq.rate_per_round();
    let span = (hi - lo + 1) as usize;

    let per_chunk = run_chunks(settings, |chunk, len| {
        let mut rng = StreamRng::new(settings.seed, chunk);
        let mut nested = Nested::new(growth, hi, snr, corr);
        let mut totals = vec![0.0; hi as usize];
        let mut violations = vec![0u64; span];
        for _ in 0..len {
            totals.iter_mut().for_each(|t| *t = 0.0);
            // A single quasi-static draw along the receive axis is monotone in
            // the count, so it can stop once the rate is supported.
            let stop_at = match growth {
                Growth::Receive { .. } if realizations == 1 => Some(threshold),
                _ => None,
            };
            for _ in 0..realizations {
                nested.draw(&mut rng, &mut totals, stop_at);
            }
            for (slot, count) in violations.iter_mut().zip(lo..=hi) {
                if totals[count as usize - 1] / realizations as f64 <= threshold {
                    *slot += 1;
                }
            }
        }
        Ok(violations)
    })?;

    let mut merged = vec![0u64; span];
    for part in per_chunk {
        for (m, v) in merged.iter_mut().zip(part) {
            *m += v;
        }
    }
    Ok((lo..=hi)
        .zip(merged)
        .map(|(count, v)| {
            let (n_t, n_r) = growth.dims(count);
            CurvePoint {
                n_t,
                n_r,
                estimate: OutageEstimate::from_counts(v, settings.samples, settings.seed),
            }
        })
        .collect())
}

/// Nested draws for [`outage_curve`].
struct Nested {
    growth: Growth,
    max: usize,
    snr: f64,
    beta: f64,
    vector: Vec<Complex64>,
    gram: Vec<Complex64>,
    ws: Workspace,
}

impl Nested {
    fn new(growth: Growth, max: u32, snr: f64, corr: &CorrelationSpec) -> Self {
        let fixed = match growth {
            Growth::Receive { n_t } => n_t,
            Growth::Transmit { n_r } => n_r,
        } as usize;
        let vec_len = match growth {
            // One row of n_t entries per added receive antenna.
            Growth::Receive { n_t } => n_t as usize,
            // The whole transmit axis for a correlated chain, else one column.
            Growth::Transmit { n_r: 1 } => max as usize,
            Growth::Transmit { n_r } => n_r as usize,
        };
        Self {
            growth,
            max: max as usize,
            snr,
            beta: corr.beta(),
            vector: vec![Complex64::new(0.0, 0.0); vec_len],
            gram: vec![Complex64::new(0.0, 0.0); fixed * fixed],
            ws: Workspace::default(),
        }
    }

    /// Adds one realization's mutual information for counts `1..=max` to
    /// `totals`. With `stop_at`, stops once the information exceeds it and
    /// fills the remaining counts with +inf.
    fn draw(&mut self, rng: &mut StreamRng, totals: &mut [f64], stop_at: Option<f64>) {
        match self.growth {
            Growth::Receive { n_t: 1 } => {
                let mut energy = 0.0;
                for c in 0..self.max {
                    energy += rng.gaussian_energy();
                    let mi = (self.snr * energy).ln_1p();
                    totals[c] += mi;
                    if stop_at.is_some_and(|thr| mi > thr) {
                        totals[c + 1..].iter_mut().for_each(|t| *t = f64::INFINITY);
                        return;
                    }
                }
            }
            Growth::Receive { n_t } => {
                let n = n_t as usize;
                let scale = self.snr / n_t as f64;
                self.gram
                    .iter_mut()
                    .for_each(|g| *g = Complex64::new(0.0, 0.0));
                for c in 0..self.max {
                    self.vector
                        .iter_mut()
                        .for_each(|x| *x = rng.complex_gaussian());
                    accumulate_outer(&mut self.gram, &self.vector, scale);
                    let mi = self.logdet_of_gram(n, 1.0);
                    totals[c] += mi;
                    if stop_at.is_some_and(|thr| mi > thr) {
                        totals[c + 1..].iter_mut().for_each(|t| *t = f64::INFINITY);
                        return;
                    }
                }
            }
            Growth::Transmit { n_r: 1 } => {
                if self.beta == 0.0 {
                    let mut energy = 0.0;
                    for c in 0..self.max {
                        energy += rng.gaussian_energy();
                        totals[c] += (self.snr / (c + 1) as f64 * energy).ln_1p();
                    }
                } else {
                    fill_correlated(self.beta, rng, &mut self.vector);
                    let mut energy = 0.0;
                    for c in 0..self.max {
                        energy += self.vector[c].norm_sqr();
                        totals[c] += (self.snr / (c + 1) as f64 * energy).ln_1p();
                    }
                }
            }
            Growth::Transmit { n_r } => {
                let n = n_r as usize;
                self.gram
                    .iter_mut()
                    .for_each(|g| *g = Complex64::new(0.0, 0.0));
                for c in 0..self.max {
                    // Column c of H; H H^h gains conj-free outer product v v^h,
                    // which is the conjugate of conj(v)^T v. The determinant
                    // of I + s A and I + s conj(A) coincide.
                    self.vector
                        .iter_mut()
                        .for_each(|x| *x = rng.complex_gaussian());
                    accumulate_outer(&mut self.gram, &self.vector, 1.0);
                    let scale = self.snr / (c + 1) as f64;
                    totals[c] += self.logdet_of_gram(n, scale);
                }
            }
        }
    }

    /// `ln det(I + scale G)` for the accumulated lower-triangular `gram`.
    fn logdet_of_gram(&mut self, n: usize, scale: f64) -> f64 {
        self.ws_load(n, scale);
        hermitian_logdet(&mut self.ws, n)
    }

    fn ws_load(&mut self, n: usize, scale: f64) {
        let a = self.ws.matrix(n);
        for i in 0..n {
            for j in 0..=i {
                a[i * n + j] = self.gram[i * n + j] * scale;
            }
            a[i * n + i] += 1.0;
        }
    }
}
