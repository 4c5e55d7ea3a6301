//! System and HARQ configuration, Gaussian moments of the per-realization
//! mutual information, and the resulting outage / average-power formulas.
//!
//! Conventions: SNR is linear (noise variance 1), rates are in nats per
//! channel use.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{q_func, EULER_GAMMA};

/// Converts a dB value to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Antenna regime.
///
/// * `Case1`: many receive antennas, given transmit antennas.
/// * `Case2`: many transmit antennas, given receive antennas.
/// * `Case3`: both large, low SNR, `n_t / n_r = k`.
/// * `Case4`: both large, high SNR, `n_t / n_r = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case")]
pub enum Regime {
    Case1,
    Case2,
    Case3 { k: f64 },
    Case4 { k: f64 },
}

impl Regime {
    pub fn number(&self) -> u8 {
        match self {
            Regime::Case1 => 1,
            Regime::Case2 => 2,
            Regime::Case3 { .. } => 3,
            Regime::Case4 { .. } => 4,
        }
    }

    /// Antenna ratio `k = n_t / n_r` for Cases 3 and 4.
    pub fn ratio(&self) -> Option<f64> {
        match *self {
            Regime::Case3 { k } | Regime::Case4 { k } => Some(k),
            _ => None,
        }
    }
}

/// Antenna counts, regime tag and transmit SNR of a point-to-point link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemGeometry {
    n_t: u32,
    n_r: u32,
    snr: f64,
    regime: Regime,
}

impl SystemGeometry {
    pub fn new(n_t: u32, n_r: u32, snr: f64, regime: Regime) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::InvalidParameter(format!(
                "antenna counts must be positive (n_t = {n_t}, n_r = {n_r})"
            )));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "snr must be positive and finite, got {snr}"
            )));
        }
        if let Some(k) = regime.ratio() {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "antenna ratio k must be positive, got {k}"
                )));
            }
            if (n_t as f64 - k * n_r as f64).abs() >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "n_t = {n_t}, n_r = {n_r} is inconsistent with k = {k}"
                )));
            }
        }
        Ok(Self {
            n_t,
            n_r,
            snr,
            regime,
        })
    }

    pub fn n_t(&self) -> u32 {
        self.n_t
    }

    pub fn n_r(&self) -> u32 {
        self.n_r
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Same antennas and regime at a different SNR.
    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        Self::new(self.n_t, self.n_r, snr, self.regime)
    }
}

/// Channel variation during a HARQ packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Fading {
    /// One channel realization per packet.
    QuasiStatic,
    /// One realization per retransmission round.
    SlowFading,
    /// `t` realizations per round.
    FastFading,
}

impl Fading {
    pub fn name(&self) -> &'static str {
        match self {
            Fading::QuasiStatic => "quasi",
            Fading::SlowFading => "slow",
            Fading::FastFading => "fast",
        }
    }
}

/// INR-HARQ parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarqConfig {
    fading: Fading,
    m: u32,
    t: u32,
    rate: f64,
}

impl HarqConfig {
    /// `t` only matters for fast fading and is forced to 1 otherwise.
    /// A rate of zero is accepted (every packet is then decodable).
    pub fn new(fading: Fading, m: u32, t: u32, rate: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if t == 0 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rate must be non-negative and finite, got {rate}"
            )));
        }
        let t = if fading == Fading::FastFading { t } else { 1 };
        Ok(Self { fading, m, t, rate })
    }

    pub fn fading(&self) -> Fading {
        self.fading
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(self.fading, self.m, self.t, rate)
    }

    /// Number of independent channel realizations per packet: 1, `m` or `m t`.
    pub fn multiplicity(&self) -> u32 {
        match self.fading {
            Fading::QuasiStatic => 1,
            Fading::SlowFading => self.m,
            Fading::FastFading => self.m * self.t,
        }
    }

    /// Equivalent rate `R / M` compared against the averaged mutual information.
    pub fn rate_per_round(&self) -> f64 {
        self.rate / self.m as f64
    }
}

/// Mean and variance of the Gaussian approximation of the per-realization
/// log-det mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMoments {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianMoments {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "moments need finite mu and sigma2 > 0, got ({mu}, {sigma2})"
            )));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// Power-amplifier efficiency profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaProfile {
    epsilon: f64,
    theta_pa: f64,
    phi_max: f64,
}

impl PaProfile {
    /// `epsilon` is the peak efficiency, `theta_pa` the class exponent and
    /// `phi_max` the maximum output power (linear; may be infinite).
    pub fn new(epsilon: f64, theta_pa: f64, phi_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "PA efficiency must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(0.0..1.0).contains(&theta_pa) {
            return Err(Error::InvalidParameter(format!(
                "PA class parameter must lie in [0, 1), got {theta_pa}"
            )));
        }
        if !(phi_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "PA maximum output must be positive, got {phi_max}"
            )));
        }
        Ok(Self {
            epsilon,
            theta_pa,
            phi_max,
        })
    }

    /// Lossless amplifier with unbounded output.
    pub fn ideal() -> Self {
        Self {
            epsilon: 1.0,
            theta_pa: 0.0,
            phi_max: f64::INFINITY,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta_pa(&self) -> f64 {
        self.theta_pa
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }
}

/// Transmit power of each HARQ round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSchedule {
    powers: Vec<f64>,
}

impl PowerSchedule {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::InvalidParameter("empty power schedule".into()));
        }
        if let Some(p) = powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "schedule powers must be positive and finite, got {p}"
            )));
        }
        Ok(Self { powers })
    }

    pub fn uniform(m: u32, phi: f64) -> Result<Self> {
        Self::new(vec![phi; m as usize])
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    fn check_rounds(&self, harq: &HarqConfig) -> Result<()> {
        if self.powers.len() != harq.m() as usize {
            return Err(Error::ScheduleLength {
                expected: harq.m() as usize,
                got: self.powers.len(),
            });
        }
        Ok(())
    }
}

/// `sum_{i=1}^{n} 1/i`
pub(crate) fn harmonic(n: u32) -> f64 {
    (1..=n).rev().map(|i| 1.0 / i as f64).sum()
}

/// `pi^2/6 - sum_{i=1}^{n-1} 1/i^2`, i.e. the tail `sum_{i>=n} 1/i^2`.
pub(crate) fn zeta2_tail(n: u32) -> f64 {
    debug_assert!(n >= 1);
    if n <= 64 {
        let head: f64 = (1..n).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum();
        PI * PI / 6.0 - head
    } else {
        // Asymptotic expansion of the trigamma function at an integer.
        let x = n as f64;
        let x2 = x * x;
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        inv + 0.5 * inv2
            + inv / x2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
    }
}

/// Moments for the geometry's antenna counts and regime at SNR `phi`.
pub(crate) fn moments_at(geom: &SystemGeometry, phi: f64) -> (f64, f64) {
    let n_t = geom.n_t as f64;
    let n_r = geom.n_r as f64;
    match geom.regime {
        Regime::Case1 => (n_t * (n_r * phi / n_t).ln_1p(), n_t / n_r),
        Regime::Case2 => {
            let s = phi / (1.0 + phi);
            (n_r * phi.ln_1p(), n_r * s * s / n_t)
        }
        Regime::Case3 { .. } => (n_r * phi, n_r / n_t * phi * phi),
        Regime::Case4 { .. } => {
            let n_max = geom.n_t.max(geom.n_r);
            let n_min = geom.n_t.min(geom.n_r);
            let min = n_min as f64;
            let cross: f64 = (1..n_min).map(|i| i as f64 / (n_max - i) as f64).sum();
            let mu = min * (phi / n_t).ln() + min * (harmonic(n_max - n_min) - EULER_GAMMA) + cross;
            let var_cross: f64 = (1..n_min)
                .map(|i| {
                    let d = (n_max - n_min + i) as f64;
                    i as f64 / (d * d)
                })
                .sum();
            let sigma2 = var_cross + min * zeta2_tail(n_max);
            (mu, sigma2)
        }
    }
}

/// Gaussian moments `(mu, sigma^2)` of `log|I + (phi/n_t) H H^h|` for the
/// geometry's regime. Case 4 uses the exact finite sums.
pub fn gaussian_moments(geom: &SystemGeometry) -> GaussianMoments {
    let (mu, sigma2) = moments_at(geom, geom.snr);
    GaussianMoments { mu, sigma2 }
}

/// Radiated power of the PA for a consumed power `phi_cons`.
pub fn pa_output(pa: &PaProfile, phi_cons: f64) -> Result<f64> {
    if !(phi_cons > 0.0 && phi_cons.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "consumed power must be positive and finite, got {phi_cons}"
        )));
    }
    let phi =
        (pa.epsilon * phi_cons / pa.phi_max.powf(pa.theta_pa)).powf(1.0 / (1.0 - pa.theta_pa));
    if phi > pa.phi_max {
        return Err(Error::InfeasiblePower {
            required: phi,
            max: pa.phi_max,
        });
    }
    if !(phi > 0.0) {
        return Err(Error::Domain(format!(
            "PA radiates no power for consumed power {phi_cons}"
        )));
    }
    Ok(phi)
}

/// [`gaussian_moments`] with the SNR replaced by the PA output for the
/// consumed power `phi_cons`.
pub fn gaussian_moments_pa(
    geom: &SystemGeometry,
    pa: &PaProfile,
    phi_cons: f64,
) -> Result<GaussianMoments> {
    let phi = pa_output(pa, phi_cons)?;
    let (mu, sigma2) = moments_at(geom, phi);
    Ok(GaussianMoments { mu, sigma2 })
}

/// Q-function argument `sqrt(c) (mu - R/M) / sigma`.
pub fn outage_argument(moments: &GaussianMoments, harq: &HarqConfig) -> f64 {
    let c = harq.multiplicity() as f64;
    c.sqrt() * (moments.mu - harq.rate_per_round()) / moments.sigma()
}

/// Outage probability under the Gaussian approximation.
pub fn outage_approx(moments: &GaussianMoments, harq: &HarqConfig) -> f64 {
    q_func(outage_argument(moments, harq))
}

/// Per-round moments for a power schedule.
fn round_moments(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    sched: &PowerSchedule,
) -> Result<Vec<(f64, f64)>> {
    sched.check_rounds(harq)?;
    if harq.fading() == Fading::QuasiStatic && harq.m() > 1 {
        return Err(Error::InvalidParameter(
            "power allocation is defined for slow or fast fading only".into(),
        ));
    }
    Ok(sched
        .powers
        .iter()
        .map(|&phi| moments_at(geom, phi))
        .collect())
}

/// Outage of the accumulated mutual information after the first `rounds`
/// rounds against the equivalent rate `R / rounds`.
fn partial_outage(rounds: &[(f64, f64)], t: u32, rate: f64) -> f64 {
    let m = rounds.len() as f64;
    let mu_bar = rounds.iter().map(|r| r.0).sum::<f64>() / m;
    let var_bar = rounds.iter().map(|r| r.1).sum::<f64>() / (t as f64 * m * m);
    q_func((mu_bar - rate / m) / var_bar.sqrt())
}

/// Outage probability with per-round transmit powers.
pub fn outage_power_alloc(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    sched: &PowerSchedule,
) -> Result<f64> {
    let rounds = round_moments(geom, harq, sched)?;
    Ok(partial_outage(&rounds, harq.t(), harq.rate()))
}

/// Expected transmit energy over expected channel uses for a power schedule.
pub fn average_power(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    sched: &PowerSchedule,
) -> Result<f64> {
    let rounds = round_moments(geom, harq, sched)?;
    let powers = sched.powers();
    let mut num = powers[0];
    let mut den = 1.0;
    for m in 1..powers.len() {
        let p = partial_outage(&rounds[..m], harq.t(), harq.rate());
        num += powers[m] * p;
        den += p;
    }
    Ok(num / den)
}
