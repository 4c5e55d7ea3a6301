//! Minimum antenna counts meeting an outage target.
//!
//! Closed forms come from inverting the Gaussian outage approximation under
//! the regime-specific moments; [`min_antennas_search`] evaluates the same
//! approximation on integers and [`min_antennas_mc`] uses simulated outage.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mcsim::{estimate_outage, outage_curve, CorrelationSpec, Growth, McSettings};
use crate::model::{
    average_power, gaussian_moments, moments_at, outage_approx, outage_power_alloc, pa_output,
    Fading, GaussianMoments, HarqConfig, PaProfile, PowerSchedule, Regime, SystemGeometry,
};
use crate::specfun::{inv_q, lambert_w, EULER_GAMMA};

/// Largest antenna count the integer searches consider.
pub const SEARCH_LIMIT: u32 = 1_000_000;

/// Target outage probability `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageConstraint {
    theta: f64,
}

impl OutageConstraint {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "outage target must lie in (0, 0.5], got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Q^{-1}(θ) >= 0`.
    pub fn q_inv(&self) -> f64 {
        inv_q(self.theta).expect("theta validated in (0, 0.5]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolveMethod {
    ClosedForm,
    HighSnrApprox,
    /// Bracketed root of the `k = 1` equation.
    NumericRoot,
    IntegerSearch,
    MonteCarloSearch,
}

impl SolveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMethod::ClosedForm => "closed",
            SolveMethod::HighSnrApprox => "highsnr",
            SolveMethod::NumericRoot => "numeric",
            SolveMethod::IntegerSearch => "search",
            SolveMethod::MonteCarloSearch => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntennaRequirement {
    pub n_t_hat: u32,
    pub n_r_hat: u32,
    /// Continuous solution before rounding (the integer itself for searches).
    pub raw_value: f64,
    pub method: SolveMethod,
}

/// Antenna regime together with its fixed dimension.
///
/// Cases 1 and 2 grow the receive and transmit side respectively. Cases 3
/// and 4 grow `n_r = N` with `n_t = ceil(k N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scenario {
    Case1 { n_t: u32 },
    Case2 { n_r: u32 },
    Case3 { k: f64 },
    Case4 { k: f64 },
}

impl Scenario {
    pub fn regime(&self) -> Regime {
        match *self {
            Scenario::Case1 { .. } => Regime::Case1,
            Scenario::Case2 { .. } => Regime::Case2,
            Scenario::Case3 { k } => Regime::Case3 { k },
            Scenario::Case4 { k } => Regime::Case4 { k },
        }
    }

    /// `(n_t, n_r)` when the growing dimension equals `count`.
    pub fn dims(&self, count: u32) -> (u32, u32) {
        match *self {
            Scenario::Case1 { n_t } => (n_t, count),
            Scenario::Case2 { n_r } => (count, n_r),
            Scenario::Case3 { k } | Scenario::Case4 { k } => {
                let n_t = (k * count as f64 - 1e-9).ceil().max(1.0) as u32;
                (n_t, count)
            }
        }
    }

    pub fn geometry(&self, count: u32, snr: f64) -> Result<SystemGeometry> {
        let (n_t, n_r) = self.dims(count);
        SystemGeometry::new(n_t, n_r, snr, self.regime())
    }

    fn check(&self) -> Result<()> {
        match *self {
            Scenario::Case1 { n_t: 0 } | Scenario::Case2 { n_r: 0 } => Err(
                Error::InvalidParameter("fixed antenna count must be positive".into()),
            ),
            Scenario::Case3 { k } | Scenario::Case4 { k } if !(k > 0.0 && k.is_finite()) => Err(
                Error::InvalidParameter(format!("antenna ratio k must be positive, got {k}")),
            ),
            _ => Ok(()),
        }
    }

    /// Rounds a continuous solution up to antenna counts.
    fn requirement(&self, raw: f64, method: SolveMethod) -> Result<AntennaRequirement> {
        if !(raw.is_finite() && raw < SEARCH_LIMIT as f64) {
            return Err(Error::SearchBound {
                limit: SEARCH_LIMIT,
            });
        }
        let count = raw.ceil().max(1.0) as u32;
        let (n_t_hat, n_r_hat) = self.dims(count);
        Ok(AntennaRequirement {
            n_t_hat,
            n_r_hat,
            raw_value: raw,
            method,
        })
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "snr must be positive and finite, got {snr}"
        )));
    }
    Ok(())
}

/// `Q^{-1}(θ) / sqrt(c)`.
fn q_eff(harq: &HarqConfig, constraint: &OutageConstraint) -> f64 {
    constraint.q_inv() / (harq.multiplicity() as f64).sqrt()
}

/// Closed-form minimum antennas.
pub fn min_antennas_closed(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
) -> Result<AntennaRequirement> {
    scenario.check()?;
    check_snr(snr)?;
    let q = constraint.q_inv();
    let c = harq.multiplicity() as f64;
    let qe = q / c.sqrt();
    let rate = harq.rate_per_round();
    let phi = snr;
    let raw = match scenario {
        Scenario::Case1 { n_t } => {
            let n_t = n_t as f64;
            if q == 0.0 {
                n_t * (rate / n_t).exp() / phi
            } else {
                let z = q * phi.sqrt() / (2.0 * c.sqrt() * n_t) * (-rate / (2.0 * n_t)).exp();
                let w = lambert_w(z)?;
                q * q / (4.0 * c * n_t * w * w)
            }
        }
        Scenario::Case2 { n_r } => {
            let n_r = n_r as f64;
            let margin = n_r * phi.ln_1p() - rate;
            if !(margin > 0.0) {
                return Err(Error::Infeasible(format!(
                    "R/M = {rate:.6} needs N_r ln(1 + snr) = {:.6} to exceed it; \
                     more transmit antennas cannot help",
                    n_r * phi.ln_1p()
                )));
            }
            let x = phi * n_r.sqrt() * qe / ((1.0 + phi) * margin);
            x * x
        }
        Scenario::Case3 { k } => rate / phi + qe / k.sqrt(),
        Scenario::Case4 { k } => {
            let base = phi.ln() - EULER_GAMMA - 1.0;
            let (num, den) = if k > 1.0 {
                let l = (k / (k - 1.0)).ln();
                (rate + qe * l.sqrt(), base + (k - 1.0) * l)
            } else if k < 1.0 {
                let l = (1.0 - k).ln();
                (
                    rate + qe * (-l).sqrt(),
                    k * (base - k.ln() + (k - 1.0) / k * l),
                )
            } else {
                return Err(Error::Domain(
                    "the Case 4 closed form is undefined for k = 1; use min_antennas_k1".into(),
                ));
            };
            if !(den > 0.0) {
                return Err(Error::Domain(format!(
                    "snr {phi} is too low for the Case 4 closed form"
                )));
            }
            num / den
        }
    };
    scenario.requirement(raw, SolveMethod::ClosedForm)
}

/// Both high-SNR forms for Case 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighSnrRequirement {
    /// Lambert W replaced by its logarithmic expansion. `None` where the
    /// expansion's logarithm is undefined.
    pub expanded: Option<AntennaRequirement>,
    /// `Q^{-1}(θ)^2 / (c N_t (ln φ)^2)`.
    pub simplified: AntennaRequirement,
}

/// High-SNR approximations of the Case 1 closed form. Requires `snr > 1`.
pub fn min_antennas_highsnr(
    n_t: u32,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
) -> Result<HighSnrRequirement> {
    let scenario = Scenario::Case1 { n_t };
    scenario.check()?;
    check_snr(snr)?;
    if snr <= 1.0 {
        return Err(Error::Domain(format!(
            "high-SNR forms need snr > 1, got {snr}"
        )));
    }
    let q = constraint.q_inv();
    let c = harq.multiplicity() as f64;
    let nt = n_t as f64;
    let lnphi = snr.ln();
    let simplified =
        scenario.requirement(q * q / (c * nt * lnphi * lnphi), SolveMethod::HighSnrApprox)?;
    let a = (q * snr.sqrt() / (2.0 * c.sqrt() * nt)).ln() - harq.rate_per_round() / (2.0 * nt);
    let expanded = if a > 0.0 && a - a.ln() > 0.0 {
        let d = a - a.ln();
        scenario
            .requirement(q * q / (4.0 * c * nt * d * d), SolveMethod::HighSnrApprox)
            .ok()
    } else {
        None
    };
    Ok(HighSnrRequirement {
        expanded,
        simplified,
    })
}

/// Case 4 with `k = 1`: bisection for `N` in `[2, 10^6]` on
/// `N (ln φ - γ - 1) - R/M = Q^{-1}(θ)/sqrt(c) sqrt(ln(N - 1) + 1)`.
pub fn min_antennas_k1(
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
) -> Result<AntennaRequirement> {
    check_snr(snr)?;
    let b = snr.ln() - EULER_GAMMA - 1.0;
    if !(b > 0.0) {
        return Err(Error::Domain(format!(
            "snr {snr} is too low for the k = 1 equation (ln snr - γ - 1 <= 0)"
        )));
    }
    let qe = q_eff(harq, constraint);
    let rate = harq.rate_per_round();
    let f = |n: f64| n * b - rate - qe * ((n - 1.0).ln() + 1.0).sqrt();
    let (mut lo, mut hi) = (2.0, SEARCH_LIMIT as f64);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(Error::NoRoot {
            lo,
            hi,
            reason: format!("residual is {f_lo:.3e} at N = 2 and {f_hi:.3e} at N = 10^6"),
        });
    }
    let mut root = 0.5 * (lo + hi);
    for _ in 0..200 {
        root = 0.5 * (lo + hi);
        let v = f(root);
        if v.abs() < 1e-9 || hi - lo < 1e-12 * root {
            break;
        }
        if v < 0.0 {
            lo = root;
        } else {
            hi = root;
        }
    }
    Scenario::Case4 { k: 1.0 }.requirement(root, SolveMethod::NumericRoot)
}

/// Smallest `n` in `1..=limit` with `pred(n)`, assuming `pred` is monotone.
/// Scans the first few counts, then brackets by doubling and bisects.
pub(crate) fn first_satisfying<F>(limit: u32, mut pred: F) -> Result<u32>
where
    F: FnMut(u32) -> Result<bool>,
{
    const SCAN: u32 = 8;
    for n in 1..=SCAN.min(limit) {
        if pred(n)? {
            return Ok(n);
        }
    }
    let mut lo = SCAN;
    let mut hi = SCAN;
    loop {
        if hi >= limit {
            return Err(Error::SearchBound { limit });
        }
        hi = hi.saturating_mul(2).min(limit);
        if pred(hi)? {
            break;
        }
        lo = hi;
    }
    // pred(lo) is false and pred(hi) is true.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn meets_approx(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
    count: u32,
) -> Result<bool> {
    let geom = scenario.geometry(count, snr)?;
    Ok(outage_approx(&gaussian_moments(&geom), harq) <= constraint.theta())
}

/// Smallest growing-dimension count whose approximate outage meets `θ`.
pub fn min_antennas_search(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
) -> Result<AntennaRequirement> {
    scenario.check()?;
    check_snr(snr)?;
    let n = first_satisfying(SEARCH_LIMIT, |n| {
        meets_approx(scenario, harq, snr, constraint, n)
    })?;
    scenario.requirement(n as f64, SolveMethod::IntegerSearch)
}

/// Largest count the Monte Carlo search will simulate.
pub const MC_LIMIT: u32 = 4096;

/// Smallest count whose simulated outage estimate meets `θ`.
///
/// Cases 1 and 2 evaluate a nested outage curve from one antenna upwards,
/// doubling its length until some count meets the target. Cases 3 and 4
/// start near the Gaussian search count and walk to the first count whose
/// estimate meets `θ` while the count below it does not.
pub fn min_antennas_mc(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
    corr: &CorrelationSpec,
    settings: &McSettings,
) -> Result<AntennaRequirement> {
    min_antennas_mc_within(scenario, harq, snr, constraint, corr, settings, MC_LIMIT)
}

/// [`min_antennas_mc`] with a custom largest count.
pub fn min_antennas_mc_within(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
    corr: &CorrelationSpec,
    settings: &McSettings,
    limit: u32,
) -> Result<AntennaRequirement> {
    if limit == 0 {
        return Err(Error::InvalidParameter(
            "search limit must be positive".into(),
        ));
    }
    scenario.check()?;
    check_snr(snr)?;
    let theta = constraint.theta();
    let count = match scenario {
        Scenario::Case1 { n_t } | Scenario::Case2 { n_r: n_t } => {
            let growth = match scenario {
                Scenario::Case1 { .. } => Growth::Receive { n_t },
                _ => Growth::Transmit { n_r: n_t },
            };
            let guess = min_antennas_search(scenario, harq, snr, constraint)
                .map(|r| match scenario {
                    Scenario::Case1 { .. } => r.n_r_hat,
                    _ => r.n_t_hat,
                })
                .unwrap_or(8);
            let mut hi = guess.saturating_mul(2).clamp(8.min(limit), limit);
            loop {
                let curve = outage_curve(growth, 1..=hi, snr, harq, corr, settings)?;
                if let Some(i) = curve.iter().position(|p| p.estimate.p_hat <= theta) {
                    break i as u32 + 1;
                }
                if hi >= limit {
                    return Err(Error::SearchBound { limit });
                }
                hi = hi.saturating_mul(2).min(limit);
            }
        }
        Scenario::Case3 { .. } | Scenario::Case4 { .. } => {
            let meets = |n: u32| -> Result<bool> {
                let geom = scenario.geometry(n, snr)?;
                let est = estimate_outage(&geom, harq, corr, None, settings)?;
                Ok(est.p_hat <= theta)
            };
            let mut n = min_antennas_search(scenario, harq, snr, constraint)
                .map(|r| r.n_r_hat)
                .unwrap_or(1)
                .min(limit);
            if meets(n)? {
                while n > 1 && meets(n - 1)? {
                    n -= 1;
                }
            } else {
                loop {
                    if n >= limit {
                        return Err(Error::SearchBound { limit });
                    }
                    n += 1;
                    if meets(n)? {
                        break;
                    }
                }
            }
            n
        }
    };
    scenario.requirement(count as f64, SolveMethod::MonteCarloSearch)
}

fn moments_for(geom: &SystemGeometry, pa: Option<(&PaProfile, f64)>) -> Result<GaussianMoments> {
    match pa {
        None => Ok(gaussian_moments(geom)),
        Some((profile, phi_cons)) => {
            let phi = pa_output(profile, phi_cons)?;
            let (mu, sigma2) = moments_at(geom, phi);
            Ok(GaussianMoments { mu, sigma2 })
        }
    }
}

/// Largest initial rate whose approximate outage is at most `θ`,
/// `M (μ - σ Q^{-1}(θ) / sqrt(c))`, floored at zero. With a PA profile the
/// SNR is the PA output for the consumed power.
pub fn supported_rate(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    constraint: &OutageConstraint,
    pa: Option<(&PaProfile, f64)>,
) -> Result<f64> {
    let m = moments_for(geom, pa)?;
    let rate = harq.m() as f64 * (m.mu - m.sigma() * q_eff(harq, constraint));
    Ok(rate.max(0.0))
}

/// Smallest consumed power at which [`supported_rate`] reaches `rate`.
///
/// Bisects on `ln φ_cons` between `1e-12` and the PA's saturation input
/// (`10^12` for an ideal PA).
pub fn required_consumed_power(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    constraint: &OutageConstraint,
    pa: &PaProfile,
    rate: f64,
) -> Result<f64> {
    let supports = |phi_cons: f64| -> bool {
        supported_rate(geom, harq, constraint, Some((pa, phi_cons)))
            .map(|r| r >= rate)
            .unwrap_or(false)
    };
    let top = if pa.phi_max().is_finite() {
        pa.phi_max() / pa.epsilon() * (1.0 - 1e-12)
    } else {
        1e12
    };
    if !supports(top) {
        return Err(Error::Infeasible(format!(
            "rate {rate} is not supported at any consumed power up to {top:.4e}"
        )));
    }
    let (mut lo, mut hi) = (1e-12f64.ln(), top.ln());
    if supports(lo.exp()) {
        return Ok(lo.exp());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if supports(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(hi.exp())
}

/// Points in the per-round power grid.
pub const POWER_GRID_POINTS: usize = 31;

/// Per-round power candidates: `budget 10^{(i - 20)/10}` for `i = 0..31`,
/// i.e. `-20 dB .. +10 dB` around the budget; point 20 is the budget itself.
pub fn power_grid(budget: f64) -> Vec<f64> {
    (0..POWER_GRID_POINTS)
        .map(|i| {
            if i == 20 {
                budget
            } else {
                budget * 10f64.powf((i as f64 - 20.0) / 10.0)
            }
        })
        .collect()
}

/// Best schedule on the power grid at a fixed geometry: the lowest outage
/// among schedules whose average power stays within the budget. Ties go to
/// the lexicographically first schedule.
pub fn best_schedule(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    budget: f64,
) -> Result<(PowerSchedule, f64)> {
    let grid = power_grid(budget);
    let m = harq.m() as usize;
    let limit = budget * (1.0 + 1e-12);
    let mut idx = vec![0usize; m];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let powers: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let sched = PowerSchedule::new(powers.clone())?;
        if average_power(geom, harq, &sched)? <= limit {
            let p = outage_power_alloc(geom, harq, &sched)?;
            if best.as_ref().is_none_or(|(_, b)| p < *b) {
                best = Some((powers, p));
            }
        }
        // Odometer increment, last round fastest.
        let mut pos = m;
        loop {
            if pos == 0 {
                let (powers, p) = best.expect("the uniform schedule is always feasible");
                return Ok((PowerSchedule::new(powers)?, p));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < POWER_GRID_POINTS {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Minimum antennas when the per-round powers may be adapted subject to an
/// average power budget. Returns the count and the schedule achieving it.
///
/// Counts are scanned upwards from one. The uniform schedule is on the grid,
/// so the scan ends no later than the uniform-power search count.
pub fn min_antennas_power_alloc(
    scenario: Scenario,
    harq: &HarqConfig,
    power_budget: f64,
    constraint: &OutageConstraint,
) -> Result<(AntennaRequirement, PowerSchedule)> {
    scenario.check()?;
    check_snr(power_budget)?;
    if harq.fading() == Fading::QuasiStatic && harq.m() > 1 {
        return Err(Error::InvalidParameter(
            "power allocation is defined for slow or fast fading only".into(),
        ));
    }
    let theta = constraint.theta();
    let evaluate = |n: u32| -> Result<(PowerSchedule, f64)> {
        best_schedule(&scenario.geometry(n, power_budget)?, harq, power_budget)
    };
    let finish = |n: u32, sched: PowerSchedule| -> Result<(AntennaRequirement, PowerSchedule)> {
        Ok((
            scenario.requirement(n as f64, SolveMethod::IntegerSearch)?,
            sched,
        ))
    };
    match min_antennas_search(scenario, harq, power_budget, constraint) {
        Ok(uniform) => {
            let top = match scenario {
                Scenario::Case2 { .. } => uniform.n_t_hat,
                _ => uniform.n_r_hat,
            };
            for n in 1..=top {
                let (sched, p) = evaluate(n)?;
                if p <= theta {
                    return finish(n, sched);
                }
            }
            // The grid's uniform point meets θ at `top`.
            let (sched, _) = evaluate(top)?;
            finish(top, sched)
        }
        Err(Error::SearchBound { .. }) => {
            let n = first_satisfying(SEARCH_LIMIT, |n| Ok(evaluate(n)?.1 <= theta))?;
            let (sched, _) = evaluate(n)?;
            finish(n, sched)
        }
        Err(e) => Err(e),
    }
}
