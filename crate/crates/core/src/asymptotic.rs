//! Normalized outage factor `Γ = -ln Pr(outage) / (N_t N_r)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{gaussian_moments, HarqConfig, Regime, SystemGeometry};
use crate::specfun::EULER_GAMMA;

/// Outage decay exponent per antenna pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageFactor {
    pub gamma: f64,
    /// Fading multiplicity `c`; `None` for empirical estimates.
    pub c: Option<u32>,
    /// Set when `μ < R/M`: outage tends to 1 and `gamma` is reported as 0.
    pub saturated: bool,
}

/// Case 4 `α` for an antenna ratio `k != 1`.
fn case4_alpha(k: f64, phi: f64) -> Result<f64> {
    let base = phi.ln() - EULER_GAMMA - 1.0;
    if k > 1.0 {
        let l = (k / (k - 1.0)).ln();
        let t = base + (k - 1.0) * l;
        Ok(t * t / l)
    } else if k < 1.0 {
        let l = (1.0 - k).ln();
        let t = base + (k - 1.0) / k * l - k.ln();
        Ok(k * k * t * t / -l)
    } else {
        Err(Error::Domain(
            "the Case 4 outage factor is undefined for k = 1".into(),
        ))
    }
}

/// Closed-form `Γ` from the Gaussian approximation with `Q(x) ≈ e^{-x²/2}/2`.
pub fn gamma_closed(geom: &SystemGeometry, harq: &HarqConfig) -> Result<OutageFactor> {
    let c = harq.multiplicity();
    let cf = c as f64;
    let phi = geom.snr();
    let n_t = geom.n_t() as f64;
    let n_r = geom.n_r() as f64;
    let rate = harq.rate_per_round();

    // Checked first so k = 1 is rejected even when saturated.
    let alpha = match geom.regime() {
        Regime::Case4 { k } => Some(case4_alpha(k, phi)?),
        _ => None,
    };
    if gaussian_moments(geom).mu < rate {
        return Ok(OutageFactor {
            gamma: 0.0,
            c: Some(c),
            saturated: true,
        });
    }
    let gamma = match geom.regime() {
        Regime::Case1 => {
            let d = (n_r * phi / n_t).ln_1p() - rate / n_t;
            cf / 2.0 * d * d
        }
        Regime::Case2 => {
            let d = phi.ln_1p() - rate / n_r;
            let s = (1.0 + phi) / phi;
            cf / 2.0 * s * s * d * d
        }
        Regime::Case3 { .. } => cf / 2.0,
        Regime::Case4 { k } => cf / (2.0 * k) * alpha.unwrap_or_default(),
    };
    Ok(OutageFactor {
        gamma,
        c: Some(c),
        saturated: false,
    })
}

/// `Γ` from an outage probability, `-ln p / (n_t n_r)`.
pub fn gamma_empirical(outage: f64, n_t: u32, n_r: u32) -> Result<OutageFactor> {
    if !(outage > 0.0 && outage < 1.0) {
        return Err(Error::Domain(format!(
            "outage probability must lie in (0, 1), got {outage}"
        )));
    }
    if n_t == 0 || n_r == 0 {
        return Err(Error::InvalidParameter(
            "antenna counts must be positive".into(),
        ));
    }
    Ok(OutageFactor {
        gamma: -outage.ln() / (n_t as f64 * n_r as f64),
        c: None,
        saturated: false,
    })
}
