//! Figure presets for `sweep --preset`. Each preset fixes its figure's
//! parameters and a rate grid of our own choosing; `--rate` replaces the
//! grid and `--method` the solver where a preset solves for counts.

use mimo_harq::asymptotic::{gamma_closed, gamma_empirical};
use mimo_harq::dimension::{
    min_antennas_closed, min_antennas_mc_within, min_antennas_power_alloc, min_antennas_search,
    required_consumed_power, supported_rate, OutageConstraint, Scenario,
};
use mimo_harq::mcsim::{outage_curve, CorrelationSpec, CurvePoint, Growth, McSettings};
use mimo_harq::model::{
    db_to_linear, gaussian_moments, linear_to_db, outage_approx, Fading, HarqConfig, PaProfile,
    PowerSchedule, Regime, SystemGeometry,
};
use mimo_harq::Error;

use crate::commands::{
    geometry_row, harq_row, mc_row, requirement_row, scenario_row, solve, status_of, Collector,
};
use crate::config::{default_samples, MethodArg, RunConfig};
use crate::table::{Row, Table};
use crate::{CliError, Outcome};

pub const PRESETS: [&str; 10] = [
    "fig1", "fig2", "fig3", "fig4", "fig5a", "fig5b", "fig5c", "fig6a", "fig6b", "fig7",
];

/// Canonical preset name; `fig5` and `fig6` stand for their first panel.
pub fn canonical(name: &str) -> Option<&'static str> {
    match name {
        "fig5" => Some("fig5a"),
        "fig6" => Some("fig6a"),
        other => PRESETS.iter().copied().find(|p| *p == other),
    }
}

pub fn run(name: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Some(preset) = canonical(name) else {
        return Err(CliError::Usage(format!(
            "unknown preset {name:?}; expected one of {}",
            PRESETS.join(", ")
        )));
    };
    // Per-row failures are expected inside a preset (infeasible rates at the
    // end of a sweep) and only show in the status column.
    let table = match preset {
        "fig1" => fig1(cfg)?,
        "fig2" => fig2(cfg)?,
        "fig3" => fig3(cfg)?,
        "fig4" => fig4(cfg)?,
        "fig5a" => fig5a(cfg)?,
        "fig5b" => fig5b(cfg)?,
        "fig5c" => fig5c(cfg)?,
        "fig6a" => fig6a(cfg)?,
        "fig6b" => fig6b(cfg)?,
        _ => fig7(cfg)?,
    };
    Ok(Outcome {
        table,
        failure: None,
    })
}

/// `start, start + step, .., stop` without accumulated drift.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

fn rates(cfg: &RunConfig, default: Vec<f64>) -> Vec<f64> {
    if cfg.rate.is_empty() {
        default
    } else {
        cfg.rate.clone()
    }
}

fn constraint(theta: f64) -> Result<OutageConstraint, CliError> {
    Ok(OutageConstraint::new(theta)?)
}

fn harq(fading: Fading, m: u32, t: u32, rate: f64) -> Result<HarqConfig, CliError> {
    Ok(HarqConfig::new(fading, m, t, rate)?)
}

/// One dimensioning row per point with the configured solver.
#[allow(clippy::too_many_arguments)]
fn dimension_point(
    out: &mut Collector,
    cfg: &RunConfig,
    scenario: Scenario,
    harq: &HarqConfig,
    snr_db: f64,
    theta: f64,
    method: MethodArg,
    extra: Row,
) -> Result<(), CliError> {
    let c = constraint(theta)?;
    let base = scenario_row(&scenario)
        .extend(harq_row(harq))
        .num("snr_db", snr_db)
        .num("theta", theta)
        .extend(extra);
    let res = solve(scenario, harq, db_to_linear(snr_db), &c, method, cfg);
    out.add(base, res)
}

fn finish(out: Collector) -> Table {
    out.finish().table
}

/// Case 1, slow fading, M = 2, N_t = 1.
pub fn fig1(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let mut out = Collector::default();
    for theta in [1e-2, 1e-4] {
        for db in [0.0, 5.0, 10.0] {
            for r in rates(cfg, grid(0.5, 8.0, 0.5)) {
                let h = harq(Fading::SlowFading, 2, 1, r)?;
                let s = Scenario::Case1 { n_t: 1 };
                dimension_point(&mut out, cfg, s, &h, db, theta, method, Row::new())?;
            }
        }
    }
    Ok(finish(out))
}

/// Case 2 at 15 dB, θ = 1e-4, M = 2, for each fading model (T = 2 when fast).
pub fn fig2(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let mut out = Collector::default();
    for n_r in [1, 2] {
        for fading in [Fading::QuasiStatic, Fading::SlowFading, Fading::FastFading] {
            // Quasi-static HARQ rounds repeat the same channel; M = 2 there
            // only divides the rate.
            for r in rates(cfg, grid(0.5, 10.0, 0.5)) {
                let h = harq(fading, 2, 2, r)?;
                let s = Scenario::Case2 { n_r };
                dimension_point(&mut out, cfg, s, &h, 15.0, 1e-4, method, Row::new())?;
            }
        }
    }
    Ok(finish(out))
}

/// Case 1, quasi-static, 5 dB, θ = 1e-4, M ∈ {1, 2}, N_t ∈ {1, 5}.
pub fn fig3(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let mut out = Collector::default();
    for n_t in [1, 5] {
        for m in [1, 2] {
            for r in rates(cfg, grid(2.0, 24.0, 1.0)) {
                let h = harq(Fading::QuasiStatic, m, 1, r)?;
                let s = Scenario::Case1 { n_t };
                dimension_point(&mut out, cfg, s, &h, 5.0, 1e-4, method, Row::new())?;
            }
        }
    }
    Ok(finish(out))
}

/// Cases 3 (-5 dB) and 4 (15 dB), quasi-static, M = 1, θ = 1e-3. Every row
/// also carries the exact-moment search count.
pub fn fig4(cfg: &RunConfig) -> Result<Table, CliError> {
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let c = constraint(1e-3)?;
    let mut out = Collector::default();
    for (case, db) in [(3u8, -5.0), (4, 15.0)] {
        for k in [0.5, 1.0, 2.0] {
            let s = if case == 3 {
                Scenario::Case3 { k }
            } else {
                Scenario::Case4 { k }
            };
            for r in rates(cfg, grid(1.0, 20.0, 1.0)) {
                let h = harq(Fading::QuasiStatic, 1, 1, r)?;
                let searched = min_antennas_search(s, &h, db_to_linear(db), &c)
                    .map(|q| q.n_r_hat as f64)
                    .ok();
                let extra = Row::new().opt_num("count_search", searched);
                dimension_point(&mut out, cfg, s, &h, db, 1e-3, method, extra)?;
            }
        }
    }
    Ok(finish(out))
}

pub const FIG5_SNR_DB: f64 = 5.0;
pub const FIG5A_RATES: [f64; 2] = [3.0, 4.0];
pub const FIG5A_THETAS: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const FIG5A_MAX_NR: u32 = 48;

/// Outage against N_r for Case 1, N_t = 1, quasi-static, M = 1, 5 dB.
pub fn fig5a_curve(rate: f64, settings: &McSettings) -> Result<Vec<CurvePoint>, Error> {
    let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, rate)?;
    outage_curve(
        Growth::Receive { n_t: 1 },
        1..=FIG5A_MAX_NR,
        db_to_linear(FIG5_SNR_DB),
        &h,
        &CorrelationSpec::iid(),
        settings,
    )
}

/// First point of a curve whose estimate meets `theta`.
pub fn first_meeting(curve: &[CurvePoint], theta: f64) -> Option<&CurvePoint> {
    curve.iter().find(|p| p.estimate.p_hat <= theta)
}

fn fig5a_settings(cfg: &RunConfig) -> McSettings {
    let theta = FIG5A_THETAS.iter().copied().fold(1.0, f64::min);
    let samples = cfg.samples.unwrap_or_else(|| default_samples(theta));
    McSettings::new(samples, cfg.seed()).with_workers(cfg.workers.unwrap_or(1))
}

/// Simulated outage curves for R ∈ {3, 4} and, per θ, the smallest N_r on
/// the curve meeting it. One curve per rate serves every θ, so all minima
/// use the sample count of the smallest θ.
pub fn fig5a(cfg: &RunConfig) -> Result<Table, CliError> {
    let settings = fig5a_settings(cfg);
    let snr = db_to_linear(FIG5_SNR_DB);
    let mut curves = Table::default();
    let mut minima = Table::default();
    for rate in rates(cfg, FIG5A_RATES.to_vec()) {
        let curve = fig5a_curve(rate, &settings)?;
        let h = harq(Fading::QuasiStatic, 1, 1, rate)?;
        for p in &curve {
            let g = SystemGeometry::new(1, p.n_r, snr, Regime::Case1)?;
            curves.push(
                Row::new()
                    .set("kind", "curve")
                    .num("rate", rate)
                    .set("n_t", 1)
                    .set("n_r", p.n_r)
                    .set("product", p.n_r)
                    .extend(mc_row(&settings))
                    .num("p_hat", p.estimate.p_hat)
                    .num("ci_low", p.estimate.ci_low)
                    .num("ci_high", p.estimate.ci_high)
                    .num("outage_approx", outage_approx(&gaussian_moments(&g), &h)),
            );
        }
        for theta in FIG5A_THETAS {
            let c = constraint(theta)?;
            let s = Scenario::Case1 { n_t: 1 };
            let search = min_antennas_search(s, &h, snr, &c).map(|q| q.n_r_hat as f64);
            let closed = min_antennas_closed(s, &h, snr, &c).map(|q| q.n_r_hat as f64);
            let hit = first_meeting(&curve, theta);
            let mut row = Row::new()
                .set("kind", "minimum")
                .num("rate", rate)
                .num("theta", theta)
                .extend(mc_row(&settings))
                .opt_num("count_mc", hit.map(|p| p.n_r as f64))
                .opt_num("p_hat", hit.map(|p| p.estimate.p_hat))
                .opt_num("count_search", search.ok())
                .opt_num("count_closed", closed.ok());
            row = row.set("status", if hit.is_some() { "ok" } else { "search-bound" });
            minima.push(row);
        }
    }
    curves.rows.extend(minima.rows);
    Ok(curves)
}

/// Γ against N_r for Case 1, N_t = 1, quasi-static, M = 1, 5 dB, R = 3:
/// closed form, Gaussian approximation and simulation.
pub fn fig5b(cfg: &RunConfig) -> Result<Table, CliError> {
    let settings = cfg.mc(None);
    let snr = db_to_linear(FIG5_SNR_DB);
    let mut table = Table::default();
    for rate in rates(cfg, vec![3.0]) {
        let h = harq(Fading::QuasiStatic, 1, 1, rate)?;
        let curve = outage_curve(
            Growth::Receive { n_t: 1 },
            1..=40,
            snr,
            &h,
            &CorrelationSpec::iid(),
            &settings,
        )?;
        for p in &curve {
            let g = SystemGeometry::new(1, p.n_r, snr, Regime::Case1)?;
            table.push(gamma_row(&g, &h, p, &settings)?);
        }
    }
    Ok(table)
}

fn gamma_row(
    g: &SystemGeometry,
    h: &HarqConfig,
    p: &CurvePoint,
    settings: &McSettings,
) -> Result<Row, CliError> {
    let pairs = g.n_t() as f64 * g.n_r() as f64;
    let closed = gamma_closed(g, h)?;
    let approx = outage_approx(&gaussian_moments(g), h);
    let p_hat = p.estimate.p_hat;
    let mc = if p_hat > 0.0 && p_hat < 1.0 {
        Some(gamma_empirical(p_hat, g.n_t(), g.n_r())?.gamma)
    } else {
        None
    };
    let approx_gamma = (approx > 0.0 && approx < 1.0).then(|| -approx.ln() / pairs);
    Ok(geometry_row(g)
        .extend(harq_row(h))
        .set("product", g.n_t() * g.n_r())
        .num("gamma_closed", closed.gamma)
        .set("saturated", closed.saturated)
        .num("outage_approx", approx)
        .opt_num("gamma_approx", approx_gamma)
        .extend(mc_row(settings))
        .num("p_hat", p_hat)
        .num("ci_low", p.estimate.ci_low)
        .num("ci_high", p.estimate.ci_high)
        .opt_num("gamma_mc", mc))
}

/// Case 2, N_r = 1, R = 1, 5 dB: slow fading M = 1 against fast fading
/// M = 1, T = 2, as N_t grows.
pub fn fig5c(cfg: &RunConfig) -> Result<Table, CliError> {
    let settings = cfg.mc(None);
    let snr = db_to_linear(FIG5_SNR_DB);
    let mut table = Table::default();
    for rate in rates(cfg, vec![1.0]) {
        for (fading, t) in [(Fading::SlowFading, 1), (Fading::FastFading, 2)] {
            let h = harq(fading, 1, t, rate)?;
            let curve = outage_curve(
                Growth::Transmit { n_r: 1 },
                1..=40,
                snr,
                &h,
                &CorrelationSpec::iid(),
                &settings,
            )?;
            for p in &curve {
                let g = SystemGeometry::new(p.n_t, 1, snr, Regime::Case2)?;
                table.push(gamma_row(&g, &h, p, &settings)?);
            }
        }
    }
    Ok(table)
}

/// Fixed parameters of the supported-rate panel. N_t is our choice.
#[derive(Debug, Clone, Copy)]
pub struct Fig6a {
    pub n_t: u32,
    pub m: u32,
    pub t: u32,
    pub theta: f64,
    pub pa_eps: f64,
    pub pa_theta: f64,
    pub pa_max_db: f64,
}

pub const FIG6A: Fig6a = Fig6a {
    n_t: 64,
    m: 2,
    t: 2,
    theta: 1e-4,
    pa_eps: 0.65,
    pa_theta: 0.5,
    pa_max_db: 30.0,
};

impl Fig6a {
    pub fn harq(&self) -> Result<HarqConfig, Error> {
        HarqConfig::new(Fading::FastFading, self.m, self.t, 0.0)
    }

    pub fn geometry(&self, n_r: u32) -> Result<SystemGeometry, Error> {
        // The SNR is replaced by the PA output; 1 is a placeholder.
        SystemGeometry::new(self.n_t, n_r, 1.0, Regime::Case2)
    }

    pub fn nonideal(&self) -> Result<PaProfile, Error> {
        PaProfile::new(self.pa_eps, self.pa_theta, db_to_linear(self.pa_max_db))
    }

    /// Consumed power in dB at which each PA first supports `rate`.
    pub fn required_db(&self, n_r: u32, pa: &PaProfile, rate: f64) -> Result<f64, Error> {
        let c = OutageConstraint::new(self.theta)?;
        let p = required_consumed_power(&self.geometry(n_r)?, &self.harq()?, &c, pa, rate)?;
        Ok(linear_to_db(p))
    }

    /// Extra consumed power of the non-ideal PA at `rate`, in dB.
    pub fn gap_db(&self, n_r: u32, rate: f64) -> Result<f64, Error> {
        let ideal = self.required_db(n_r, &PaProfile::ideal(), rate)?;
        let real = self.required_db(n_r, &self.nonideal()?, rate)?;
        Ok(real - ideal)
    }
}

/// Supported rate against consumed power for the ideal and non-ideal PA.
pub fn fig6a(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = FIG6A;
    let h = p.harq()?;
    let c = constraint(p.theta)?;
    let powers = if cfg.power_cons_db.is_empty() {
        grid(-10.0, 40.0, 1.0)
    } else {
        cfg.power_cons_db.clone()
    };
    let mut table = Table::default();
    for n_r in [1, 2] {
        let g = p.geometry(n_r)?;
        for (label, pa) in [("ideal", PaProfile::ideal()), ("nonideal", p.nonideal()?)] {
            for &db in &powers {
                let phi = db_to_linear(db);
                let base = Row::new()
                    .set("case", 2)
                    .set("n_t", p.n_t)
                    .set("n_r", n_r)
                    .extend(harq_row(&h).num("theta", p.theta))
                    .set("pa", label)
                    .num("power_cons_db", db);
                let res = mimo_harq::model::pa_output(&pa, phi).and_then(|out| {
                    let r = supported_rate(&g, &h, &c, Some((&pa, phi)))?;
                    Ok(Row::new()
                        .num("snr_db", linear_to_db(out))
                        .num("rate_max", r))
                });
                table.push(status_row(base, res));
            }
        }
    }
    Ok(table)
}

fn status_row(base: Row, res: Result<Row, Error>) -> Row {
    match res {
        Ok(extra) => base.extend(extra).set("status", "ok"),
        Err(e) => base.set("status", status_of(&e)),
    }
}

pub const FIG6B_SNR_DB: [f64; 2] = [-5.0, 0.0];

/// Uniform and adapted power counts for one fig6b point.
pub fn fig6b_point(snr_db: f64, rate: f64) -> Result<(u32, u32, PowerSchedule), Error> {
    let h = HarqConfig::new(Fading::SlowFading, 2, 1, rate)?;
    let c = OutageConstraint::new(1e-3)?;
    let s = Scenario::Case2 { n_r: 1 };
    let budget = db_to_linear(snr_db);
    let uniform = min_antennas_search(s, &h, budget, &c)?;
    let (adaptive, sched) = min_antennas_power_alloc(s, &h, budget, &c)?;
    Ok((uniform.n_t_hat, adaptive.n_t_hat, sched))
}

/// Case 2, N_r = 1, θ = 1e-3, slow fading, M = 2: uniform power against the
/// best grid schedule under the same average budget.
pub fn fig6b(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut table = Table::default();
    for db in FIG6B_SNR_DB {
        for r in rates(cfg, grid(0.1, 1.2, 0.1)) {
            let base = Row::new()
                .set("case", 2)
                .set("n_r", 1)
                .extend(harq_row(&harq(Fading::SlowFading, 2, 1, r)?))
                .num("theta", 1e-3)
                .num("snr_db", db);
            let res = fig6b_point(db, r).map(|(u, a, sched)| {
                let text = sched
                    .powers()
                    .iter()
                    .map(|p| format!("{:.2}", linear_to_db(*p)))
                    .collect::<Vec<_>>()
                    .join(";");
                Row::new()
                    .set("count_uniform", u)
                    .set("count_adaptive", a)
                    .set("schedule_db", text)
            });
            table.push(status_row(base, res));
        }
    }
    Ok(table)
}

pub const FIG7_BETAS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9];
pub const FIG7_LIMIT: u32 = 256;

/// Simulated minimum N_t against transmit correlation: Case 2, N_r = 1,
/// quasi-static, M = 1, θ = 1e-4, 5 dB.
pub fn fig7(cfg: &RunConfig) -> Result<Table, CliError> {
    let theta = 1e-4;
    let c = constraint(theta)?;
    let settings = cfg.mc(Some(theta));
    let snr = db_to_linear(FIG5_SNR_DB);
    let s = Scenario::Case2 { n_r: 1 };
    let betas = match cfg.beta {
        Some(b) => vec![b],
        None => FIG7_BETAS.to_vec(),
    };
    let mut table = Table::default();
    for r in rates(cfg, vec![0.25, 0.5, 0.75, 1.0, 1.25]) {
        let h = harq(Fading::QuasiStatic, 1, 1, r)?;
        let search = min_antennas_search(s, &h, snr, &c).map(|q| q.n_t_hat as f64);
        for &beta in &betas {
            let corr = CorrelationSpec::new(beta)?;
            let base = Row::new()
                .extend(harq_row(&h))
                .num("snr_db", FIG5_SNR_DB)
                .num("theta", theta)
                .num("beta", beta)
                .extend(mc_row(&settings))
                .opt_num("count_search_iid", search.as_ref().ok().copied());
            let res = min_antennas_mc_within(s, &h, snr, &c, &corr, &settings, FIG7_LIMIT)
                .map(|q| requirement_row(&s, &q));
            table.push(status_row(base, res));
        }
    }
    Ok(table)
}
