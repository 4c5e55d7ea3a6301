use mimo_harq::asymptotic::{gamma_closed, gamma_empirical};
use mimo_harq::dimension::{
    min_antennas_closed, min_antennas_highsnr, min_antennas_k1, min_antennas_mc,
    min_antennas_search, supported_rate, AntennaRequirement, OutageConstraint, Scenario,
};
use mimo_harq::mcsim::{estimate_outage, siso_outage_closed, McSettings};
use mimo_harq::model::{
    average_power, db_to_linear, gaussian_moments, linear_to_db, outage_argument,
    outage_power_alloc, pa_output, Fading, GaussianMoments, HarqConfig, Regime, SystemGeometry,
};
use mimo_harq::Error;

use crate::config::{MethodArg, RunConfig};
use crate::table::{Row, Table};
use crate::{presets, CliError, Outcome};

pub fn status_of(e: &Error) -> &'static str {
    match e {
        Error::Infeasible(_) => "infeasible",
        Error::InfeasiblePower { .. } => "infeasible-power",
        Error::NoRoot { .. } => "no-root",
        Error::SearchBound { .. } => "search-bound",
        Error::Domain(_) => "domain",
        Error::UnsupportedGeometry(_) => "unsupported",
        _ => "invalid",
    }
}

/// Accumulates rows; per-point solver failures become a `status` column and
/// the first one is kept for the exit code. Invalid parameters abort.
#[derive(Default)]
pub struct Collector {
    table: Table,
    failure: Option<CliError>,
}

impl Collector {
    pub fn add(&mut self, base: Row, result: Result<Row, Error>) -> Result<(), CliError> {
        match result {
            Ok(extra) => self.table.push(base.extend(extra).set("status", "ok")),
            Err(e @ Error::InvalidParameter(_)) => return Err(e.into()),
            Err(e) => {
                self.table.push(base.set("status", status_of(&e)));
                self.failure.get_or_insert(e.into());
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Outcome {
        Outcome {
            table: self.table,
            failure: self.failure,
        }
    }
}

fn nonempty<'a>(v: &'a [f64], flag: &str) -> Result<&'a [f64], CliError> {
    if v.is_empty() {
        Err(CliError::Usage(format!("missing required flag --{flag}")))
    } else {
        Ok(v)
    }
}

pub fn scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    Ok(match cfg.case.unwrap_or(1) {
        1 => Scenario::Case1 {
            n_t: RunConfig::require(cfg.nt, "nt")?,
        },
        2 => Scenario::Case2 {
            n_r: RunConfig::require(cfg.nr, "nr")?,
        },
        3 => Scenario::Case3 {
            k: RunConfig::require(cfg.k, "k")?,
        },
        _ => Scenario::Case4 {
            k: RunConfig::require(cfg.k, "k")?,
        },
    })
}

/// Fixed geometry from `--nt`/`--nr`; `--case` only selects the moments.
pub fn geometry(cfg: &RunConfig, snr: f64) -> Result<SystemGeometry, CliError> {
    let n_t = RunConfig::require(cfg.nt, "nt")?;
    let n_r = RunConfig::require(cfg.nr, "nr")?;
    let k = cfg.k.unwrap_or(n_t as f64 / n_r as f64);
    let regime = match cfg.case.unwrap_or(1) {
        1 => Regime::Case1,
        2 => Regime::Case2,
        3 => Regime::Case3 { k },
        _ => Regime::Case4 { k },
    };
    Ok(SystemGeometry::new(n_t, n_r, snr, regime)?)
}

pub fn scenario_row(s: &Scenario) -> Row {
    let (case, k) = match *s {
        Scenario::Case1 { .. } => (1, None),
        Scenario::Case2 { .. } => (2, None),
        Scenario::Case3 { k } => (3, Some(k)),
        Scenario::Case4 { k } => (4, Some(k)),
    };
    Row::new().set("case", case).opt_num("k", k)
}

pub fn geometry_row(g: &SystemGeometry) -> Row {
    Row::new()
        .set("case", g.regime().number())
        .set("n_t", g.n_t())
        .set("n_r", g.n_r())
}

pub fn harq_row(h: &HarqConfig) -> Row {
    Row::new()
        .set("fading", h.fading().name())
        .set("m", h.m())
        .set("t", h.t())
        .num("rate", h.rate())
}

pub fn requirement_row(s: &Scenario, r: &AntennaRequirement) -> Row {
    let count = match s {
        Scenario::Case2 { .. } => r.n_t_hat,
        _ => r.n_r_hat,
    };
    Row::new()
        .set("method", r.method.name())
        .num("raw_value", r.raw_value)
        .set("count", count)
        .set("n_t", r.n_t_hat)
        .set("n_r", r.n_r_hat)
}

/// Minimum antennas by the chosen method. `closed` routes Case 4 with
/// `k = 1` to the numeric root solver.
pub fn solve(
    scenario: Scenario,
    harq: &HarqConfig,
    snr: f64,
    constraint: &OutageConstraint,
    method: MethodArg,
    cfg: &RunConfig,
) -> Result<Row, Error> {
    let extra = Row::new();
    let (req, extra) = match method {
        MethodArg::Closed => match scenario {
            Scenario::Case4 { k: 1.0 } => (min_antennas_k1(harq, snr, constraint)?, extra),
            _ => (min_antennas_closed(scenario, harq, snr, constraint)?, extra),
        },
        MethodArg::Highsnr => {
            let Scenario::Case1 { n_t } = scenario else {
                return Err(Error::InvalidParameter(
                    "--method highsnr applies to case 1 only".into(),
                ));
            };
            let r = min_antennas_highsnr(n_t, harq, snr, constraint)?;
            let expanded = r.expanded.map(|e| e.raw_value);
            (r.simplified, extra.opt_num("raw_expanded", expanded))
        }
        MethodArg::Search => (min_antennas_search(scenario, harq, snr, constraint)?, extra),
        MethodArg::Mc => {
            let settings = cfg.mc(Some(constraint.theta()));
            let corr = cfg.corr().map_err(|e| match e {
                CliError::Core(e) => e,
                other => Error::InvalidParameter(other.to_string()),
            })?;
            let r = min_antennas_mc(scenario, harq, snr, constraint, &corr, &settings)?;
            (r, mc_row(&settings).num("beta", corr.beta()))
        }
    };
    Ok(requirement_row(&scenario, &req).extend(extra))
}

pub fn mc_row(s: &McSettings) -> Row {
    Row::new().set("samples", s.samples).set("seed", s.seed)
}

/// Rows over `θ × snr × rate`.
pub fn dimension(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let scenario = scenario(cfg)?;
    let rates = nonempty(&cfg.rate, "rate")?;
    let snrs = nonempty(&cfg.snr_db, "snr-db")?;
    let constraints = cfg.constraints()?;
    if constraints.is_empty() {
        return Err(CliError::Usage("missing required flag --theta".into()));
    }
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let mut out = Collector::default();
    for c in &constraints {
        for &db in snrs {
            for &rate in rates {
                let harq = cfg.harq(rate)?;
                let base = scenario_row(&scenario)
                    .extend(harq_row(&harq))
                    .num("snr_db", db)
                    .num("theta", c.theta());
                let res = solve(scenario, &harq, db_to_linear(db), c, method, cfg);
                out.add(base, res)?;
            }
        }
    }
    Ok(out.finish())
}

fn schedule_text(powers_db: &[f64]) -> String {
    powers_db
        .iter()
        .map(|p| format!("{p}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// SNR points: `--snr-db`, or the first scheduled power when only a
/// schedule is given.
fn snr_points(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    if cfg.snr_db.is_empty() {
        if let Some(&first) = cfg.schedule.first() {
            return Ok(vec![first]);
        }
    }
    Ok(nonempty(&cfg.snr_db, "snr-db")?.to_vec())
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rates = nonempty(&cfg.rate, "rate")?;
    let snrs = snr_points(cfg)?;
    let corr = cfg.corr()?;
    let sched = cfg.schedule()?;
    let settings = cfg.mc(cfg.theta.first().copied());
    let mut out = Collector::default();
    for &db in &snrs {
        for &rate in rates {
            let geom = geometry(cfg, db_to_linear(db))?;
            let harq = cfg.harq(rate)?;
            let mut base = geometry_row(&geom)
                .extend(harq_row(&harq))
                .num("snr_db", db)
                .num("beta", corr.beta());
            if sched.is_some() {
                base = base.set("schedule_db", schedule_text(&cfg.schedule));
            }
            let res = estimate_outage(&geom, &harq, &corr, sched.as_ref(), &settings).map(|e| {
                let mut row = mc_row(&settings)
                    .set("violations", e.violations)
                    .num("p_hat", e.p_hat)
                    .num("ci_low", e.ci_low)
                    .num("ci_high", e.ci_high);
                let siso = geom.n_t() == 1
                    && geom.n_r() == 1
                    && harq.fading() == Fading::QuasiStatic
                    && harq.m() == 1
                    && sched.is_none();
                if siso {
                    row = row.num("closed_form", siso_outage_closed(geom.snr(), rate));
                }
                row
            });
            out.add(base, res)?;
        }
    }
    Ok(out.finish())
}

fn moments_row(m: &GaussianMoments, harq: &HarqConfig) -> Row {
    let x = outage_argument(m, harq);
    Row::new()
        .num("mu", m.mu)
        .num("sigma2", m.sigma2)
        .num("q_arg", x)
        .num("outage", mimo_harq::specfun::q_func(x))
}

/// A radiated SNR point with the dB value it came from.
struct Point {
    cons_db: Option<f64>,
    snr_db: Result<f64, Error>,
    phi: Result<f64, Error>,
}

/// Radiated SNR points: with a PA profile, the PA output for each
/// `--power-cons-db`; otherwise `--snr-db`, echoed unchanged.
fn radiated_points(cfg: &RunConfig) -> Result<Vec<Point>, CliError> {
    match cfg.pa()? {
        Some(pa) => Ok(nonempty(&cfg.power_cons_db, "power-cons-db")?
            .iter()
            .map(|&d| {
                let phi = pa_output(&pa, db_to_linear(d));
                Point {
                    cons_db: Some(d),
                    snr_db: phi.clone().map(linear_to_db),
                    phi,
                }
            })
            .collect()),
        None => Ok(nonempty(&cfg.snr_db, "snr-db")?
            .iter()
            .map(|&d| Point {
                cons_db: None,
                snr_db: Ok(d),
                phi: Ok(db_to_linear(d)),
            })
            .collect()),
    }
}

pub fn outage(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rates = nonempty(&cfg.rate, "rate")?;
    let mut out = Collector::default();
    if let Some(sched) = cfg.schedule()? {
        for &rate in rates {
            let harq = cfg.harq(rate)?;
            let geom = geometry(cfg, sched.powers()[0])?;
            let base = geometry_row(&geom)
                .extend(harq_row(&harq))
                .set("schedule_db", schedule_text(&cfg.schedule));
            let res = outage_power_alloc(&geom, &harq, &sched).and_then(|p| {
                let avg = average_power(&geom, &harq, &sched)?;
                Ok(Row::new()
                    .num("outage", p)
                    .num("average_power_db", linear_to_db(avg)))
            });
            out.add(base, res)?;
        }
        return Ok(out.finish());
    }
    for pt in radiated_points(cfg)? {
        for &rate in rates {
            let harq = cfg.harq(rate)?;
            let mut base = Row::new();
            if let Some(c) = pt.cons_db {
                base = base.num("power_cons_db", c);
            }
            let res = pt.phi.clone().and_then(|phi| {
                let geom = geometry(cfg, phi).map_err(to_core)?;
                let m = gaussian_moments(&geom);
                Ok(geometry_row(&geom)
                    .extend(harq_row(&harq))
                    .num("snr_db", pt.snr_db.clone()?)
                    .extend(moments_row(&m, &harq)))
            });
            out.add(base, res)?;
        }
    }
    Ok(out.finish())
}

fn to_core(e: CliError) -> Error {
    match e {
        CliError::Core(e) => e,
        other => Error::InvalidParameter(other.to_string()),
    }
}

pub fn rate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let constraints = cfg.constraints()?;
    if constraints.is_empty() {
        return Err(CliError::Usage("missing required flag --theta".into()));
    }
    let harq = cfg.harq(0.0)?;
    let pa = cfg.pa()?;
    let mut out = Collector::default();
    for c in &constraints {
        for pt in radiated_points(cfg)? {
            let mut base = Row::new()
                .set("fading", harq.fading().name())
                .set("m", harq.m())
                .set("t", harq.t())
                .num("theta", c.theta());
            if let Some(d) = pt.cons_db {
                base = base.num("power_cons_db", d);
            }
            let res = pt.phi.and_then(|phi| {
                let geom = geometry(cfg, phi).map_err(to_core)?;
                let r = match (&pa, pt.cons_db) {
                    (Some(p), Some(d)) => {
                        supported_rate(&geom, &harq, c, Some((p, db_to_linear(d))))?
                    }
                    _ => supported_rate(&geom, &harq, c, None)?,
                };
                Ok(geometry_row(&geom)
                    .num("snr_db", pt.snr_db?)
                    .num("rate_max", r))
            });
            out.add(base, res)?;
        }
    }
    Ok(out.finish())
}

pub fn gamma(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rates = nonempty(&cfg.rate, "rate")?;
    let snrs = nonempty(&cfg.snr_db, "snr-db")?;
    let method = cfg.method.unwrap_or(MethodArg::Closed);
    let corr = cfg.corr()?;
    let mut out = Collector::default();
    for &db in snrs {
        for &rate in rates {
            let geom = geometry(cfg, db_to_linear(db))?;
            let harq = cfg.harq(rate)?;
            let base = geometry_row(&geom)
                .extend(harq_row(&harq))
                .num("snr_db", db);
            let res = match method {
                MethodArg::Closed => gamma_closed(&geom, &harq).map(|g| {
                    Row::new()
                        .set("method", "closed")
                        .num("gamma", g.gamma)
                        .set("c", g.c)
                        .set("saturated", g.saturated)
                }),
                MethodArg::Mc => {
                    let settings = cfg.mc(cfg.theta.first().copied());
                    empirical_gamma_row(&geom, &harq, &settings, &corr)
                }
                _ => {
                    return Err(CliError::Usage(
                        "gamma supports --method closed or mc".into(),
                    ))
                }
            };
            out.add(base, res)?;
        }
    }
    Ok(out.finish())
}

/// `Γ = -ln p̂ / (N_t N_r)` from a simulation, with the interval obtained by
/// mapping the Wilson bounds through the same transform.
pub fn empirical_gamma_row(
    geom: &SystemGeometry,
    harq: &HarqConfig,
    settings: &McSettings,
    corr: &mimo_harq::mcsim::CorrelationSpec,
) -> Result<Row, Error> {
    let est = estimate_outage(geom, harq, corr, None, settings)?;
    let pairs = geom.n_t() as f64 * geom.n_r() as f64;
    let g = |p: f64| {
        if p > 0.0 {
            -p.ln() / pairs
        } else {
            f64::INFINITY
        }
    };
    let row = mc_row(settings)
        .set("method", "mc")
        .num("p_hat", est.p_hat)
        .num("ci_low", est.ci_low)
        .num("ci_high", est.ci_high);
    let gamma = if est.p_hat > 0.0 && est.p_hat < 1.0 {
        Some(gamma_empirical(est.p_hat, geom.n_t(), geom.n_r())?.gamma)
    } else {
        None
    };
    Ok(row
        .opt_num("gamma", gamma)
        .num("gamma_low", g(est.ci_high))
        .num("gamma_high", g(est.ci_low)))
}

pub const SWEEP_USAGE: &str = "usage: mimo-harq sweep --preset <fig1|fig2|fig3|fig4|fig5a|fig5b|fig5c|fig6a|fig6b|fig7> \
     or mimo-harq sweep --case <1-4> [--nt|--nr|--k] --rate R[,R..] --snr-db D[,D..] --theta T[,T..]";

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if let Some(name) = &cfg.preset {
        return presets::run(name, cfg);
    }
    if cfg.rate.is_empty() || cfg.snr_db.is_empty() || cfg.theta.is_empty() {
        return Err(CliError::Usage(format!("empty sweep grid\n{SWEEP_USAGE}")));
    }
    dimension(cfg)
}
