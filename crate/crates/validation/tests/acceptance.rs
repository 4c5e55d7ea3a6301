//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each, written to stdout
//! whether or not output is captured. The test fails if any criterion does.

use nalgebra::DMatrix;

use mimo_harq::asymptotic::gamma_empirical;
use mimo_harq::dimension::{
    min_antennas_closed, min_antennas_k1, min_antennas_mc, min_antennas_search, supported_rate,
    OutageConstraint, Scenario,
};
use mimo_harq::mcsim::{
    estimate_outage, mutual_info, sample_channel, siso_outage_closed, CorrelationSpec, McSettings,
    StreamRng,
};
use mimo_harq::model::{
    db_to_linear, gaussian_moments, outage_approx, outage_power_alloc, Fading, HarqConfig,
    PowerSchedule, Regime, SystemGeometry,
};
use mimo_harq::specfun::{inv_q, lambert_w, q_func};
use mimo_harq::Error;
use mimo_harq_cli::config::RunConfig;
use mimo_harq_cli::presets::{fig5a_curve, fig6b, first_meeting, FIG5A_THETAS, FIG6A};
use mimo_harq_validation::Report;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn settings(samples: u64, seed: u64) -> McSettings {
    McSettings::new(samples, seed).with_workers(workers())
}

fn count_of(s: &Scenario, n_t: u32, n_r: u32) -> u32 {
    match s {
        Scenario::Case2 { .. } => n_t,
        _ => n_r,
    }
}

/// Minimal simulated N_r for R at each θ, from one curve whose sample
/// count covers the smallest θ (10^8 >= the per-θ requirement).
fn fig5a_counts(report: &mut Report, id: &str, rate: f64, targets: [u32; 3]) {
    let curve = fig5a_curve(rate, &settings(100_000_000, 7)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (theta, want) in FIG5A_THETAS.iter().zip(targets) {
        match first_meeting(&curve, *theta) {
            Some(p) => {
                ok &= p.n_r.abs_diff(want) <= 1;
                parts.push(format!("theta={theta:e}: N_r={} (want {want})", p.n_r));
            }
            None => {
                ok = false;
                parts.push(format!("theta={theta:e}: none up to the curve end"));
            }
        }
    }
    report.record(
        id,
        ok,
        format!("R={rate}, 1e8 samples; {}", parts.join(", ")),
    );
}

fn criterion_3(report: &mut Report) {
    let s = Scenario::Case1 { n_t: 5 };
    let c = OutageConstraint::new(1e-4).unwrap();
    let snr = db_to_linear(5.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (m, want) in [(1u32, 95u32), (2, 15)] {
        let h = HarqConfig::new(Fading::QuasiStatic, m, 1, 20.0).unwrap();
        let req = min_antennas_search(s, &h, snr, &c).unwrap();
        let n = req.n_r_hat;
        let g = SystemGeometry::new(5, n, snr, Regime::Case1).unwrap();
        let est = estimate_outage(
            &g,
            &h,
            &CorrelationSpec::iid(),
            None,
            &settings(10_000_000, 3),
        )
        .unwrap();
        let close = n.abs_diff(want) <= 2;
        let confirmed = est.ci_low <= c.theta();
        ok &= close && confirmed;
        parts.push(format!(
            "M={m}: search {n} (want {want}), MC outage {:.3e} [{:.3e}, {:.3e}]",
            est.p_hat, est.ci_low, est.ci_high
        ));
    }
    report.record("3 harq-gain", ok, parts.join("; "));
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn harq_variants(m: u32, t: u32, rate: f64) -> Vec<HarqConfig> {
    let mut v = vec![HarqConfig::new(Fading::FastFading, m, t, rate).unwrap()];
    if t == 1 {
        v.push(HarqConfig::new(Fading::SlowFading, m, 1, rate).unwrap());
        v.push(HarqConfig::new(Fading::QuasiStatic, m, 1, rate).unwrap());
    }
    v
}

fn criterion_4(report: &mut Report) {
    let scenarios = [
        Scenario::Case1 { n_t: 1 },
        Scenario::Case1 { n_t: 5 },
        Scenario::Case2 { n_r: 1 },
        Scenario::Case2 { n_r: 2 },
        Scenario::Case3 { k: 0.5 },
        Scenario::Case3 { k: 1.0 },
        Scenario::Case3 { k: 2.0 },
    ];
    let rates: Vec<f64> = (1..=24).map(|i| 0.5 * i as f64).collect();
    let (mut compared, mut worst, mut outside) = (0u32, 0i64, 0u32);
    let mut worst_at = String::new();
    for theta in [1e-2, 1e-3, 1e-4] {
        let c = OutageConstraint::new(theta).unwrap();
        for db in [0.0, 5.0, 10.0, 15.0] {
            let snr = db_to_linear(db);
            for m in [1, 2] {
                for t in [1, 2] {
                    for &r in &rates {
                        for h in harq_variants(m, t, r) {
                            for s in scenarios {
                                let (Ok(a), Ok(b)) = (
                                    min_antennas_closed(s, &h, snr, &c),
                                    min_antennas_search(s, &h, snr, &c),
                                ) else {
                                    continue;
                                };
                                let d = (count_of(&s, a.n_t_hat, a.n_r_hat) as i64
                                    - count_of(&s, b.n_t_hat, b.n_r_hat) as i64)
                                    .abs();
                                compared += 1;
                                outside += u32::from(d > 2);
                                if d > worst {
                                    worst = d;
                                    worst_at = format!(
                                        "{s:?} {} M={m} T={t} R={r} {db} dB theta={theta:e}",
                                        h.fading().name()
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    report.record(
        "4a closed-vs-search cases 1-3",
        compared > 0 && worst <= 2,
        format!("{compared} points, {outside} outside +-2, worst |diff| = {worst} at {worst_at}"),
    );

    // Case 4: exact-moment search against simulation, and the closed-form
    // approximations against the search trend.
    let snr = db_to_linear(15.0);
    let c = OutageConstraint::new(1e-3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [0.5, 2.0] {
        let s = Scenario::Case4 { k };
        for r in [4.0, 10.0, 16.0] {
            let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, r).unwrap();
            let search = min_antennas_search(s, &h, snr, &c).unwrap().n_r_hat;
            let mc = min_antennas_mc(
                s,
                &h,
                snr,
                &c,
                &CorrelationSpec::iid(),
                &settings(200_000, 4),
            )
            .unwrap()
            .n_r_hat;
            ok &= search.abs_diff(mc) <= 2;
            parts.push(format!("K={k} R={r}: search {search} mc {mc}"));
        }
    }
    report.record("4b case-4 search-vs-mc", ok, parts.join(", "));

    let rates: Vec<f64> = (2..=20).map(|r| r as f64).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [0.5, 1.0, 2.0] {
        let s = Scenario::Case4 { k };
        let (mut closed, mut search) = (Vec::new(), Vec::new());
        for &r in &rates {
            let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, r).unwrap();
            let a = if k == 1.0 {
                min_antennas_k1(&h, snr, &c)
            } else {
                min_antennas_closed(s, &h, snr, &c)
            }
            .unwrap();
            closed.push(a.n_r_hat as f64);
            search.push(min_antennas_search(s, &h, snr, &c).unwrap().n_r_hat as f64);
        }
        let monotone = closed.windows(2).all(|w| w[0] <= w[1]);
        let rho = pearson(&closed, &rates);
        ok &= monotone && rho >= 0.99;
        parts.push(format!(
            "K={k}: monotone={monotone} corr(count, R)={rho:.4} corr(count, search)={:.4}",
            pearson(&closed, &search)
        ));
    }
    report.record("4c case-4 closed-form trend", ok, parts.join(", "));
}

/// 1% quantile of the per-realization mutual information from a pilot run.
fn pilot_quantile(g: &SystemGeometry, draws: usize) -> f64 {
    let mut rng = StreamRng::new(4242, g.n_r() as u64);
    let mut mi: Vec<f64> = (0..draws)
        .map(|_| {
            let h = sample_channel(g, &CorrelationSpec::iid(), &mut rng).unwrap();
            mutual_info(&h, g.snr(), g.n_t())
        })
        .collect();
    mi.sort_by(f64::total_cmp);
    mi[draws / 100]
}

fn criterion_5(report: &mut Report) {
    let snr = db_to_linear(-10.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, samples) in [(50u32, 10_000u64), (100, 4_000)] {
        let g = SystemGeometry::new(n, n, snr, Regime::Case3 { k: 1.0 }).unwrap();
        // Neither the low-SNR Case 3 mean nor the high-SNR exact sums place
        // R in a measurable range here, so R/M comes from a pilot run and is
        // shared by both fading models.
        let per_round = pilot_quantile(&g, 2000);
        for (fading, m, target) in [(Fading::QuasiStatic, 1, 0.5), (Fading::SlowFading, 2, 1.0)] {
            let rate = per_round * m as f64;
            let h = HarqConfig::new(fading, m, 1, rate).unwrap();
            let est = estimate_outage(&g, &h, &CorrelationSpec::iid(), None, &settings(samples, 5))
                .unwrap();
            let gamma = gamma_empirical(est.p_hat, n, n).map(|f| f.gamma);
            let pass = matches!(gamma, Ok(v) if (v - target).abs() <= 0.15 * target);
            ok &= pass;
            let shown = match gamma {
                Ok(v) => format!("{v:.4}"),
                Err(_) => "undefined".into(),
            };
            parts.push(format!(
                "N={n} {} M={m} R={rate:.3}: p_hat={:.3e} Gamma={shown} (want {target})",
                fading.name(),
                est.p_hat
            ));
        }
    }
    report.record("5 case-3 outage factor", ok, parts.join("; "));
}

fn criterion_6(report: &mut Report) {
    match FIG6A.gap_db(2, 10.0) {
        Ok(gap) => report.record(
            "6 pa-penalty",
            (gap - 11.0).abs() <= 2.0,
            format!(
                "gap {gap:.2} dB at R=10, N_r=2, N_t={} (want 11 +- 2)",
                FIG6A.n_t
            ),
        ),
        Err(e) => report.record("6 pa-penalty", false, e.to_string()),
    }
}

fn criterion_7(report: &mut Report) {
    let t = fig6b(&RunConfig::default()).unwrap();
    let u = t.column("count_uniform");
    let a = t.column("count_adaptive");
    let (mut rows, mut ok, mut worst) = (0, true, 0);
    for (u, a) in u.iter().zip(&a) {
        if let (Ok(u), Ok(a)) = (u.parse::<u32>(), a.parse::<u32>()) {
            rows += 1;
            ok &= a <= u && u - a <= 2;
            worst = worst.max(u.saturating_sub(a));
        }
    }
    report.record(
        "7 power-allocation",
        ok && rows > 0,
        format!("{rows} feasible rows, largest saving {worst} antennas"),
    );
}

fn criterion_8(report: &mut Report) {
    let mut w_err: f64 = 0.0;
    for i in 0..=400 {
        let x = 10f64.powf(-8.0 + 0.05 * i as f64);
        let w = lambert_w(x).unwrap();
        w_err = w_err.max((w * w.exp() - x).abs() / x.max(1.0));
    }
    for i in 1..400 {
        let x = -(-1f64).exp() * i as f64 / 400.0;
        let w = lambert_w(x).unwrap();
        w_err = w_err.max((w * w.exp() - x).abs());
    }
    let mut q_err: f64 = 0.0;
    for i in 0..=300 {
        let p = 10f64.powf(-15.0 + 0.05 * i as f64).min(0.999);
        q_err = q_err.max((q_func(inv_q(p).unwrap()) - p).abs() / p);
    }
    let (mut alloc_err, mut fast_slow_equal, mut rate_err): (f64, bool, f64) = (0.0, true, 0.0);
    let mut minimal = true;
    for (t, r) in [(1u32, 1u32), (4, 2), (16, 3), (2, 30), (64, 2), (8, 8)] {
        for db in [-5.0, 0.0, 10.0, 20.0] {
            let k = t as f64 / r as f64;
            for regime in [
                Regime::Case1,
                Regime::Case2,
                Regime::Case3 { k },
                Regime::Case4 { k },
            ] {
                let g = SystemGeometry::new(t, r, db_to_linear(db), regime).unwrap();
                let mo = gaussian_moments(&g);
                for m in [1, 2, 3] {
                    for rate in [0.5, 2.0, 6.0] {
                        let slow = HarqConfig::new(Fading::SlowFading, m, 1, rate).unwrap();
                        let fast = HarqConfig::new(Fading::FastFading, m, 1, rate).unwrap();
                        let sched = PowerSchedule::uniform(m, g.snr()).unwrap();
                        let a = outage_power_alloc(&g, &slow, &sched).unwrap();
                        alloc_err = alloc_err.max((a - outage_approx(&mo, &slow)).abs());
                        fast_slow_equal &= outage_approx(&mo, &slow) == outage_approx(&mo, &fast);
                    }
                    for theta in [1e-2, 1e-4] {
                        let c = OutageConstraint::new(theta).unwrap();
                        let h = HarqConfig::new(Fading::SlowFading, m, 1, 0.0).unwrap();
                        let r = supported_rate(&g, &h, &c, None).unwrap();
                        if r > 0.0 {
                            let p = outage_approx(&mo, &h.with_rate(r).unwrap());
                            rate_err = rate_err.max((p - theta).abs());
                        }
                    }
                }
            }
        }
    }
    for s in [
        Scenario::Case1 { n_t: 1 },
        Scenario::Case1 { n_t: 3 },
        Scenario::Case2 { n_r: 2 },
        Scenario::Case3 { k: 0.5 },
        Scenario::Case4 { k: 2.0 },
    ] {
        for rate in [1.0, 3.0, 7.0] {
            let h = HarqConfig::new(Fading::SlowFading, 2, 1, rate).unwrap();
            let c = OutageConstraint::new(1e-3).unwrap();
            let snr = db_to_linear(5.0);
            let req = match min_antennas_search(s, &h, snr, &c) {
                Ok(r) => r,
                Err(Error::Infeasible(_)) | Err(Error::SearchBound { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let n = count_of(&s, req.n_t_hat, req.n_r_hat);
            let meets = |n: u32| {
                let g = s.geometry(n, snr).unwrap();
                outage_approx(&gaussian_moments(&g), &h) <= c.theta()
            };
            minimal &= meets(n) && (n == 1 || !meets(n - 1));
        }
    }
    let ok = w_err <= 1e-10
        && q_err <= 1e-8
        && alloc_err <= 1e-14
        && fast_slow_equal
        && rate_err <= 1e-10
        && minimal;
    report.record(
        "8 properties",
        ok,
        format!(
            "W {w_err:.1e}, Q round trip {q_err:.1e}, equal powers {alloc_err:.1e}, \
             fast T=1 = slow {fast_slow_equal}, rate round trip {rate_err:.1e}, search minimal {minimal}"
        ),
    );
}

fn criterion_9(report: &mut Report) {
    let mut siso_ok = true;
    let mut worst_z: f64 = 0.0;
    for (i, db) in [0.0, 5.0, 10.0].into_iter().enumerate() {
        for (j, rate) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let snr = db_to_linear(db);
            let g = SystemGeometry::new(1, 1, snr, Regime::Case1).unwrap();
            let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, rate).unwrap();
            let s = settings(1_000_000, 100 + (3 * i + j) as u64);
            let e = estimate_outage(&g, &h, &CorrelationSpec::iid(), None, &s).unwrap();
            let p = siso_outage_closed(snr, rate);
            let z = (e.p_hat - p).abs() / e.std_error_at(p);
            worst_z = worst_z.max(z);
            siso_ok &= z <= 3.0;
        }
    }

    let mut rng = StreamRng::new(99, 0);
    let mut mi_err: f64 = 0.0;
    for i in 0..100u32 {
        let (n_r, n_t) = (1 + i % 6, 1 + (i / 6) % 8);
        let snr = db_to_linear(-5.0 + (i % 4) as f64 * 8.0);
        let g = SystemGeometry::new(n_t, n_r, snr, Regime::Case1).unwrap();
        let h = sample_channel(&g, &CorrelationSpec::iid(), &mut rng).unwrap();
        let m = DMatrix::from_fn(n_r as usize, n_t as usize, |r, t| h.get(r, t));
        let s = snr / n_t as f64;
        let oracle: f64 = (&m * m.adjoint())
            .symmetric_eigenvalues()
            .iter()
            .map(|l| (s * l).ln_1p())
            .sum();
        mi_err = mi_err.max((mutual_info(&h, snr, n_t) - oracle).abs());
    }

    let mut var_err: f64 = 0.0;
    for beta in [0.0, 0.4, 0.8, 1.0] {
        let corr = CorrelationSpec::new(beta).unwrap();
        let g = SystemGeometry::new(3, 1, 1.0, Regime::Case2).unwrap();
        let mut rng = StreamRng::new(8, (beta * 10.0) as u64);
        let draws = 1_000_000;
        let mut power = [0.0; 3];
        for _ in 0..draws {
            let h = sample_channel(&g, &corr, &mut rng).unwrap();
            for (t, p) in power.iter_mut().enumerate() {
                *p += h.get(0, t).norm_sqr();
            }
        }
        for p in power {
            var_err = var_err.max((p / draws as f64 - 1.0).abs());
        }
    }
    report.record(
        "9 oracles",
        siso_ok && mi_err <= 1e-10 && var_err <= 0.01,
        format!(
            "SISO worst |z| {worst_z:.2} (<= 3), log-det vs eigenvalues {mi_err:.1e}, \
             correlated variance error {var_err:.4}"
        ),
    );
}

#[test]
fn acceptance() {
    let mut report = Report::new();
    fig5a_counts(&mut report, "1 fig5a R=3", 3.0, [16, 18, 20]);
    fig5a_counts(&mut report, "2 fig5a R=4", 4.0, [31, 35, 38]);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report);
    report.finish();
}
