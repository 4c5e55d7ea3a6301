//! Monte Carlo checks against closed forms and an independent eigenvalue
//! computation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use mimo_harq::mcsim::{
    estimate_outage, mutual_info, sample_channel, siso_outage_closed, ChannelSample,
    CorrelationSpec, McSettings, StreamRng,
};
use mimo_harq::model::{
    db_to_linear, gaussian_moments, Fading, HarqConfig, Regime, SystemGeometry,
};

fn eigen_logdet(h: &ChannelSample, snr: f64) -> f64 {
    let m = DMatrix::from_fn(h.n_r(), h.n_t(), |r, t| h.get(r, t));
    let gram = &m * m.adjoint();
    let s = snr / h.n_t() as f64;
    gram.symmetric_eigenvalues()
        .iter()
        .map(|l| (s * l).ln_1p())
        .sum()
}

#[test]
fn mutual_info_matches_eigenvalues() {
    let mut rng = StreamRng::new(2024, 0);
    let mut worst: f64 = 0.0;
    for i in 0..100u32 {
        let n_r = 1 + i % 7;
        let n_t = 1 + (i / 7) % 9;
        let snr = db_to_linear(-10.0 + (i % 5) as f64 * 10.0);
        let g = SystemGeometry::new(n_t, n_r, snr, Regime::Case1).unwrap();
        let h = sample_channel(&g, &CorrelationSpec::iid(), &mut rng).unwrap();
        let a = mutual_info(&h, snr, n_t);
        let b = eigen_logdet(&h, snr);
        worst = worst.max((a - b).abs());
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn mutual_info_of_fixed_matrix() {
    // [[1, i], [0, 2]] at snr 2 over two transmit antennas: det(I + HH^h).
    let h = ChannelSample::from_rows(
        2,
        2,
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
        ],
    )
    .unwrap();
    // HH^h = [[2, 2i], [-2i, 4]], det(I + .) = 3 * 5 - 4 = 11.
    assert!((mutual_info(&h, 2.0, 2) - 11f64.ln()).abs() < 1e-14);
}

#[test]
fn siso_estimates_match_closed_form() {
    for (i, db) in [0.0, 5.0, 10.0].into_iter().enumerate() {
        for (j, rate) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let snr = db_to_linear(db);
            let g = SystemGeometry::new(1, 1, snr, Regime::Case1).unwrap();
            let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, rate).unwrap();
            let s = McSettings::new(1_000_000, 10 + (3 * i + j) as u64).with_workers(4);
            let e = estimate_outage(&g, &h, &CorrelationSpec::iid(), None, &s).unwrap();
            let p = siso_outage_closed(snr, rate);
            let tol = 3.0 * e.std_error_at(p);
            assert!(
                (e.p_hat - p).abs() <= tol,
                "{db} dB R={rate}: {} vs {p}",
                e.p_hat
            );
        }
    }
}

#[test]
fn correlated_marginals_have_unit_variance() {
    let n_t = 4;
    let draws = 1_000_000;
    for beta in [0.0, 0.4, 0.8, 1.0] {
        let corr = CorrelationSpec::new(beta).unwrap();
        let g = SystemGeometry::new(n_t, 1, 1.0, Regime::Case2).unwrap();
        let mut rng = StreamRng::new(5, (beta * 10.0) as u64);
        let mut power = vec![0.0; n_t as usize];
        let mut lag1 = 0.0;
        for _ in 0..draws {
            let h = sample_channel(&g, &corr, &mut rng).unwrap();
            for (t, p) in power.iter_mut().enumerate() {
                *p += h.get(0, t).norm_sqr();
            }
            lag1 += (h.get(0, 1) * h.get(0, 0).conj()).re;
        }
        for p in &power {
            let v = p / draws as f64;
            assert!((v - 1.0).abs() <= 0.01, "beta {beta}: {v}");
        }
        let rho = lag1 / draws as f64;
        assert!((rho - beta).abs() <= 0.01, "beta {beta}: lag-1 {rho}");
    }
}

#[test]
fn fast_with_two_realizations_matches_slow_with_two_rounds() {
    let g = SystemGeometry::new(2, 2, db_to_linear(0.0), Regime::Case1).unwrap();
    let fast = HarqConfig::new(Fading::FastFading, 1, 2, 1.2).unwrap();
    let slow = HarqConfig::new(Fading::SlowFading, 2, 1, 2.4).unwrap();
    let corr = CorrelationSpec::iid();
    let a = estimate_outage(&g, &fast, &corr, None, &McSettings::new(400_000, 1)).unwrap();
    let b = estimate_outage(&g, &slow, &corr, None, &McSettings::new(400_000, 2)).unwrap();
    let p = 0.5 * (a.p_hat + b.p_hat);
    let joint = (a.std_error_at(p).powi(2) + b.std_error_at(p).powi(2)).sqrt();
    assert!(
        (a.p_hat - b.p_hat).abs() <= 3.0 * joint,
        "{} {}",
        a.p_hat,
        b.p_hat
    );
}

#[test]
fn weak_correlation_matches_iid() {
    let g = SystemGeometry::new(8, 1, db_to_linear(0.0), Regime::Case2).unwrap();
    let h = HarqConfig::new(Fading::QuasiStatic, 1, 1, 0.5).unwrap();
    let s = McSettings::new(400_000, 9);
    let iid = estimate_outage(&g, &h, &CorrelationSpec::iid(), None, &s).unwrap();
    let weak = CorrelationSpec::new(1e-9).unwrap();
    let corr = estimate_outage(&g, &h, &weak, None, &s).unwrap();
    let p = iid.p_hat;
    let joint = 2f64.sqrt() * iid.std_error_at(p);
    assert!(
        (iid.p_hat - corr.p_hat).abs() <= 4.0 * joint,
        "{} {}",
        iid.p_hat,
        corr.p_hat
    );
}

#[test]
fn gaussian_moments_improve_with_receive_antennas() {
    // Case 1 moments are asymptotic in n_r; the relative error of the
    // variance should shrink as n_r grows.
    let n_t = 2;
    let snr = db_to_linear(5.0);
    let draws = 40_000;
    let mut errs = Vec::new();
    for n_r in [4u32, 16, 64] {
        let g = SystemGeometry::new(n_t, n_r, snr, Regime::Case1).unwrap();
        let m = gaussian_moments(&g);
        let mut rng = StreamRng::new(77, n_r as u64);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let h = sample_channel(&g, &CorrelationSpec::iid(), &mut rng).unwrap();
            let x = mutual_info(&h, snr, n_t);
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / draws as f64;
        let var = s2 / draws as f64 - mean * mean;
        let mean_err = (mean - m.mu).abs() / m.mu;
        let var_err = (var - m.sigma2).abs() / m.sigma2;
        errs.push((mean_err, var_err));
    }
    assert!(errs[2].0 < errs[0].0, "{errs:?}");
    assert!(errs[2].1 < errs[0].1, "{errs:?}");
    assert!(errs[2].0 < 0.01 && errs[2].1 < 0.1, "{errs:?}");
}
