use proptest::prelude::*;

use qmimo::calibration::BackoffCalibration;
use qmimo::linalg::{distance_from_identity, gram, herm_dot, hermitian, CMat};
use qmimo::power::{energy_efficiency, total_power, AdcPowerParams};
use qmimo::rng::CounterRng;
use qmimo::sweep::{resolve_point, run_sweep, Axis, Param, SweepSpec};
use qmimo::uplink::{
    agc_gain, draw_channel, ergodic_sumrate, generate_pilots, run_trial, trial_rng, Backoff, Mode,
    Receiver, TrialOutcome, UplinkConfig,
};

fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pilots_are_orthonormal_and_invertible(k in 1usize..12, extra in 0usize..20, p_u in 0.1f64..10.0, seed in any::<u64>()) {
        let tau = k + extra;
        let p = generate_pilots(k, tau, p_u).unwrap();
        prop_assert!(distance_from_identity(gram(hermitian(p.psi.view()).view()).view()) <= 1e-12);
        let mut rng = CounterRng::new(seed);
        let h = ndarray::Array2::from_shape_fn((7, k), |_| rng.complex_normal(1.0));
        let recovered = h.dot(&p.phi).dot(&p.pinv);
        prop_assert!(max_abs(&(&recovered - &h)) <= 1e-10);
    }

    #[test]
    fn agc_gain_formula(mu in 0.5f64..64.0, p_u in 0.01f64..10.0, p_n in 0.01f64..10.0, beta in prop::collection::vec(0.01f64..2.0, 1..8)) {
        let agc = agc_gain(mu, p_u, &beta, p_n).unwrap();
        let expected = 2.0 / (mu * (p_u * beta.iter().sum::<f64>() + p_n));
        prop_assert!((agc.gamma - expected).abs() <= 1e-14 * expected);
        prop_assert_eq!(agc.mu_used, mu);
    }

    #[test]
    fn kept_trials_satisfy_zf_identity_and_nonnegative_sinqr(
        k in 1usize..6,
        extra_m in 0usize..20,
        extra_tau in 0usize..6,
        b in 1u32..=12,
        snr_db in -10.0f64..20.0,
        seed in any::<u64>(),
    ) {
        let m = k + 1 + extra_m;
        let cfg = UplinkConfig::new(m, k, 100)
            .with_tau(k + extra_tau)
            .with_bits(b)
            .with_snr_db(snr_db);
        let pilots = generate_pilots(cfg.k, cfg.tau, cfg.p_u).unwrap();
        let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
        for t in 0..4 {
            match run_trial(&cfg, &pilots, &agc, &mut trial_rng(seed, t)).unwrap() {
                TrialOutcome::Kept(ws) => {
                    let err = distance_from_identity(herm_dot(ws.a_hat.view(), ws.hhat.view()).view());
                    prop_assert!(err <= 1e-9, "ZF identity off by {}", err);
                    prop_assert!(ws.sinqr.iter().all(|&s| s >= 0.0 && s.is_finite()));
                    prop_assert!((ws.p_q - (2.0 / 3.0) * (-2.0 * b as f64).exp2()).abs() <= 1e-15);
                }
                TrialOutcome::Singular { condition } => prop_assert!(condition > 1e12),
            }
        }
    }

    #[test]
    fn sumrate_is_nonnegative_and_trials_add_up(
        k in 1usize..5,
        m in 5usize..20,
        b in 1u32..=10,
        rx in prop_oneof![Just(Receiver::Mrc), Just(Receiver::Zf)],
        seed in any::<u64>(),
    ) {
        let cfg = UplinkConfig::new(m, k, 50).with_bits(b).with_receiver(rx);
        let r = ergodic_sumrate(&cfg, 40, seed).unwrap();
        prop_assert!(r.sumrate >= 0.0);
        prop_assert_eq!(r.trials_used + r.trials_discarded, 40);
    }

    #[test]
    fn power_budget_identities(m in 1usize..500, b in 1u32..=16, alpha in 0.0f64..1e6, sumrate in 0.0f64..1e10) {
        let params = AdcPowerParams::default();
        let budget = total_power(m, b, alpha, &params, 2).unwrap();
        let p_b = qmimo::power::adc_power(b, &params).unwrap();
        let p_ref = qmimo::power::adc_power(2, &params).unwrap();
        let expected = 2.0 * m as f64 * (p_b + alpha * p_ref);
        prop_assert!((budget.p_tot - expected).abs() <= 1e-12 * expected);
        prop_assert!(budget.p_rest >= 0.0 && budget.p_adc_total > 0.0);
        let double = total_power(m, b, 2.0 * alpha, &params, 2).unwrap();
        let lin = double.p_tot - budget.p_tot;
        prop_assert!((lin - budget.p_rest).abs() <= 1e-9 * double.p_tot);
        let eff = energy_efficiency(sumrate, &budget).unwrap();
        prop_assert!((eff.eta * eff.p_tot - sumrate).abs() <= 1e-12 * sumrate.max(1.0));
    }

    #[test]
    fn derived_grid_points_are_valid(
        b in 1u32..=12,
        m in 1usize..500,
        k_over_m in 0.001f64..1.0,
        k_over_t in 0.001f64..1.0,
        tau_over_t in 0.0f64..1.0,
    ) {
        let values = [b as f64, m as f64, k_over_m, k_over_t, 0.0, 1e4, tau_over_t];
        if let Ok(p) = resolve_point(&values) {
            prop_assert_eq!(p.k, ((k_over_m * m as f64).round() as usize).max(1));
            prop_assert!(p.k <= p.m && p.k <= p.tau && p.tau <= p.t);
            let cfg = UplinkConfig::new(p.m, p.k, p.t).with_tau(p.tau).with_bits(p.b);
            prop_assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
        }
    }
}

#[test]
fn channel_entries_have_half_variance_per_dimension() {
    let n = 1_000_000usize;
    let agc = agc_gain(1.0, 1.0, &[1.0; 10], 1.0).unwrap();
    let mut rng = CounterRng::new(5);
    let ch = draw_channel(n / 10, 10, &[1.0; 10], &agc, &mut rng);
    let (mut re, mut im) = (0.0, 0.0);
    for z in ch.h.iter() {
        re += z.re * z.re;
        im += z.im * z.im;
    }
    let (re, im) = (re / n as f64, im / n as f64);
    assert!((re - 0.5).abs() <= 0.005, "Re variance {re}");
    assert!((im - 0.5).abs() <= 0.005, "Im variance {im}");
}

#[test]
fn hardware_and_pqn_agree_at_moderate_resolution() {
    for b in [4, 8] {
        let cfg = UplinkConfig::new(16, 2, 200).with_bits(b);
        let pqn = ergodic_sumrate(&cfg, 300, 3).unwrap().sumrate;
        let hw = ergodic_sumrate(&cfg.clone().with_mode(Mode::Hardware), 300, 3)
            .unwrap()
            .sumrate;
        assert!((hw - pqn).abs() / hw <= 0.05, "b = {b}: {pqn} vs {hw}");
    }
}

#[test]
fn efficiency_falls_at_very_high_resolution() {
    let spec = SweepSpec::new(Backoff::from_calibration(&BackoffCalibration::bundled()))
        .with_axis(Axis::new(Param::B, [10.0, 16.0]))
        .with_trials(200);
    let r = run_sweep(&spec, 1).unwrap();
    assert!(
        r[1].eta < r[0].eta,
        "eta(16) = {} vs eta(10) = {}",
        r[1].eta,
        r[0].eta
    );
    for rec in &r {
        assert!((rec.eta - rec.sumrate / rec.p_tot).abs() <= 1e-12 * rec.eta);
        assert_eq!(rec.trials_used + rec.trials_discarded, 200);
    }
}
