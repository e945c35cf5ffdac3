//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits non-zero
//! if any fails. Heavy sweeps run at full trial counts, so use the optimised test profile.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::time::Instant;

use qmimo::calibration::BackoffCalibration;
use qmimo::linalg::{distance_from_identity, herm_dot};
use qmimo::power::{adc_power, architecture_factor, AdcPowerParams};
use qmimo::quantizer::{make_quantizer, GaussianSamples};
use qmimo::rng::CounterRng;
use qmimo::sweep::{
    degradation_factor, find_optimal_b, find_optimal_training, run_sweep, Axis, Column, Param,
    Preset, SweepRecord, SweepSpec,
};
use qmimo::uplink::{
    agc_gain, draw_channel, ergodic_sumrate, estimate_channel, generate_pilots, run_trial,
    trial_rng, Backoff, Mode, Receiver, TrialOutcome, UplinkConfig,
};

const TRIALS: u64 = 2000;
const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn backoff() -> Backoff {
    Backoff::from_calibration(&BackoffCalibration::bundled())
}

fn sweep(preset: Preset, receivers: &[Receiver]) -> Vec<SweepRecord> {
    let spec = preset
        .apply(SweepSpec::new(backoff()))
        .with_receivers(receivers)
        .with_trials(TRIALS)
        .with_seed(SEED);
    let records = run_sweep(&spec, workers()).expect("sweep runs");
    assert!(
        records.iter().all(|r| r.status.is_ok()),
        "every grid point succeeds"
    );
    records
}

fn calibration_validity() -> Outcome {
    const SAMPLES: usize = 10_000_000;
    let calib = BackoffCalibration::bundled();
    let mut worst_dev = f64::NEG_INFINITY;
    let mut worst_rho: f64 = 0.0;
    let mut failing = Vec::new();
    // Fresh samples: the table was fitted on seed 7.
    let check = GaussianSamples::generate(SAMPLES, 8);
    for b in 1..=12 {
        let st = check.stats(b, calib.mu_chord(b)).unwrap();
        worst_dev = worst_dev.max(st.deviation_db);
        worst_rho = worst_rho.max(st.rho_xq.abs());
        if !(st.deviation_db <= -12.5 && st.rho_xq.abs() <= 0.05) {
            failing.push(format!(
                "b={b}: {:.2} dB, rho {:.4}",
                st.deviation_db, st.rho_xq
            ));
        }
    }
    let fitted_on_full = calib.n_samples == SAMPLES && calib.b_min == 1 && calib.b_max == 12;
    outcome(
        failing.is_empty() && fitted_on_full,
        format!(
            "worst deviation {worst_dev:.2} dB (<= -12.5), worst |rho| {worst_rho:.4} (<= 0.05), table n = {}; failing: [{}]",
            calib.n_samples,
            failing.join("; ")
        ),
    )
}

fn power_anchor() -> Outcome {
    let params = AdcPowerParams::default();
    let total = 2.0 * 100.0 * adc_power(2, &params).unwrap();
    let alpha = architecture_factor(43.3, 100, &params, 2).unwrap();
    let rel = (total - 3e-3).abs() / 3e-3;
    outcome(
        rel <= 0.01 && (1.4e4..=1.5e4).contains(&alpha),
        format!(
            "2M P_ADC = {:.4} mW (rel err {rel:.2e}), alpha = {alpha:.0}",
            total * 1e3
        ),
    )
}

fn bandwidth_invariance() -> Outcome {
    let etas: Vec<Vec<f64>> = [1e6, 20e6, 100e6]
        .iter()
        .map(|&bw| {
            let mut spec = SweepSpec::new(backoff())
                .with_axis(Axis::range(Param::B, 1, 12))
                .with_receivers(&[Receiver::Mrc, Receiver::Zf])
                .with_trials(200)
                .with_seed(SEED);
            spec.bandwidth = bw;
            run_sweep(&spec, workers())
                .unwrap()
                .iter()
                .map(|r| r.eta)
                .collect()
        })
        .collect();
    let worst = etas[1..]
        .iter()
        .flat_map(|e| e.iter().zip(&etas[0]).map(|(a, b)| (a - b).abs() / b.abs()))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!("max relative eta difference {worst:.2e} (<= 1e-12)"),
    )
}

fn optimal_resolution(fig4: &[SweepRecord]) -> Outcome {
    let keys = Preset::Fig4.group_keys();
    let opt = find_optimal_b(fig4, &keys).unwrap();
    let bs: Vec<u32> = opt.iter().map(|o| o.argmax as u32).collect();
    let bad: Vec<String> = opt
        .iter()
        .filter(|o| !(4.0..=10.0).contains(&o.argmax))
        .map(|o| o.to_string())
        .collect();
    outcome(
        bad.is_empty() && opt.len() == 24,
        format!(
            "{} cells, b* in [{}, {}] (need [4, 10]); outside: [{}]",
            opt.len(),
            bs.iter().min().unwrap(),
            bs.iter().max().unwrap(),
            bad.join("; ")
        ),
    )
}

fn zf_degradation(fig5: &[SweepRecord]) -> Outcome {
    let f = degradation_factor(fig5, &Preset::Fig5.group_keys()).unwrap();
    let best = f
        .iter()
        .max_by(|a, b| a.factor.total_cmp(&b.factor))
        .unwrap();
    outcome(
        (3.5..=8.0).contains(&best.factor) && f.len() == 16,
        format!(
            "max eta(b*)/eta(1) = {:.3} at K/M = {}, M = {} (need [3.5, 8])",
            best.factor,
            best.group
                .iter()
                .find(|(c, _)| *c == Column::KOverM)
                .map_or(f64::NAN, |g| g.1),
            best.group
                .iter()
                .find(|(c, _)| *c == Column::M)
                .map_or(f64::NAN, |g| g.1),
        ),
    )
}

fn mrc_insensitivity(fig4: &[SweepRecord]) -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for snr in [-10.0, 0.0, 10.0] {
        let spread = |rx: Receiver| {
            let etas: Vec<f64> = fig4
                .iter()
                .filter(|r| {
                    r.receiver == rx
                        && r.point.alpha == 1e4
                        && r.point.snr_db == snr
                        && (2..=12).contains(&r.point.b)
                })
                .map(|r| r.eta)
                .collect();
            assert_eq!(etas.len(), 11);
            etas.iter().cloned().fold(f64::MIN, f64::max)
                / etas.iter().cloned().fold(f64::MAX, f64::min)
        };
        let (mrc, zf) = (spread(Receiver::Mrc), spread(Receiver::Zf));
        pass &= mrc < zf;
        detail.push(format!("snr {snr} dB: MRC {mrc:.3} vs ZF {zf:.3}"));
    }
    outcome(
        pass,
        format!("spread max/min over b in [2, 12]: {}", detail.join(", ")),
    )
}

fn training_length(fig6: &[SweepRecord]) -> Outcome {
    let keys = Preset::Fig6.group_keys();
    let opt = find_optimal_training(fig6, &keys).unwrap();
    let tau_star = |rx: f64, kt: f64, snr: f64, b: f64| {
        opt.iter()
            .find(|o| {
                o.get(Column::Receiver) == Some(rx)
                    && o.get(Column::KOverT) == Some(kt)
                    && o.get(Column::SnrDb) == Some(snr)
                    && o.get(Column::B) == Some(b)
            })
            .map(|o| o.argmax)
            .expect("cell present")
    };
    let zf = Column::receiver_code(Receiver::Zf);
    let mrc = Column::receiver_code(Receiver::Mrc);
    let mut zf_ok = true;
    let mut zf_detail = Vec::new();
    for kt in [0.005, 0.01, 0.02] {
        let (lo, hi) = (tau_star(zf, kt, 0.0, 2.0), tau_star(zf, kt, 0.0, 10.0));
        zf_ok &= lo >= hi;
        zf_detail.push(format!("K/T {kt}: b2 {lo} vs b10 {hi}"));
    }
    // Smallest feasible training is tau = K, i.e. tau/T = K/T.
    let mrc_cells: Vec<_> = opt
        .iter()
        .filter(|o| o.get(Column::Receiver) == Some(mrc))
        .collect();
    let at_min = mrc_cells
        .iter()
        .filter(|o| (o.argmax - o.get(Column::KOverT).unwrap()).abs() < 1e-12)
        .count();
    let share = at_min as f64 / mrc_cells.len() as f64;
    outcome(
        zf_ok && share >= 0.8,
        format!(
            "ZF tau*/T at 0 dB: {}; MRC at minimum training in {at_min}/{} cells ({:.0}%, need >= 80%)",
            zf_detail.join(", "),
            mrc_cells.len(),
            share * 100.0
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for b in [4, 6, 8] {
        let base = UplinkConfig::new(32, 4, 1000).with_bits(b).with_snr_db(0.0);
        let pqn = ergodic_sumrate(&base, TRIALS, SEED).unwrap().sumrate;
        let hw = ergodic_sumrate(&base.clone().with_mode(Mode::Hardware), TRIALS, SEED)
            .unwrap()
            .sumrate;
        let rel = (hw - pqn).abs() / pqn;
        pass &= rel <= 0.05;
        detail.push(format!("b={b}: {:.2}%", rel * 100.0));
    }

    // Estimation error variance against (gamma p_n + p_q) / (p_u tau), averaged over 1e4 trials.
    let cfg = UplinkConfig::new(32, 4, 1000).with_bits(4).with_tau(8);
    let pilots = generate_pilots(cfg.k, cfg.tau, cfg.p_u).unwrap();
    let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
    let p_q = qmimo::uplink::quantization_noise_variance(cfg.b);
    let expected = (agc.gamma * cfg.p_n + p_q) / (cfg.p_u * cfg.tau as f64);
    let n = 10_000u64;
    let mut acc = 0.0;
    for t in 0..n {
        let mut rng = trial_rng(SEED, t);
        let ch = draw_channel(cfg.m, cfg.k, &cfg.beta, &agc, &mut rng);
        let hhat = estimate_channel(&cfg, ch.htilde.view(), &pilots, &agc, &mut rng).unwrap();
        acc += (&hhat - &ch.htilde)
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>();
    }
    let measured = acc / (n as f64 * (cfg.m * cfg.k) as f64);
    let var_rel = (measured - expected).abs() / expected;
    pass &= var_rel <= 0.03;
    outcome(
        pass,
        format!(
            "PQN vs hardware sumrate gap {} (<= 5%); estimation error variance off by {:.2}% (<= 3%)",
            detail.join(", "),
            var_rel * 100.0
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "[system]\ntrials = 300\nseed = 9\n\n[sweep]\nreceivers = [\"both\"]\n\n\
         [[sweep.axis]]\nname = \"b\"\nvalues = [1, 3, 5, 8]\n\n\
         [[sweep.axis]]\nname = \"M\"\nvalues = [20, 60]\n\n\
         [[sweep.axis]]\nname = \"snr_db\"\nvalues = [-10, 10]\n",
    )
    .unwrap();
    let run = |workers: usize| {
        let out = dir.path().join(format!("w{workers}.csv"));
        let code = qmimo::cli::run(
            [
                "qmimo",
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--workers",
                &workers.to_string(),
                "--out",
                out.to_str().unwrap(),
            ],
            &mut Vec::new(),
            &mut Vec::new(),
        );
        assert_eq!(code, 0);
        std::fs::read(out).unwrap()
    };
    let reference = run(1);
    let same = [2, 3, 8].iter().all(|&w| run(w) == reference);
    outcome(
        same,
        format!(
            "{} CSV bytes identical for workers 1, 2, 3, 8: {same}",
            reference.len()
        ),
    )
}

fn structural_identities() -> Outcome {
    // ZF: A_hat^H H_hat = I on every kept trial.
    let cfg = UplinkConfig::new(16, 8, 200).with_bits(3).with_tau(8);
    let pilots = generate_pilots(cfg.k, cfg.tau, cfg.p_u).unwrap();
    let agc = agc_gain(cfg.mu(), cfg.p_u, &cfg.beta, cfg.p_n).unwrap();
    let mut worst_zf: f64 = 0.0;
    let mut kept = 0;
    for t in 0..2000 {
        if let TrialOutcome::Kept(ws) =
            run_trial(&cfg, &pilots, &agc, &mut trial_rng(SEED, t)).unwrap()
        {
            kept += 1;
            worst_zf = worst_zf.max(distance_from_identity(
                herm_dot(ws.a_hat.view(), ws.hhat.view()).view(),
            ));
        }
    }

    // Granular bound on 1e6 fuzzed inputs.
    let mut rng = CounterRng::at(SEED, &[0x9e37]);
    let mut granular_violations = 0;
    for _ in 0..1_000_000 {
        let b = 1 + (rng.uniform() * 16.0) as u32;
        let x_ol = (rng.uniform() * 8.0 - 4.0).exp();
        let q = make_quantizer(b, x_ol).unwrap();
        let x = (2.0 * rng.uniform() - 1.0) * x_ol;
        if (q.quantize(x) - x).abs() > q.delta() / 2.0 * (1.0 + 1e-12) {
            granular_violations += 1;
        }
    }

    // Brute-force cell scan for b <= 4: the cell index is the number of thresholds below x.
    let mut scan_mismatches = 0;
    for b in 1..=4 {
        let q = make_quantizer(b, 1.5).unwrap();
        let thresholds: Vec<f64> = q.thresholds().collect();
        let levels: Vec<f64> = q.levels().collect();
        let mut probes: Vec<f64> = (0..=40_000)
            .map(|i| -3.0 + 6.0 * i as f64 / 40_000.0)
            .collect();
        probes.extend(&thresholds);
        for x in probes {
            let cell = thresholds.iter().filter(|&&t| t < x).count();
            if q.quantize(x) != levels[cell] {
                scan_mismatches += 1;
            }
        }
    }
    outcome(
        worst_zf <= 1e-9 && kept > 0 && granular_violations == 0 && scan_mismatches == 0,
        format!(
            "ZF identity error {worst_zf:.1e} over {kept} kept trials (<= 1e-9); granular violations {granular_violations}/1e6; cell-scan mismatches {scan_mismatches}"
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: BTreeMap<u32, (&str, Outcome)> = BTreeMap::new();
    let mut record = |n: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "criterion {n:>2} {:<26} {} ({:.1} s) {}",
            name,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        results.insert(n, (name, o));
    };

    // Sweeps are shared between criteria and built on first use, so the timing of the first
    // criterion that needs one includes it.
    let fig4 = OnceCell::new();
    let fig4 = || fig4.get_or_init(|| sweep(Preset::Fig4, &[Receiver::Mrc, Receiver::Zf]));
    let fig5 = OnceCell::new();
    let fig6 = OnceCell::new();

    record(1, "pqn-calibration-validity", &calibration_validity);
    record(2, "power-anchor", &power_anchor);
    record(3, "bandwidth-invariance", &bandwidth_invariance);
    record(
        4,
        "optimal-resolution-range",
        &|| optimal_resolution(fig4()),
    );
    record(5, "zf-degradation", &|| {
        zf_degradation(fig5.get_or_init(|| sweep(Preset::Fig5, &[Receiver::Zf])))
    });
    record(6, "mrc-insensitivity", &|| mrc_insensitivity(fig4()));
    record(7, "training-length", &|| {
        training_length(fig6.get_or_init(|| sweep(Preset::Fig6, &[Receiver::Mrc, Receiver::Zf])))
    });
    record(8, "oracle-equivalence", &oracle_equivalence);
    record(9, "determinism", &determinism);
    record(10, "structural-identities", &structural_identities);

    let failed: Vec<String> = results
        .iter()
        .filter(|(_, (_, o))| !o.pass)
        .map(|(n, (name, _))| format!("{n} ({name})"))
        .collect();
    println!(
        "acceptance: {}/{} passed in {:.0} s",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("acceptance: failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
