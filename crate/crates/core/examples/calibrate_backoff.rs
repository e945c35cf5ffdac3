//! Calibrate the AGC backoff for b = 1..12 and check the fitted chord.
//!
//! ```text
//! cargo run --release --example calibrate_backoff [-- out.txt [samples]]
//! ```

use qmimo::calibration::{calibrate_table, save_calibration, CalibrationSettings};
use qmimo::quantizer::GaussianSamples;

fn main() -> qmimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next();
    let samples = args
        .next()
        .map(|s| s.parse::<f64>().expect("sample count") as usize)
        .unwrap_or(2_000_000);

    let settings = CalibrationSettings {
        n_samples: samples,
        ..CalibrationSettings::default()
    };
    let calib = calibrate_table(&settings)?;
    println!(
        "chord: mu(b) = {:.4} b + {:.4}",
        calib.chord_slope, calib.chord_intercept
    );

    // Fresh samples so the check is not graded on the data it was fitted to.
    let check = GaussianSamples::generate(samples, settings.seed + 1);
    println!(" b    mu*      dev(mu*)  mu_chord  dev(chord)  rho(chord)");
    for (b, e) in &calib.entries {
        let mu = calib.mu_chord(*b);
        let st = check.stats(*b, mu)?;
        println!(
            "{b:2} {:8.3} {:9.2} {:9.3} {:10.2} {:11.4}",
            e.mu_star, e.deviation_db, mu, st.deviation_db, st.rho_xq
        );
    }
    if let Some(path) = out {
        save_calibration(&calib, &path)?;
        println!("wrote {path}");
    }
    Ok(())
}
