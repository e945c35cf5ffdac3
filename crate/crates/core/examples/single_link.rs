//! One uplink configuration under MRC and ZF: sumrate, power and bits per Joule.
//!
//! ```text
//! cargo run --release --example single_link [-- b snr_db]
//! ```

use qmimo::power::{energy_efficiency, total_power, AdcPowerParams};
use qmimo::uplink::{ergodic_sumrate, Receiver, UplinkConfig};

fn main() -> qmimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let b: u32 = args.next().map_or(4, |s| s.parse().expect("resolution"));
    let snr_db: f64 = args.next().map_or(0.0, |s| s.parse().expect("SNR in dB"));

    for rx in [Receiver::Mrc, Receiver::Zf] {
        let cfg = UplinkConfig::new(100, 10, 1000)
            .with_bits(b)
            .with_snr_db(snr_db)
            .with_receiver(rx);
        let rate = ergodic_sumrate(&cfg, 1000, 1)?;
        let budget = total_power(cfg.m, b, 1e4, &AdcPowerParams::default(), 2)?;
        let eff = energy_efficiency(rate.sumrate, &budget)?;
        println!(
            "{rx}: b = {b}, SNR = {snr_db} dB, mu = {:.2}: C = {:.1} Mbit/s, P = {:.2} W, eta = {:.3} Mbit/J",
            cfg.mu(),
            eff.sumrate / 1e6,
            eff.p_tot,
            eff.eta / 1e6
        );
    }
    Ok(())
}
