//! ADC power against resolution and the resulting total power at several architecture factors.
//!
//! ```text
//! cargo run --example power_model
//! ```

use qmimo::power::{adc_power, architecture_factor, total_power, AdcPowerParams};

fn main() -> qmimo::Result<()> {
    let params = AdcPowerParams::default();
    let m = 100;
    println!(
        "M = {m}, f_s = {} MHz, Omega = {}",
        params.f_s / 1e6,
        params.omega
    );
    println!(
        "reference: 2M P_ADC(2) = {:.3} mW",
        2e3 * m as f64 * adc_power(2, &params)?
    );
    println!(
        "a 43.3 W non-ADC budget corresponds to alpha = {:.0}\n",
        architecture_factor(43.3, m, &params, 2)?
    );

    println!(" b   P_ADC [W]    P_tot alpha=1e2  alpha=1e4 [W]");
    for b in 1..=16 {
        let lo = total_power(m, b, 1e2, &params, 2)?;
        let hi = total_power(m, b, 1e4, &params, 2)?;
        println!(
            "{b:2} {:11.3e} {:14.4} {:12.4}",
            adc_power(b, &params)?,
            lo.p_tot,
            hi.p_tot
        );
    }
    Ok(())
}
