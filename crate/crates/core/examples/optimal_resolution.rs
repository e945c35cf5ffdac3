//! Energy-optimal ADC resolution over architecture factor and SNR (the `fig4` preset).
//!
//! ```text
//! cargo run --release --example optimal_resolution [-- trials]
//! ```

use qmimo::calibration::BackoffCalibration;
use qmimo::sweep::{find_optimal_b, run_sweep, Preset, SweepSpec};
use qmimo::uplink::{Backoff, Receiver};

fn main() -> qmimo::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .map_or(500, |s| s.parse().expect("trial count"));
    let spec = Preset::Fig4
        .apply(SweepSpec::new(Backoff::from_calibration(
            &BackoffCalibration::bundled(),
        )))
        .with_receivers(&[Receiver::Mrc, Receiver::Zf])
        .with_trials(trials);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let records = run_sweep(&spec, workers)?;
    for opt in find_optimal_b(&records, &Preset::Fig4.group_keys())? {
        println!("{opt}");
    }
    Ok(())
}
