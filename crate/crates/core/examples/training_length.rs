//! Energy efficiency against training length for a 0 dB, K/T = 0.01 system.
//!
//! ```text
//! cargo run --release --example training_length
//! ```

use qmimo::calibration::BackoffCalibration;
use qmimo::sweep::{find_optimal_training, run_sweep, Axis, Column, Param, SweepSpec};
use qmimo::uplink::{Backoff, Receiver};

fn main() -> qmimo::Result<()> {
    let spec = SweepSpec::new(Backoff::from_calibration(&BackoffCalibration::bundled()))
        .with_axis(Axis::new(Param::B, [2.0, 4.0, 10.0]))
        .with_axis(Axis::new(Param::TauOverT, [0.0, 0.02, 0.05, 0.1, 0.2, 0.4]))
        .with_receivers(&[Receiver::Mrc, Receiver::Zf])
        .with_trials(500);
    let records = run_sweep(&spec, 1)?;
    println!("rx   b  tau   eta [Mbit/J]");
    for r in &records {
        println!(
            "{:>3} {:2} {:4} {:10.3}",
            r.receiver,
            r.point.b,
            r.point.tau,
            r.eta / 1e6
        );
    }
    println!();
    for opt in find_optimal_training(&records, &[Column::Receiver, Column::B])? {
        println!("{opt}");
    }
    Ok(())
}
