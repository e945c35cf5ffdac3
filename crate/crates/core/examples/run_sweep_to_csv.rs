//! Custom sweep over antennas and resolution, written as a results CSV.
//!
//! ```text
//! cargo run --release --example run_sweep_to_csv [-- out.csv]
//! ```

use qmimo::calibration::BackoffCalibration;
use qmimo::cli::output::{write_csv, CsvRow};
use qmimo::sweep::{run_sweep, Axis, Param, SweepSpec};
use qmimo::uplink::Backoff;

fn main() -> qmimo::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "sweep_m_b.csv".into());
    let spec = SweepSpec::new(Backoff::from_calibration(&BackoffCalibration::bundled()))
        .with_axis(Axis::new(Param::M, [32.0, 64.0, 128.0]))
        .with_axis(Axis::range(Param::B, 1, 10))
        .with_fixed(Param::SnrDb, 5.0)
        .with_trials(300)
        .with_seed(11);
    let records = run_sweep(&spec, 2)?;
    let rows: Vec<CsvRow> = records.iter().map(CsvRow::from).collect();
    write_csv(out.as_ref(), &rows)?;
    println!("{} rows written to {out}", rows.len());
    Ok(())
}
