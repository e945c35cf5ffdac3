//! Measured quantization-noise variance against the PQN prediction, with and without backoff.
//!
//! ```text
//! cargo run --release --example quantizer_distortion
//! ```

use qmimo::quantizer::{make_quantizer, GaussianSamples};

fn main() -> qmimo::Result<()> {
    let q = make_quantizer(3, 1.0)?;
    let levels: Vec<String> = q.levels().map(|l| format!("{l:+.4}")).collect();
    println!(
        "3-bit quantizer, X_ol = 1, delta = {}: levels {}",
        q.delta(),
        levels.join(" ")
    );
    for x in [-1.3, -0.2, 0.0, 0.26, 0.9] {
        println!("  Q({x:+.2}) = {:+.4}", q.quantize(x));
    }

    let samples = GaussianSamples::generate(1_000_000, 3);
    println!("\n b    mu   E{{q^2}}/pqn   deviation_dB   rho_xq");
    for b in [1, 2, 4, 6, 8] {
        for mu in [1.0, 4.0, 16.0] {
            let st = samples.stats(b, mu)?;
            println!(
                "{b:2} {mu:5.1} {:11.4} {:13.2} {:9.4}",
                st.measured_var / st.pqn_var,
                st.deviation_db,
                st.rho_xq
            );
        }
    }
    Ok(())
}
