//! PQN noise injection against the bit-true quantizer on identical channel draws.
//!
//! ```text
//! cargo run --release --example oracle_equivalence
//! ```

use qmimo::uplink::{ergodic_sumrate, Mode, Receiver, UplinkConfig};

fn main() -> qmimo::Result<()> {
    println!("M = 32, K = 4, 0 dB, 500 trials");
    println!(" rx   b   PQN [Mbit/s]   hardware [Mbit/s]   gap");
    for rx in [Receiver::Mrc, Receiver::Zf] {
        for b in [1, 2, 3, 4, 6, 8] {
            let cfg = UplinkConfig::new(32, 4, 1000)
                .with_bits(b)
                .with_receiver(rx);
            let pqn = ergodic_sumrate(&cfg, 500, 7)?.sumrate;
            let hw = ergodic_sumrate(&cfg.clone().with_mode(Mode::Hardware), 500, 7)?.sumrate;
            println!(
                "{rx:>3} {b:3} {:14.2} {:19.2} {:6.2}%",
                pqn / 1e6,
                hw / 1e6,
                100.0 * (pqn - hw) / hw
            );
        }
    }
    Ok(())
}
