//! Local, quantum and nonsignalling values of CHSH and a few chained games,
//! with the feedback-work ceiling each class implies.
//!
//! ```text
//! cargo run --release --example class_values
//! ```

use xor_szilard::engine::class_ceilings;
use xor_szilard::games::{make_chained, make_chsh};
use xor_szilard::optimize::{class_report, SeesawOptions};

fn main() -> xor_szilard::Result<()> {
    let opts = SeesawOptions::default();
    let mut games = vec![make_chsh()];
    for n in [3, 4, 8] {
        games.push(make_chained(n)?);
    }

    println!(
        "{:<12} {:>9} {:>9} {:>9}   ceilings [bits]",
        "game", "local", "quantum", "ns"
    );
    for g in &games {
        let r = class_report(g, &opts)?;
        let c = class_ceilings(&r);
        println!(
            "{:<12} {:>9.6} {:>9.6} {:>9.6}   {:.4} / {:.4} / {:.4}",
            g.name(),
            r.omega_local,
            r.omega_quantum,
            r.omega_ns,
            c.local_bits,
            c.quantum_bits,
            c.ns_bits
        );
    }
    Ok(())
}
