//! Full-cycle bookkeeping: feedback extraction minus the cost of erasing the
//! one-bit record never comes out positive.

use xor_szilard::channel::BinaryChannel;
use xor_szilard::engine::{cycle_ledger, memory_ledger, memory_ledger_exact, sample_records};
use xor_szilard::games::{make_chsh, quantum_optimal_chsh};

fn main() -> xor_szilard::Result<()> {
    println!("{:>6} {:>9} {:>9} {:>9}", "p", "W_fb", "W_reset", "W_net");
    for p in [0.5, 0.75, 0.853553, 0.9, 1.0] {
        let l = cycle_ledger(&BinaryChannel::new(p)?);
        println!(
            "{p:>6} {:>9.6} {:>9.6} {:>9.6}",
            l.w_fb_bits, l.w_reset_bits, l.w_net_bits
        );
    }

    // The compressed bit is never more expensive to erase than the transcript.
    let g = make_chsh();
    let b = quantum_optimal_chsh();
    let exact = memory_ledger_exact(&g, &b)?;
    println!(
        "exact:   H(G) = {:.4}, H(M) = {:.4}",
        exact.h_g_bits, exact.h_m_bits
    );
    let records = sample_records(&g, &b, 100_000, 11)?;
    let sampled = memory_ledger(&records)?;
    println!(
        "sampled: H(G) = {:.4}, H(M) = {:.4}",
        sampled.h_g_bits, sampled.h_m_bits
    );
    Ok(())
}
