//! Thermodynamic value of XOR-game side information.
//!
//! A thermal bit is embedded into a two-player XOR game so that winning the
//! game is the same event as a controller correctly predicting the bit. The
//! resulting binary symmetric channel is then valued by the reversible work a
//! Szilard engine can extract from it.
//!
//! * [`games`]: games, behaviours, correlators and winning probabilities
//! * [`optimize`]: local / quantum / nonsignalling game values
//! * [`channel`]: the induced channel and its information content
//! * [`engine`]: feedback work, cycle ledgers, Monte Carlo rounds
//! * [`dynamics`]: finite-time branch protocol and its dissipation
//! * [`cli`]: the command-line front end used by the `xor-szilard` binary

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod games;
pub mod optimize;
pub mod rng;

pub use error::{Error, ErrorClass, Result};

/// Formats `x` with nine significant digits, always with `.` as separator.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..=9).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::sig9;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(0.18872187554), "0.188721876");
        assert_eq!(sig9(800.0), "800.000000");
        assert_eq!(sig9(7.5e-4), "0.000750000000");
        assert_eq!(sig9(1.2e-6), "1.20000000e-6");
    }
}
