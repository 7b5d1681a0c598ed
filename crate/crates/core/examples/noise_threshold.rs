//! How much controller noise a stronger-than-quantum resource tolerates before
//! its channel is no better than the best quantum one.

use xor_szilard::engine::{noise_threshold, noise_threshold_bisect, simulated_noise_threshold};
use xor_szilard::games::{make_chsh, mix_with_uniform, pr_box};

fn main() -> xor_szilard::Result<()> {
    let wq = 0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2;
    for p in [1.0, 0.95, 0.9, 0.86] {
        let closed = noise_threshold(p, wq)?;
        let bisect = noise_threshold_bisect(p, wq, 1e-12)?;
        println!("p = {p:<5} delta* = {closed:.6} (bisection {bisect:.6})");
    }

    let g = make_chsh();
    let b = mix_with_uniform(&pr_box(&g), 0.9)?;
    let sim = simulated_noise_threshold(&g, &b, wq, 400_000, 3, 1e-6)?;
    println!("simulated for p = 0.95: delta* = {sim:.4}");

    match noise_threshold(0.8, wq) {
        Err(e) => println!("p = 0.8: {e}"),
        Ok(d) => println!("p = 0.8: {d}"),
    }
    Ok(())
}
